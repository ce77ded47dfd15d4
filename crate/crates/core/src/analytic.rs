//! Polynomial data families on the 1- and 2-simplex.
//!
//! Verification scenarios need the same smooth datum sampled at several
//! lattice resolutions, plus continuum reference values computed
//! independently of the lattice codepaths. This module provides small
//! polynomial types with exact derivatives, samplers producing the
//! discretized types, and a Simpson reference integrator.

use rand::Rng;

use crate::quadrature::{tri_index, tri_node_count};
use crate::simplex::{DiscretePath, DiscreteTriangle, TangentPath, TangentTriangle};

/// Polynomial in one variable `t`.
#[derive(Debug, Clone, Default)]
pub struct Poly1 {
    /// `(coeff, power)`
    pub terms: Vec<(f64, u32)>,
}

impl Poly1 {
    pub fn new(terms: Vec<(f64, u32)>) -> Self {
        Poly1 { terms }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(c, p)| c * t.powi(p as i32))
            .sum()
    }

    pub fn deriv(&self) -> Poly1 {
        Poly1 {
            terms: self
                .terms
                .iter()
                .filter(|&&(_, p)| p > 0)
                .map(|&(c, p)| (c * p as f64, p - 1))
                .collect(),
        }
    }

    pub fn random(rng: &mut impl Rng, degree: u32, amplitude: f64) -> Self {
        Poly1 {
            terms: (0..=degree)
                .map(|p| (amplitude * rng.gen_range(-1.0..1.0), p))
                .collect(),
        }
    }
}

/// Polynomial in two variables `(s1, s2)`.
#[derive(Debug, Clone, Default)]
pub struct Poly2 {
    /// `(coeff, power of s1, power of s2)`
    pub terms: Vec<(f64, u32, u32)>,
}

impl Poly2 {
    pub fn new(terms: Vec<(f64, u32, u32)>) -> Self {
        Poly2 { terms }
    }

    pub fn constant(c: f64) -> Self {
        Poly2 { terms: vec![(c, 0, 0)] }
    }

    pub fn eval(&self, s1: f64, s2: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(c, p, q)| c * s1.powi(p as i32) * s2.powi(q as i32))
            .sum()
    }

    pub fn d1(&self) -> Poly2 {
        Poly2 {
            terms: self
                .terms
                .iter()
                .filter(|&&(_, p, _)| p > 0)
                .map(|&(c, p, q)| (c * p as f64, p - 1, q))
                .collect(),
        }
    }

    pub fn d2(&self) -> Poly2 {
        Poly2 {
            terms: self
                .terms
                .iter()
                .filter(|&&(_, _, q)| q > 0)
                .map(|&(c, p, q)| (c * q as f64, p, q - 1))
                .collect(),
        }
    }

    /// Total-degree-bounded random polynomial.
    pub fn random(rng: &mut impl Rng, degree: u32, amplitude: f64) -> Self {
        let mut terms = Vec::new();
        for p in 0..=degree {
            for q in 0..=(degree - p) {
                terms.push((amplitude * rng.gen_range(-1.0..1.0), p, q));
            }
        }
        Poly2 { terms }
    }

    /// Restriction to coface `i` of the triangle, as exact values:
    /// `sigma_0(t) = (1-t, t)`, `sigma_1(t) = (0, t)`, `sigma_2(t) = (t, 0)`.
    pub fn on_face(&self, face: usize, t: f64) -> f64 {
        match face {
            0 => self.eval(1.0 - t, t),
            1 => self.eval(0.0, t),
            _ => self.eval(t, 0.0),
        }
    }

    /// Exact `d/dt` of the face restriction.
    pub fn on_face_deriv(&self, face: usize, t: f64) -> f64 {
        let (g1, g2) = (self.d1(), self.d2());
        match face {
            0 => -g1.eval(1.0 - t, t) + g2.eval(1.0 - t, t),
            1 => g2.eval(0.0, t),
            _ => g1.eval(t, 0.0),
        }
    }
}

/// Analytic path datum `(x(t), xi(t))` with polynomial components.
#[derive(Debug, Clone)]
pub struct PathFamily {
    pub x: Vec<Poly1>,
    pub xi: Vec<Poly1>,
}

impl PathFamily {
    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn sample(&self, subdiv: usize) -> DiscretePath {
        let n = self.dim();
        let x = (0..=subdiv)
            .map(|k| {
                let t = k as f64 / subdiv as f64;
                (0..n).map(|i| self.x[i].eval(t)).collect()
            })
            .collect();
        let xi = (0..=subdiv)
            .map(|k| {
                let t = k as f64 / subdiv as f64;
                (0..n).map(|i| self.xi[i].eval(t)).collect()
            })
            .collect();
        DiscretePath { dim: n, subdiv, x, xi }
    }

    pub fn random(rng: &mut impl Rng, dim: usize, degree: u32, amplitude: f64) -> Self {
        PathFamily {
            x: (0..dim).map(|_| Poly1::random(rng, degree, amplitude)).collect(),
            xi: (0..dim).map(|_| Poly1::random(rng, degree, amplitude)).collect(),
        }
    }
}

/// Analytic path tangent `(v(t), chi(t))`.
#[derive(Debug, Clone)]
pub struct PathTangentFamily {
    pub v: Vec<Poly1>,
    pub chi: Vec<Poly1>,
}

impl PathTangentFamily {
    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn sample(&self, subdiv: usize) -> TangentPath {
        let n = self.dim();
        let v = (0..=subdiv)
            .map(|k| {
                let t = k as f64 / subdiv as f64;
                (0..n).map(|i| self.v[i].eval(t)).collect()
            })
            .collect();
        let chi = (0..=subdiv)
            .map(|k| {
                let t = k as f64 / subdiv as f64;
                (0..n).map(|i| self.chi[i].eval(t)).collect()
            })
            .collect();
        TangentPath { dim: n, subdiv, v, chi }
    }

    pub fn random(rng: &mut impl Rng, dim: usize, degree: u32, amplitude: f64) -> Self {
        PathTangentFamily {
            v: (0..dim).map(|_| Poly1::random(rng, degree, amplitude)).collect(),
            chi: (0..dim).map(|_| Poly1::random(rng, degree, amplitude)).collect(),
        }
    }
}

/// Analytic triangle datum `(x(s), xi1(s), xi2(s))`.
#[derive(Debug, Clone)]
pub struct TriangleFamily {
    pub x: Vec<Poly2>,
    pub xi1: Vec<Poly2>,
    pub xi2: Vec<Poly2>,
}

fn sample_lattice(fields: &[Poly2], subdiv: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; fields.len()]; tri_node_count(subdiv)];
    for i in 0..=subdiv {
        for j in 0..=(subdiv - i) {
            let (s1, s2) = (i as f64 / subdiv as f64, j as f64 / subdiv as f64);
            let idx = tri_index(subdiv, i, j);
            for (c, f) in fields.iter().enumerate() {
                out[idx][c] = f.eval(s1, s2);
            }
        }
    }
    out
}

impl TriangleFamily {
    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn sample(&self, subdiv: usize) -> DiscreteTriangle {
        DiscreteTriangle {
            dim: self.dim(),
            subdiv,
            x: sample_lattice(&self.x, subdiv),
            xi1: sample_lattice(&self.xi1, subdiv),
            xi2: sample_lattice(&self.xi2, subdiv),
        }
    }

    pub fn random(rng: &mut impl Rng, dim: usize, degree: u32, amplitude: f64) -> Self {
        TriangleFamily {
            x: (0..dim).map(|_| Poly2::random(rng, degree, amplitude)).collect(),
            xi1: (0..dim).map(|_| Poly2::random(rng, degree, amplitude)).collect(),
            xi2: (0..dim).map(|_| Poly2::random(rng, degree, amplitude)).collect(),
        }
    }
}

/// Analytic triangle tangent `(v(s), chi1(s), chi2(s))`.
#[derive(Debug, Clone)]
pub struct TriangleTangentFamily {
    pub v: Vec<Poly2>,
    pub chi1: Vec<Poly2>,
    pub chi2: Vec<Poly2>,
}

impl TriangleTangentFamily {
    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn sample(&self, subdiv: usize) -> TangentTriangle {
        TangentTriangle {
            dim: self.dim(),
            subdiv,
            v: sample_lattice(&self.v, subdiv),
            chi1: sample_lattice(&self.chi1, subdiv),
            chi2: sample_lattice(&self.chi2, subdiv),
        }
    }

    pub fn random(rng: &mut impl Rng, dim: usize, degree: u32, amplitude: f64) -> Self {
        TriangleTangentFamily {
            v: (0..dim).map(|_| Poly2::random(rng, degree, amplitude)).collect(),
            chi1: (0..dim).map(|_| Poly2::random(rng, degree, amplitude)).collect(),
            chi2: (0..dim).map(|_| Poly2::random(rng, degree, amplitude)).collect(),
        }
    }

    /// Exact face restriction of the tangent: values of `v` along the edge
    /// and the pushed covector slot, as closures of `t`.
    pub fn face_values(&self, face: usize, t: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.dim();
        let v = (0..n).map(|i| self.v[i].on_face(face, t)).collect();
        let chi = (0..n)
            .map(|i| match face {
                0 => self.chi2[i].on_face(0, t) - self.chi1[i].on_face(0, t),
                1 => self.chi2[i].on_face(1, t),
                _ => self.chi1[i].on_face(2, t),
            })
            .collect();
        (v, chi)
    }
}

/// Exact face data of a triangle family: base point, pushed covector slot,
/// and the exact base velocity along the edge.
pub fn triangle_face_values(
    fam: &TriangleFamily,
    face: usize,
    t: f64,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = fam.dim();
    let x = (0..n).map(|i| fam.x[i].on_face(face, t)).collect();
    let xi = (0..n)
        .map(|i| match face {
            0 => fam.xi2[i].on_face(0, t) - fam.xi1[i].on_face(0, t),
            1 => fam.xi2[i].on_face(1, t),
            _ => fam.xi1[i].on_face(2, t),
        })
        .collect();
    let xdot = (0..n).map(|i| fam.x[i].on_face_deriv(face, t)).collect();
    (x, xi, xdot)
}

/// Composite Simpson rule on `[0,1]` (reference integrator; independent of
/// the trapezoid codepath used by the discretized forms).
pub fn simpson(f: impl Fn(f64) -> f64, panels: usize) -> f64 {
    let m = 2 * panels;
    let h = 1.0 / m as f64;
    let mut acc = f(0.0) + f(1.0);
    for k in 1..m {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(k as f64 * h);
    }
    acc * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poly_eval_and_deriv() {
        let p = Poly1::new(vec![(2.0, 0), (-1.0, 1), (3.0, 3)]);
        assert!((p.eval(2.0) - (2.0 - 2.0 + 24.0)).abs() < 1e-14);
        let d = p.deriv();
        assert!((d.eval(2.0) - (-1.0 + 36.0)).abs() < 1e-14);
    }

    #[test]
    fn face_restriction_matches_direct_eval() {
        let q = Poly2::new(vec![(1.0, 2, 0), (0.5, 1, 1), (-2.0, 0, 2)]);
        let t = 0.3;
        assert!((q.on_face(0, t) - q.eval(0.7, 0.3)).abs() < 1e-15);
        // chain rule along the diagonal edge
        let eps = 1e-6;
        let fd = (q.on_face(0, t + eps) - q.on_face(0, t - eps)) / (2.0 * eps);
        assert!((q.on_face_deriv(0, t) - fd).abs() < 1e-8);
    }

    #[test]
    fn simpson_is_high_order() {
        let exact = 1.0 / 7.0;
        let got = simpson(|t| t.powi(6), 256);
        assert!((got - exact).abs() < 1e-9);
    }

    #[test]
    fn samples_agree_with_family_values() {
        let fam = TriangleFamily {
            x: vec![Poly2::new(vec![(1.0, 1, 1)]), Poly2::constant(2.0)],
            xi1: vec![Poly2::new(vec![(1.0, 0, 1)]), Poly2::constant(0.0)],
            xi2: vec![Poly2::new(vec![(1.0, 2, 0)]), Poly2::constant(-1.0)],
        };
        let t = fam.sample(4);
        let idx = t.node(1, 2);
        assert!((t.x[idx][0] - 0.25 * 0.5).abs() < 1e-15);
        assert!((t.xi2[idx][0] - 0.0625).abs() < 1e-15);
    }
}
