//! Differential forms on the discretized mapping spaces.
//!
//! Forms on paths pair tangent data against the canonical symplectic
//! structure of `T*M` node by node and integrate with the trapezoid rule;
//! forms on triangles are evaluated as boundary integrals, an alternating
//! sum of face evaluations matching the simplicial coboundary, never as
//! interior lattice integrals. With that choice the coboundary identities
//! hold at machine precision and all discretization error sits in the
//! quadrature against the continuum.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::courant::TwistClass;
use crate::error::{Error, Result};
use crate::field::{four_form_derivative, SmoothField};
use crate::quadrature::edge_weights;
use crate::simplex::{
    displace_path, displace_triangle, face, face_tangent, path_derivative, DiffMode, DiscretePath,
    DiscreteTriangle, TangentPath, TangentTriangle,
};

/// Coupling of the transgression term inside the twisted forms.
///
/// Fixed by the requirement that the twisted 2-form vanish on the image of
/// algebroid-morphism tangents when the frame twist satisfies `H = dB` (the
/// same convention that makes two-form graphs involutive). With the bracket
/// twist bound as `iota_{X1} iota_{X2} H`, the transgression enters with a
/// minus sign.
pub const TRANSGRESSION_COUPLING: f64 = -1.0;

/// Step used for directional derivatives on the (linear) discretized
/// mapping space; tangents are normalized before differencing.
pub const MAPPING_FD_STEP: f64 = 1e-4;

type PathEval = dyn Fn(&DiscretePath, &[&TangentPath]) -> Result<f64> + Send + Sync;
type TriEval = dyn Fn(&DiscreteTriangle, &[&TangentTriangle]) -> Result<f64> + Send + Sync;

/// A degree-`k` form on the discretized path space.
#[derive(Clone)]
pub struct PathForm {
    degree: usize,
    eval: Arc<PathEval>,
}

/// A degree-`k` form on the discretized triangle space.
#[derive(Clone)]
pub struct TriangleForm {
    degree: usize,
    eval: Arc<TriEval>,
}

fn check_path_shapes(base: &DiscretePath, tangents: &[&TangentPath]) -> Result<()> {
    for t in tangents {
        if t.dim != base.dim || t.subdiv != base.subdiv {
            return Err(Error::ShapeMismatch(
                "tangent shape does not match the base path".into(),
            ));
        }
    }
    Ok(())
}

fn check_tri_shapes(base: &DiscreteTriangle, tangents: &[&TangentTriangle]) -> Result<()> {
    for t in tangents {
        if t.dim != base.dim || t.subdiv != base.subdiv {
            return Err(Error::ShapeMismatch(
                "tangent shape does not match the base triangle".into(),
            ));
        }
    }
    Ok(())
}

impl PathForm {
    pub fn new(
        degree: usize,
        eval: impl Fn(&DiscretePath, &[&TangentPath]) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        PathForm { degree, eval: Arc::new(eval) }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn apply(&self, base: &DiscretePath, tangents: &[&TangentPath]) -> Result<f64> {
        if tangents.len() != self.degree {
            return Err(Error::ShapeMismatch(format!(
                "degree-{} form applied to {} tangents",
                self.degree,
                tangents.len()
            )));
        }
        check_path_shapes(base, tangents)?;
        (self.eval)(base, tangents)
    }

    pub fn add(&self, other: &PathForm, weight: f64) -> Result<PathForm> {
        if self.degree != other.degree {
            return Err(Error::ShapeMismatch("adding forms of different degree".into()));
        }
        let (a, b) = (self.clone(), other.clone());
        Ok(PathForm::new(self.degree, move |base, tangents| {
            Ok((a.eval)(base, tangents)? + weight * (b.eval)(base, tangents)?)
        }))
    }
}

impl TriangleForm {
    pub fn new(
        degree: usize,
        eval: impl Fn(&DiscreteTriangle, &[&TangentTriangle]) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        TriangleForm { degree, eval: Arc::new(eval) }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn apply(&self, base: &DiscreteTriangle, tangents: &[&TangentTriangle]) -> Result<f64> {
        if tangents.len() != self.degree {
            return Err(Error::ShapeMismatch(format!(
                "degree-{} form applied to {} tangents",
                self.degree,
                tangents.len()
            )));
        }
        check_tri_shapes(base, tangents)?;
        (self.eval)(base, tangents)
    }

    pub fn add(&self, other: &TriangleForm, weight: f64) -> Result<TriangleForm> {
        if self.degree != other.degree {
            return Err(Error::ShapeMismatch("adding forms of different degree".into()));
        }
        let (a, b) = (self.clone(), other.clone());
        Ok(TriangleForm::new(self.degree, move |base, tangents| {
            Ok((a.eval)(base, tangents)? + weight * (b.eval)(base, tangents)?)
        }))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Canonical symplectic 2-form on paths:
/// `omega1(X, Y) = integral of v . chi' - v' . chi`.
pub fn omega1() -> PathForm {
    PathForm::new(2, |base, tangents| {
        let (x, y) = (tangents[0], tangents[1]);
        let w = edge_weights(base.subdiv + 1)?;
        let mut acc = 0.0;
        for k in 0..=base.subdiv {
            acc += w[k] * (dot(&x.v[k], &y.chi[k]) - dot(&y.v[k], &x.chi[k]));
        }
        Ok(acc)
    })
}

/// Tautological 1-form on paths: `lambda1(X) = integral of v . xi`
/// against the base covectors.
pub fn lambda1() -> PathForm {
    PathForm::new(1, |base, tangents| {
        let x = tangents[0];
        let w = edge_weights(base.subdiv + 1)?;
        let mut acc = 0.0;
        for k in 0..=base.subdiv {
            acc += w[k] * dot(&x.v[k], &base.xi[k]);
        }
        Ok(acc)
    })
}

/// Transgression of a background 3-form:
/// `integral of H(x(t))(v, v', xdot)`, reading only base directions.
pub fn phi_h_1(twist: &TwistClass) -> PathForm {
    let h = twist.three_form().cloned();
    PathForm::new(2, move |base, tangents| {
        let h = match &h {
            Some(h) => h,
            None => return Ok(0.0),
        };
        if h.dim() != base.dim {
            return Err(Error::DimensionMismatch(
                "twist dimension does not match path data".into(),
            ));
        }
        let (x, y) = (tangents[0], tangents[1]);
        let w = edge_weights(base.subdiv + 1)?;
        let xdot = path_derivative(&base.x, DiffMode::OneSidedO2)?;
        let mut acc = 0.0;
        for k in 0..=base.subdiv {
            acc += w[k] * h.contract(&base.x[k], &[&x.v[k], &y.v[k], &xdot[k]])?;
        }
        Ok(acc)
    })
}

/// Transgression of the exterior derivative of a 3-form (a 3-form on paths):
/// `integral of dH(v, v', v'', xdot)`. Nonzero only in dimension >= 4.
pub fn phi_dh_1(h: &SmoothField) -> PathForm {
    let h = h.clone();
    PathForm::new(3, move |base, tangents| {
        let n = base.dim;
        if h.dim() != n {
            return Err(Error::DimensionMismatch(
                "three-form dimension does not match path data".into(),
            ));
        }
        let w = edge_weights(base.subdiv + 1)?;
        let xdot = path_derivative(&base.x, DiffMode::OneSidedO2)?;
        let mut acc = 0.0;
        for k in 0..=base.subdiv {
            let dh = four_form_derivative(&h, &base.x[k])?;
            let (a, b, c) = (
                &tangents[0].v[k],
                &tangents[1].v[k],
                &tangents[2].v[k],
            );
            let d = &xdot[k];
            let mut val = 0.0;
            for i in 0..n {
                for j in 0..n {
                    for l in 0..n {
                        for m in 0..n {
                            val += dh[((i * n + j) * n + l) * n + m] * a[i] * b[j] * c[l] * d[m];
                        }
                    }
                }
            }
            acc += w[k] * val;
        }
        Ok(acc)
    })
}

/// Endpoint pairing of a 3-form (simplicial coboundary of the background
/// form, evaluated on path tangents): `H_{x(1)}(v, v', v'') - H_{x(0)}(...)`.
pub fn endpoint_three_form(h: &SmoothField) -> PathForm {
    let h = h.clone();
    PathForm::new(3, move |base, tangents| {
        let n = base.subdiv;
        let at = |k: usize| -> Result<f64> {
            h.contract(
                &base.x[k],
                &[&tangents[0].v[k], &tangents[1].v[k], &tangents[2].v[k]],
            )
        };
        Ok(at(n)? - at(0)?)
    })
}

/// Twisted symplectic form on paths with an explicit coupling (testing hook).
pub fn omega_h_1_with_coupling(twist: &TwistClass, coupling: f64) -> PathForm {
    omega1()
        .add(&phi_h_1(twist), coupling)
        .expect("degrees match")
}

/// Twisted symplectic form on paths, `omega1` plus the coupled transgression.
pub fn omega_h_1(twist: &TwistClass) -> PathForm {
    omega_h_1_with_coupling(twist, TRANSGRESSION_COUPLING)
}

/// Simplicial coboundary: `(delta f)(T; X, Y, ...) = sum_i (-1)^i f(d_i T; d_i X, ...)`.
pub fn coboundary(f: &PathForm) -> TriangleForm {
    let f = f.clone();
    TriangleForm::new(f.degree, move |base, tangents| {
        let mut acc = 0.0;
        for i in 0..3 {
            let fb = face(base, i)?;
            let ft: Vec<TangentPath> = tangents
                .iter()
                .map(|t| face_tangent(t, i))
                .collect::<Result<_>>()?;
            let refs: Vec<&TangentPath> = ft.iter().collect();
            let sign = if i == 1 { -1.0 } else { 1.0 };
            acc += sign * f.apply(&fb, &refs)?;
        }
        Ok(acc)
    })
}

/// Symplectic form on triangles, evaluated as the boundary integral
/// (the alternating face sum of `omega1`).
pub fn omega2() -> TriangleForm {
    coboundary(&omega1())
}

/// Boundary-integrated tautological form on triangles.
pub fn lambda2() -> TriangleForm {
    coboundary(&lambda1())
}

/// Boundary-integrated transgression on triangles.
pub fn phi_h_2(twist: &TwistClass) -> TriangleForm {
    coboundary(&phi_h_1(twist))
}

pub fn omega_h_2_with_coupling(twist: &TwistClass, coupling: f64) -> TriangleForm {
    coboundary(&omega_h_1_with_coupling(twist, coupling))
}

/// Twisted symplectic form on triangles.
pub fn omega_h_2(twist: &TwistClass) -> TriangleForm {
    omega_h_2_with_coupling(twist, TRANSGRESSION_COUPLING)
}

/// Exterior derivative on the discretized path space:
/// `d f (X_0..X_k) = sum_i (-1)^i D_{X_i} [f(.., X_i omitted, ..)]`
/// with normalized central differences of step `h`.
pub fn exterior_derivative_path(f: &PathForm, h: f64) -> PathForm {
    let f = f.clone();
    PathForm::new(f.degree + 1, move |base, tangents| {
        let mut acc = 0.0;
        for i in 0..tangents.len() {
            let others: Vec<&TangentPath> = tangents
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, t)| *t)
                .collect();
            let norm = tangents[i].norm();
            if norm == 0.0 {
                continue;
            }
            let unit = tangents[i].scale(1.0 / norm);
            let plus = f.apply(&displace_path(base, &unit, h)?, &others)?;
            let minus = f.apply(&displace_path(base, &unit, -h)?, &others)?;
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * norm * (plus - minus) / (2.0 * h);
        }
        Ok(acc)
    })
}

/// Exterior derivative on the discretized triangle space.
pub fn exterior_derivative_triangle(f: &TriangleForm, h: f64) -> TriangleForm {
    let f = f.clone();
    TriangleForm::new(f.degree + 1, move |base, tangents| {
        let mut acc = 0.0;
        for i in 0..tangents.len() {
            let others: Vec<&TangentTriangle> = tangents
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, t)| *t)
                .collect();
            let norm = tangents[i].norm();
            if norm == 0.0 {
                continue;
            }
            let unit = TangentTriangle {
                dim: tangents[i].dim,
                subdiv: tangents[i].subdiv,
                v: scale_rows(&tangents[i].v, 1.0 / norm),
                chi1: scale_rows(&tangents[i].chi1, 1.0 / norm),
                chi2: scale_rows(&tangents[i].chi2, 1.0 / norm),
            };
            let plus = f.apply(&displace_triangle(base, &unit, h)?, &others)?;
            let minus = f.apply(&displace_triangle(base, &unit, -h)?, &others)?;
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * norm * (plus - minus) / (2.0 * h);
        }
        Ok(acc)
    })
}

fn scale_rows(rows: &[Vec<f64>], w: f64) -> Vec<Vec<f64>> {
    rows.iter().map(|r| r.iter().map(|a| a * w).collect()).collect()
}

/// Smallest singular value of the twisted symplectic pairing on the
/// node-bump tangent basis at `base`, normalized by the quadrature weights.
/// Stays bounded away from zero under refinement (weak nondegeneracy probe).
pub fn tangent_gram_min_singular(
    base: &DiscretePath,
    twist: &TwistClass,
    coupling: f64,
) -> Result<f64> {
    let n = base.dim;
    let nodes = base.subdiv + 1;
    let xdot = path_derivative(&base.x, DiffMode::OneSidedO2)?;
    let h = twist.three_form();
    // per-node block ordering: [v components, chi components]
    let dim = 2 * n * nodes;
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    for k in 0..nodes {
        let off = 2 * n * k;
        for a in 0..n {
            // omega1 couples v and chi at the same node with unit weight
            m[(off + a, off + n + a)] = 1.0;
            m[(off + n + a, off + a)] = -1.0;
        }
        if let Some(h) = h {
            // transgression couples v directions through H(., ., xdot)
            for a in 0..n {
                for b in 0..n {
                    let ea: Vec<f64> = (0..n).map(|i| if i == a { 1.0 } else { 0.0 }).collect();
                    let eb: Vec<f64> = (0..n).map(|i| if i == b { 1.0 } else { 0.0 }).collect();
                    let val = coupling * h.contract(&base.x[k], &[&ea, &eb, &xdot[k]])?;
                    m[(off + a, off + b)] = val;
                }
            }
        }
    }
    let svd = m.svd(false, false);
    Ok(svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min))
}
