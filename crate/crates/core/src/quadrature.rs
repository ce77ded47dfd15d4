//! Composite quadrature on the standard 1- and 2-simplex.
//!
//! Edge rule: composite trapezoid on a uniform partition of `[0,1]`.
//! Triangle rule: vertex-average (midpoint on subtriangles) over the uniform
//! barycentric subdivision. Both are exact on affine integrands and second
//! order on smooth ones.

use crate::error::{Error, Result};

/// Trapezoid weights `h/2, h, ..., h, h/2` for `len` nodes on `[0,1]`.
pub fn edge_weights(len: usize) -> Result<Vec<f64>> {
    if len < 2 {
        return Err(Error::TooFewNodes { needed: 2, got: len });
    }
    let h = 1.0 / (len - 1) as f64;
    let mut w = vec![h; len];
    w[0] = 0.5 * h;
    w[len - 1] = 0.5 * h;
    Ok(w)
}

/// Integrate samples on the uniform partition of `[0,1]` by the composite trapezoid rule.
pub fn quadrature_edge(samples: &[f64]) -> Result<f64> {
    let w = edge_weights(samples.len())?;
    Ok(samples.iter().zip(&w).map(|(s, w)| s * w).sum())
}

/// Linear index of barycentric lattice node `(i, j)`, `i + j <= n_sub`,
/// enumerated row-major in `i` then `j`.
pub fn tri_index(n_sub: usize, i: usize, j: usize) -> usize {
    i * (n_sub + 1) - i * i.saturating_sub(1) / 2 + j
}

/// Number of lattice nodes for subdivision `n_sub`.
pub fn tri_node_count(n_sub: usize) -> usize {
    (n_sub + 1) * (n_sub + 2) / 2
}

/// Integrate lattice samples over the standard triangle
/// `{(s1, s2): s1, s2 >= 0, s1 + s2 <= 1}` by averaging each subtriangle's
/// vertices (exact on affine integrands).
pub fn quadrature_triangle(samples: &[f64], n_sub: usize) -> Result<f64> {
    if n_sub < 1 {
        return Err(Error::TooFewNodes { needed: 3, got: samples.len() });
    }
    if samples.len() != tri_node_count(n_sub) {
        return Err(Error::ShapeMismatch(format!(
            "triangle quadrature expects {} samples for subdivision {}, got {}",
            tri_node_count(n_sub),
            n_sub,
            samples.len()
        )));
    }
    let idx = |i: usize, j: usize| tri_index(n_sub, i, j);
    let cell_area = 0.5 / (n_sub as f64 * n_sub as f64);
    let mut acc = 0.0;
    for i in 0..n_sub {
        for j in 0..n_sub - i {
            // upward subtriangle (i,j)-(i+1,j)-(i,j+1)
            acc += (samples[idx(i, j)] + samples[idx(i + 1, j)] + samples[idx(i, j + 1)]) / 3.0;
            // downward subtriangle (i+1,j)-(i,j+1)-(i+1,j+1)
            if i + j + 2 <= n_sub {
                acc += (samples[idx(i + 1, j)] + samples[idx(i, j + 1)] + samples[idx(i + 1, j + 1)])
                    / 3.0;
            }
        }
    }
    Ok(acc * cell_area)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri_samples(n_sub: usize, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(tri_node_count(n_sub));
        for i in 0..=n_sub {
            for j in 0..=(n_sub - i) {
                out.push(f(i as f64 / n_sub as f64, j as f64 / n_sub as f64));
            }
        }
        out
    }

    #[test]
    fn constant_over_edge() {
        let s = vec![1.0; 9];
        assert_eq!(quadrature_edge(&s).unwrap(), 1.0);
    }

    #[test]
    fn affine_over_edge_is_exact() {
        let n = 7;
        let s: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
        assert!((quadrature_edge(&s).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn too_few_nodes_rejected() {
        assert!(matches!(
            quadrature_edge(&[1.0]),
            Err(Error::TooFewNodes { .. })
        ));
        assert!(matches!(
            quadrature_triangle(&[1.0], 0),
            Err(Error::TooFewNodes { .. })
        ));
    }

    #[test]
    fn constant_over_triangle() {
        let s = tri_samples(5, |_, _| 2.0);
        assert!((quadrature_triangle(&s, 5).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn affine_over_triangle_is_exact() {
        // integral of s1 over the standard triangle is 1/6
        let s = tri_samples(6, |a, _| a);
        assert!((quadrature_triangle(&s, 6).unwrap() - 1.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn product_term_converges_at_order_two() {
        // integral of s1 s2 is 1/24
        let exact = 1.0 / 24.0;
        let errs: Vec<f64> = [4usize, 8, 16]
            .iter()
            .map(|&n| {
                let s = tri_samples(n, |a, b| a * b);
                (quadrature_triangle(&s, n).unwrap() - exact).abs()
            })
            .collect();
        let o1 = (errs[0] / errs[1]).log2();
        let o2 = (errs[1] / errs[2]).log2();
        assert!(o1 > 1.9 && o2 > 1.9, "orders {o1} {o2}");
    }
}
