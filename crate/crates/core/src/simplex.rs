//! Discretized bundle maps `T Delta^1 -> T*M` and `T Delta^2 -> T*M`,
//! their tangent vectors, the simplicial face and degeneracy maps, and the
//! explicit horn filler.
//!
//! Conventions. The 2-simplex has vertices `v0 = (0,0)`, `v1 = (1,0)`,
//! `v2 = (0,1)` in coordinates `(s1, s2)`. Covector data is stored as slot
//! values on the standard tangents: one slot on an edge (the value on
//! `d/dt`), two slots `xi1, xi2` on a triangle (the values on `e1, e2`).
//! Cofaces are `s0(t) = (1-t, t)`, `s1(t) = (0, t)`, `s2(t) = (t, 0)`; face
//! `i` of a triangle restricts to the edge missing vertex `i` and evaluates
//! covectors on the pushed unit tangent, which is the integer combination
//! `e2 - e1`, `e2`, `e1` respectively. All face and degeneracy operations
//! are exact lattice re-indexing.

use crate::error::{Error, Result};
use crate::quadrature::{tri_index, tri_node_count};

/// End-point stencil choice for lattice differentiation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffMode {
    /// Two-point one-sided ends. Together with trapezoid weights this
    /// satisfies an exact summation-by-parts identity, so discretized
    /// integration by parts telescopes to boundary terms at machine
    /// precision.
    SummationByParts,
    /// Three-point one-sided ends; second order at every node.
    OneSidedO2,
}

/// A discretized path in `T*M`: base points and covector values on the unit
/// tangent of the interval, over the uniform partition `t_k = k/N`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePath {
    pub dim: usize,
    pub subdiv: usize,
    pub x: Vec<Vec<f64>>,
    pub xi: Vec<Vec<f64>>,
}

/// A tangent vector at a discretized path: base variation and covector variation.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentPath {
    pub dim: usize,
    pub subdiv: usize,
    pub v: Vec<Vec<f64>>,
    pub chi: Vec<Vec<f64>>,
}

/// A discretized bundle map on the triangle: base lattice and two covector slots.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteTriangle {
    pub dim: usize,
    pub subdiv: usize,
    pub x: Vec<Vec<f64>>,
    pub xi1: Vec<Vec<f64>>,
    pub xi2: Vec<Vec<f64>>,
}

/// A tangent vector at a discretized triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentTriangle {
    pub dim: usize,
    pub subdiv: usize,
    pub v: Vec<Vec<f64>>,
    pub chi1: Vec<Vec<f64>>,
    pub chi2: Vec<Vec<f64>>,
}

/// Three paths forming a triangle boundary, with the corner constraints
/// `d0 psi2 = d1 psi0`, `d0 psi1 = d0 psi0`, `d1 psi1 = d1 psi2` holding as
/// exact data equalities.
#[derive(Debug, Clone)]
pub struct TriangleBoundaryTriple {
    pub paths: [DiscretePath; 3],
}

/// Tangent version of a boundary triple.
#[derive(Debug, Clone)]
pub struct TangentTriple {
    pub tangents: [TangentPath; 3],
}

/// A truncated 2-simplex element: a base-lattice representative plus its
/// boundary paths (which must restrict from the representative).
#[derive(Debug, Clone)]
pub struct Lwx2Element {
    pub base: Vec<Vec<f64>>,
    pub dim: usize,
    pub subdiv: usize,
    pub boundary: TriangleBoundaryTriple,
}

fn check_lattice(dim: usize, subdiv: usize, data: &[Vec<f64>], what: &str) -> Result<()> {
    if data.len() != tri_node_count(subdiv) {
        return Err(Error::ShapeMismatch(format!(
            "{what}: expected {} lattice nodes, got {}",
            tri_node_count(subdiv),
            data.len()
        )));
    }
    for row in data {
        if row.len() != dim || row.iter().any(|v| !v.is_finite()) {
            return Err(Error::ShapeMismatch(format!(
                "{what}: node records must hold {dim} finite entries"
            )));
        }
    }
    Ok(())
}

fn check_nodes(dim: usize, subdiv: usize, data: &[Vec<f64>], what: &str) -> Result<()> {
    if data.len() != subdiv + 1 {
        return Err(Error::ShapeMismatch(format!(
            "{what}: expected {} nodes, got {}",
            subdiv + 1,
            data.len()
        )));
    }
    for row in data {
        if row.len() != dim || row.iter().any(|v| !v.is_finite()) {
            return Err(Error::ShapeMismatch(format!(
                "{what}: node records must hold {dim} finite entries"
            )));
        }
    }
    Ok(())
}

impl DiscretePath {
    pub fn new(dim: usize, subdiv: usize, x: Vec<Vec<f64>>, xi: Vec<Vec<f64>>) -> Result<Self> {
        check_nodes(dim, subdiv, &x, "path base")?;
        check_nodes(dim, subdiv, &xi, "path covectors")?;
        Ok(DiscretePath { dim, subdiv, x, xi })
    }

    /// Constant path at `x0` with zero covectors.
    pub fn constant(x0: &[f64], subdiv: usize) -> Self {
        DiscretePath {
            dim: x0.len(),
            subdiv,
            x: vec![x0.to_vec(); subdiv + 1],
            xi: vec![vec![0.0; x0.len()]; subdiv + 1],
        }
    }

    /// Face `d_i`: the endpoint at `t = 1` for `i = 0`, at `t = 0` for `i = 1`.
    pub fn face(&self, i: usize) -> Result<Vec<f64>> {
        match i {
            0 => Ok(self.x[self.subdiv].clone()),
            1 => Ok(self.x[0].clone()),
            _ => Err(Error::FaceIndex(i)),
        }
    }
}

impl TangentPath {
    pub fn new(dim: usize, subdiv: usize, v: Vec<Vec<f64>>, chi: Vec<Vec<f64>>) -> Result<Self> {
        check_nodes(dim, subdiv, &v, "path tangent base")?;
        check_nodes(dim, subdiv, &chi, "path tangent covectors")?;
        Ok(TangentPath { dim, subdiv, v, chi })
    }

    pub fn zero(dim: usize, subdiv: usize) -> Self {
        TangentPath {
            dim,
            subdiv,
            v: vec![vec![0.0; dim]; subdiv + 1],
            chi: vec![vec![0.0; dim]; subdiv + 1],
        }
    }

    /// Plain Euclidean norm over all entries.
    pub fn norm(&self) -> f64 {
        let s: f64 = self
            .v
            .iter()
            .chain(self.chi.iter())
            .flat_map(|r| r.iter())
            .map(|a| a * a)
            .sum();
        s.sqrt()
    }

    pub fn scale(&self, w: f64) -> TangentPath {
        TangentPath {
            dim: self.dim,
            subdiv: self.subdiv,
            v: self.v.iter().map(|r| r.iter().map(|a| a * w).collect()).collect(),
            chi: self.chi.iter().map(|r| r.iter().map(|a| a * w).collect()).collect(),
        }
    }
}

/// `path + eps * tangent` (the discretized space is linear).
pub fn displace_path(p: &DiscretePath, t: &TangentPath, eps: f64) -> Result<DiscretePath> {
    if p.dim != t.dim || p.subdiv != t.subdiv {
        return Err(Error::ShapeMismatch("path displacement shape mismatch".into()));
    }
    let mut out = p.clone();
    for k in 0..=p.subdiv {
        for i in 0..p.dim {
            out.x[k][i] += eps * t.v[k][i];
            out.xi[k][i] += eps * t.chi[k][i];
        }
    }
    Ok(out)
}

impl DiscreteTriangle {
    pub fn new(
        dim: usize,
        subdiv: usize,
        x: Vec<Vec<f64>>,
        xi1: Vec<Vec<f64>>,
        xi2: Vec<Vec<f64>>,
    ) -> Result<Self> {
        check_lattice(dim, subdiv, &x, "triangle base")?;
        check_lattice(dim, subdiv, &xi1, "triangle slot 1")?;
        check_lattice(dim, subdiv, &xi2, "triangle slot 2")?;
        Ok(DiscreteTriangle { dim, subdiv, x, xi1, xi2 })
    }

    pub fn constant(x0: &[f64], subdiv: usize) -> Self {
        let nodes = tri_node_count(subdiv);
        DiscreteTriangle {
            dim: x0.len(),
            subdiv,
            x: vec![x0.to_vec(); nodes],
            xi1: vec![vec![0.0; x0.len()]; nodes],
            xi2: vec![vec![0.0; x0.len()]; nodes],
        }
    }

    pub fn node(&self, i: usize, j: usize) -> usize {
        tri_index(self.subdiv, i, j)
    }
}

impl TangentTriangle {
    pub fn new(
        dim: usize,
        subdiv: usize,
        v: Vec<Vec<f64>>,
        chi1: Vec<Vec<f64>>,
        chi2: Vec<Vec<f64>>,
    ) -> Result<Self> {
        check_lattice(dim, subdiv, &v, "triangle tangent base")?;
        check_lattice(dim, subdiv, &chi1, "triangle tangent slot 1")?;
        check_lattice(dim, subdiv, &chi2, "triangle tangent slot 2")?;
        Ok(TangentTriangle { dim, subdiv, v, chi1, chi2 })
    }

    pub fn zero(dim: usize, subdiv: usize) -> Self {
        let nodes = tri_node_count(subdiv);
        TangentTriangle {
            dim,
            subdiv,
            v: vec![vec![0.0; dim]; nodes],
            chi1: vec![vec![0.0; dim]; nodes],
            chi2: vec![vec![0.0; dim]; nodes],
        }
    }

    pub fn norm(&self) -> f64 {
        let s: f64 = self
            .v
            .iter()
            .chain(self.chi1.iter())
            .chain(self.chi2.iter())
            .flat_map(|r| r.iter())
            .map(|a| a * a)
            .sum();
        s.sqrt()
    }
}

/// `triangle + eps * tangent`.
pub fn displace_triangle(
    b: &DiscreteTriangle,
    t: &TangentTriangle,
    eps: f64,
) -> Result<DiscreteTriangle> {
    if b.dim != t.dim || b.subdiv != t.subdiv {
        return Err(Error::ShapeMismatch("triangle displacement shape mismatch".into()));
    }
    let mut out = b.clone();
    for k in 0..tri_node_count(b.subdiv) {
        for i in 0..b.dim {
            out.x[k][i] += eps * t.v[k][i];
            out.xi1[k][i] += eps * t.chi1[k][i];
            out.xi2[k][i] += eps * t.chi2[k][i];
        }
    }
    Ok(out)
}

/// Lattice nodes of edge `i`, as `(i0, j0)` pairs in path order `k = 0..=N`.
pub(crate) fn edge_nodes(subdiv: usize, face: usize) -> Result<Vec<(usize, usize)>> {
    let n = subdiv;
    let nodes = match face {
        0 => (0..=n).map(|k| (n - k, k)).collect(),
        1 => (0..=n).map(|k| (0, k)).collect(),
        2 => (0..=n).map(|k| (k, 0)).collect(),
        _ => return Err(Error::FaceIndex(face)),
    };
    Ok(nodes)
}

/// Covector slot combination seen by face `i`: the image of the edge's unit
/// tangent under the coface differential.
pub(crate) fn face_slot(face: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    match face {
        // Tsigma_0(d/dt) = e2 - e1
        0 => a.iter().zip(b).map(|(x1, x2)| x2 - x1).collect(),
        // Tsigma_1(d/dt) = e2
        1 => b.to_vec(),
        // Tsigma_2(d/dt) = e1
        2 => a.to_vec(),
        _ => unreachable!(),
    }
}

/// The `i`-th face of a triangle as a discretized path.
pub fn face(tri: &DiscreteTriangle, i: usize) -> Result<DiscretePath> {
    let nodes = edge_nodes(tri.subdiv, i)?;
    let mut x = Vec::with_capacity(nodes.len());
    let mut xi = Vec::with_capacity(nodes.len());
    for &(a, b) in &nodes {
        let idx = tri.node(a, b);
        x.push(tri.x[idx].clone());
        xi.push(face_slot(i, &tri.xi1[idx], &tri.xi2[idx]));
    }
    DiscretePath::new(tri.dim, tri.subdiv, x, xi)
}

/// The `i`-th face of a triangle tangent; commutes with [`face`] exactly.
pub fn face_tangent(t: &TangentTriangle, i: usize) -> Result<TangentPath> {
    let nodes = edge_nodes(t.subdiv, i)?;
    let mut v = Vec::with_capacity(nodes.len());
    let mut chi = Vec::with_capacity(nodes.len());
    for &(a, b) in &nodes {
        let idx = tri_index(t.subdiv, a, b);
        v.push(t.v[idx].clone());
        chi.push(face_slot(i, &t.chi1[idx], &t.chi2[idx]));
    }
    TangentPath::new(t.dim, t.subdiv, v, chi)
}

/// Degeneracy `s_0` on a point: the constant path with zero covector.
pub fn degeneracy_point(x0: &[f64], subdiv: usize) -> DiscretePath {
    DiscretePath::constant(x0, subdiv)
}

/// Degeneracies `s_0, s_1 : C_1 -> C_2`. The collapsed direction reads zero
/// covector response: `s_0` pulls back along `(s1, s2) -> s2`, `s_1` along
/// `(s1, s2) -> s1 + s2`.
pub fn degeneracy(path: &DiscretePath, which: usize) -> Result<DiscreteTriangle> {
    let n = path.subdiv;
    let dim = path.dim;
    let nodes = tri_node_count(n);
    let mut x = vec![vec![0.0; dim]; nodes];
    let mut xi1 = vec![vec![0.0; dim]; nodes];
    let mut xi2 = vec![vec![0.0; dim]; nodes];
    for i in 0..=n {
        for j in 0..=(n - i) {
            let idx = tri_index(n, i, j);
            match which {
                0 => {
                    x[idx] = path.x[j].clone();
                    xi2[idx] = path.xi[j].clone();
                }
                1 => {
                    x[idx] = path.x[i + j].clone();
                    xi1[idx] = path.xi[i + j].clone();
                    xi2[idx] = path.xi[i + j].clone();
                }
                _ => return Err(Error::FaceIndex(which)),
            }
        }
    }
    DiscreteTriangle::new(dim, n, x, xi1, xi2)
}

/// The three faces of a triangle; the corner constraints hold by construction.
pub fn boundary_triple(tri: &DiscreteTriangle) -> Result<TriangleBoundaryTriple> {
    Ok(TriangleBoundaryTriple {
        paths: [face(tri, 0)?, face(tri, 1)?, face(tri, 2)?],
    })
}

/// Tangent model of the truncated 2-simplex space: a compatible triple of
/// path tangents obtained by pushing a triangle tangent to its faces.
pub fn truncation_tangent_model(t: &TangentTriangle) -> Result<TangentTriple> {
    Ok(TangentTriple {
        tangents: [face_tangent(t, 0)?, face_tangent(t, 1)?, face_tangent(t, 2)?],
    })
}

impl TriangleBoundaryTriple {
    /// Validate the three corner constraints as exact data equalities.
    pub fn check(&self) -> Result<()> {
        let [p0, p1, p2] = &self.paths;
        let n = p0.subdiv;
        if p1.subdiv != n || p2.subdiv != n || p0.dim != p1.dim || p0.dim != p2.dim {
            return Err(Error::ShapeMismatch("boundary triple shape mismatch".into()));
        }
        let eq = |a: &[f64], b: &[f64]| a == b;
        if !eq(&p2.x[n], &p0.x[0]) || !eq(&p1.x[n], &p0.x[n]) || !eq(&p1.x[0], &p2.x[0]) {
            return Err(Error::HornMismatch("corner base points differ".into()));
        }
        Ok(())
    }
}

impl Lwx2Element {
    /// Pack a representative and its boundary; the boundary must restrict
    /// from the representative exactly.
    pub fn from_triangle(tri: &DiscreteTriangle) -> Result<Self> {
        let boundary = boundary_triple(tri)?;
        Ok(Lwx2Element {
            base: tri.x.clone(),
            dim: tri.dim,
            subdiv: tri.subdiv,
            boundary,
        })
    }

    pub fn check(&self) -> Result<()> {
        self.boundary.check()?;
        for i in 0..3 {
            let nodes = edge_nodes(self.subdiv, i)?;
            for (k, &(a, b)) in nodes.iter().enumerate() {
                if self.base[tri_index(self.subdiv, a, b)] != self.boundary.paths[i].x[k] {
                    return Err(Error::HornMismatch(format!(
                        "boundary path {i} does not restrict from the representative"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Fill a 2-horn: given the two faces other than `ell` and a base lattice
/// `f` whose edges match them, produce a triangle whose faces `i != ell`
/// reproduce the inputs exactly at every lattice node. Flat-chart transport;
/// the two-element subset of the alternating sum collapses to the shared
/// corner and contributes no covector.
pub fn horn_fill(
    psi_a: &DiscretePath,
    psi_b: &DiscretePath,
    ell: usize,
    base: &[Vec<f64>],
) -> Result<DiscreteTriangle> {
    if ell > 2 {
        return Err(Error::FaceIndex(ell));
    }
    let n = psi_a.subdiv;
    let dim = psi_a.dim;
    if psi_b.subdiv != n || psi_b.dim != dim {
        return Err(Error::HornMismatch("horn edges have mismatched shapes".into()));
    }
    check_lattice(dim, n, base, "horn base")?;

    // (face index, path) for the two given faces, ascending face order
    let faces: [(usize, &DiscretePath); 2] = match ell {
        0 => [(1, psi_a), (2, psi_b)],
        1 => [(0, psi_a), (2, psi_b)],
        2 => [(0, psi_a), (1, psi_b)],
        _ => unreachable!(),
    };

    // corner compatibility at the shared vertex (vertex `ell`)
    let (corner_a, corner_b) = match ell {
        0 => (faces[0].1.x[0].clone(), faces[1].1.x[0].clone()),
        1 => (faces[0].1.x[0].clone(), faces[1].1.x[n].clone()),
        2 => (faces[0].1.x[n].clone(), faces[1].1.x[n].clone()),
        _ => unreachable!(),
    };
    if corner_a != corner_b {
        return Err(Error::HornMismatch(
            "the two horn edges disagree at the shared corner".into(),
        ));
    }

    // edges must match the base lattice restriction exactly
    for (fidx, path) in faces {
        let nodes = edge_nodes(n, fidx)?;
        for (k, &(a, b)) in nodes.iter().enumerate() {
            if base[tri_index(n, a, b)] != path.x[k] {
                return Err(Error::HornMismatch(format!(
                    "edge {fidx} does not match the base lattice"
                )));
            }
        }
    }

    let nodes = tri_node_count(n);
    let mut xi1 = vec![vec![0.0; dim]; nodes];
    let mut xi2 = vec![vec![0.0; dim]; nodes];
    let add = |dst: &mut Vec<f64>, src: &[f64], w: f64| {
        for (d, s) in dst.iter_mut().zip(src) {
            *d += w * s;
        }
    };

    // choose w with fl(w - u) == target, nudging away the rounding of the sum
    fn pair_sum(u: f64, target: f64) -> f64 {
        let mut w = u + target;
        for _ in 0..8 {
            let err = (w - u) - target;
            if err == 0.0 {
                break;
            }
            w -= err;
        }
        w
    }
    // choose u with fl(w - u) == target
    fn pair_diff(w: f64, target: f64) -> f64 {
        let mut u = w - target;
        for _ in 0..8 {
            let err = (w - u) - target;
            if err == 0.0 {
                break;
            }
            u += err;
        }
        u
    }
    for i in 0..=n {
        for j in 0..=(n - i) {
            let idx = tri_index(n, i, j);
            match ell {
                // psi_1 pulled through t = s2, psi_2 through t = s1
                0 => {
                    add(&mut xi2[idx], &faces[0].1.xi[j], 1.0);
                    add(&mut xi1[idx], &faces[1].1.xi[i], 1.0);
                }
                // psi_0 through t = s2, psi_2 through t = s1 + s2
                1 => {
                    add(&mut xi2[idx], &faces[0].1.xi[j], 1.0);
                    add(&mut xi1[idx], &faces[1].1.xi[i + j], 1.0);
                    add(&mut xi2[idx], &faces[1].1.xi[i + j], 1.0);
                }
                // psi_0 through t = 1 - s1 (reversed), psi_1 through t = s1 + s2
                2 => {
                    add(&mut xi1[idx], &faces[0].1.xi[n - i], -1.0);
                    add(&mut xi1[idx], &faces[1].1.xi[i + j], 1.0);
                    add(&mut xi2[idx], &faces[1].1.xi[i + j], 1.0);
                }
                _ => unreachable!(),
            }
        }
    }
    // When face 0 is among the given edges, its values are read back as the
    // slot difference xi2 - xi1; adjust the slots so the subtraction
    // reproduces the input bitwise. Where a slot is also pinned by the other
    // given face (one corner), the nudge lands exactly whenever the horn
    // data is consistent (for instance, faces of an actual triangle).
    if ell == 1 || ell == 2 {
        let psi0 = faces[0].1;
        for k in 0..=n {
            let idx = tri_index(n, n - k, k);
            for c in 0..dim {
                let t = psi0.xi[k][c];
                if ell == 1 {
                    // xi1 is pinned by face 2 only at k = 0
                    let u = xi1[idx][c];
                    let w = pair_sum(u, t);
                    if w - u == t || k == 0 {
                        xi2[idx][c] = w;
                    } else {
                        xi1[idx][c] = 0.0;
                        xi2[idx][c] = t;
                    }
                } else {
                    // xi2 is pinned by face 1 only at k = n
                    let w = xi2[idx][c];
                    let u = pair_diff(w, t);
                    if w - u == t || k == n {
                        xi1[idx][c] = u;
                    } else {
                        xi1[idx][c] = 0.0;
                        xi2[idx][c] = t;
                    }
                }
            }
        }
    }
    DiscreteTriangle::new(dim, n, base.to_vec(), xi1, xi2)
}

/// Derivative of node samples on the uniform partition of `[0,1]`.
pub fn path_derivative(nodes: &[Vec<f64>], mode: DiffMode) -> Result<Vec<Vec<f64>>> {
    let m = nodes.len();
    if m < 2 {
        return Err(Error::TooFewNodes { needed: 2, got: m });
    }
    let dim = nodes[0].len();
    let h = 1.0 / (m - 1) as f64;
    let mut out = vec![vec![0.0; dim]; m];
    for c in 0..dim {
        for k in 0..m {
            out[k][c] = if k > 0 && k + 1 < m {
                (nodes[k + 1][c] - nodes[k - 1][c]) / (2.0 * h)
            } else if k == 0 {
                match mode {
                    DiffMode::SummationByParts => (nodes[1][c] - nodes[0][c]) / h,
                    DiffMode::OneSidedO2 => {
                        if m >= 3 {
                            (-3.0 * nodes[0][c] + 4.0 * nodes[1][c] - nodes[2][c]) / (2.0 * h)
                        } else {
                            (nodes[1][c] - nodes[0][c]) / h
                        }
                    }
                }
            } else {
                match mode {
                    DiffMode::SummationByParts => (nodes[m - 1][c] - nodes[m - 2][c]) / h,
                    DiffMode::OneSidedO2 => {
                        if m >= 3 {
                            (3.0 * nodes[m - 1][c] - 4.0 * nodes[m - 2][c] + nodes[m - 3][c])
                                / (2.0 * h)
                        } else {
                            (nodes[m - 1][c] - nodes[m - 2][c]) / h
                        }
                    }
                }
            };
        }
    }
    Ok(out)
}

/// Both partial derivatives `(d/ds1, d/ds2)` of lattice node data.
///
/// Each node uses second-order stencils along the three lattice line
/// families (`e1`, `e2`, and the diagonal `e2 - e1`), falling back to a
/// combination of the other two directions where a line is too short.
pub fn tri_gradient(
    data: &[Vec<f64>],
    subdiv: usize,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let n = subdiv;
    if n < 1 {
        return Err(Error::TooFewNodes { needed: 3, got: data.len() });
    }
    if data.len() != tri_node_count(n) {
        return Err(Error::ShapeMismatch("lattice gradient: wrong node count".into()));
    }
    let dim = data[0].len();
    let h = 1.0 / n as f64;
    let inside = |i: isize, j: isize| i >= 0 && j >= 0 && (i + j) as usize <= n;
    let at = |i: isize, j: isize| &data[tri_index(n, i as usize, j as usize)];

    // derivative along integer direction d = (di, dj), scaled to the unit
    // step h; quality 2 marks a second-order stencil, 1 a two-point one
    let along = |i: usize, j: usize, di: isize, dj: isize, c: usize| -> Option<(f64, u8)> {
        let (i, j) = (i as isize, j as isize);
        let (pp, pm) = ((i + di, j + dj), (i - di, j - dj));
        if inside(pp.0, pp.1) && inside(pm.0, pm.1) {
            return Some(((at(pp.0, pp.1)[c] - at(pm.0, pm.1)[c]) / (2.0 * h), 2));
        }
        let p2 = (i + 2 * di, j + 2 * dj);
        if inside(pp.0, pp.1) && inside(p2.0, p2.1) {
            return Some((
                (-3.0 * at(i, j)[c] + 4.0 * at(pp.0, pp.1)[c] - at(p2.0, p2.1)[c]) / (2.0 * h),
                2,
            ));
        }
        let m2 = (i - 2 * di, j - 2 * dj);
        if inside(pm.0, pm.1) && inside(m2.0, m2.1) {
            return Some((
                (3.0 * at(i, j)[c] - 4.0 * at(pm.0, pm.1)[c] + at(m2.0, m2.1)[c]) / (2.0 * h),
                2,
            ));
        }
        // two-point last resort (only reachable for very small lattices)
        if inside(pp.0, pp.1) {
            return Some(((at(pp.0, pp.1)[c] - at(i, j)[c]) / h, 1));
        }
        if inside(pm.0, pm.1) {
            return Some(((at(i, j)[c] - at(pm.0, pm.1)[c]) / h, 1));
        }
        None
    };

    let nodes = tri_node_count(n);
    let mut d1 = vec![vec![0.0; dim]; nodes];
    let mut d2 = vec![vec![0.0; dim]; nodes];
    for i in 0..=n {
        for j in 0..=(n - i) {
            let idx = tri_index(n, i, j);
            for c in 0..dim {
                let e1 = along(i, j, 1, 0, c);
                let e2 = along(i, j, 0, 1, c);
                let g = along(i, j, -1, 1, c); // direction e2 - e1
                // prefer second-order routes: the direct line, then the
                // combination through the other two directions
                let combo_ok = |a: Option<(f64, u8)>, b: Option<(f64, u8)>| match (a, b) {
                    (Some((_, qa)), Some((_, qb))) => qa >= 2 && qb >= 2,
                    _ => false,
                };
                let v1 = match (e1, combo_ok(e2, g)) {
                    (Some((v, 2)), _) => v,
                    (_, true) => e2.unwrap().0 - g.unwrap().0,
                    (Some((v, _)), _) => v,
                    (None, _) => match (e2, g) {
                        (Some((b, _)), Some((c2, _))) => b - c2,
                        _ => {
                            return Err(Error::ShapeMismatch(
                                "lattice too small for gradient stencils".into(),
                            ))
                        }
                    },
                };
                let v2 = match (e2, combo_ok(e1, g)) {
                    (Some((v, 2)), _) => v,
                    (_, true) => e1.unwrap().0 + g.unwrap().0,
                    (Some((v, _)), _) => v,
                    (None, _) => match (e1, g) {
                        (Some((a, _)), Some((c2, _))) => a + c2,
                        _ => {
                            return Err(Error::ShapeMismatch(
                                "lattice too small for gradient stencils".into(),
                            ))
                        }
                    },
                };
                d1[idx][c] = v1;
                d2[idx][c] = v2;
            }
        }
    }
    Ok((d1, d2))
}

/// Structured-text dump of a discretized path or triangle.
///
/// Header: `lattice <path|triangle> dim=<n> subdiv=<N>`; one row per node,
/// space-separated, base coordinates first, then the covector slot(s), in
/// lattice order.
pub fn dump_path(p: &DiscretePath) -> String {
    let mut s = format!("lattice path dim={} subdiv={}\n", p.dim, p.subdiv);
    for k in 0..=p.subdiv {
        let row: Vec<String> = p.x[k]
            .iter()
            .chain(p.xi[k].iter())
            .map(|v| format!("{v:.17e}"))
            .collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

pub fn dump_triangle(t: &DiscreteTriangle) -> String {
    let mut s = format!("lattice triangle dim={} subdiv={}\n", t.dim, t.subdiv);
    for i in 0..=t.subdiv {
        for j in 0..=(t.subdiv - i) {
            let idx = t.node(i, j);
            let row: Vec<String> = t.x[idx]
                .iter()
                .chain(t.xi1[idx].iter())
                .chain(t.xi2[idx].iter())
                .map(|v| format!("{v:.17e}"))
                .collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
    }
    s
}

fn parse_header(line: &str) -> Result<(String, usize, usize)> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    if parts.len() != 4 || parts[0] != "lattice" {
        return Err(Error::DumpFormat("bad header line".into()));
    }
    let kind = parts[1].to_string();
    let dim = parts[2]
        .strip_prefix("dim=")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::DumpFormat("bad dim field".into()))?;
    let subdiv = parts[3]
        .strip_prefix("subdiv=")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::DumpFormat("bad subdiv field".into()))?;
    Ok((kind, dim, subdiv))
}

fn parse_row(line: &str, want: usize) -> Result<Vec<f64>> {
    let vals: std::result::Result<Vec<f64>, _> =
        line.split_whitespace().map(|t| t.parse::<f64>()).collect();
    let vals = vals.map_err(|_| Error::DumpFormat("non-numeric entry".into()))?;
    if vals.len() != want {
        return Err(Error::DumpFormat(format!(
            "row holds {} entries, expected {want}",
            vals.len()
        )));
    }
    Ok(vals)
}

pub fn parse_path_dump(text: &str) -> Result<DiscretePath> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::DumpFormat("empty dump".into()))?;
    let (kind, dim, subdiv) = parse_header(header)?;
    if kind != "path" {
        return Err(Error::DumpFormat(format!("expected a path dump, got {kind}")));
    }
    let mut x = Vec::new();
    let mut xi = Vec::new();
    for line in lines {
        let row = parse_row(line, 2 * dim)?;
        x.push(row[..dim].to_vec());
        xi.push(row[dim..].to_vec());
    }
    DiscretePath::new(dim, subdiv, x, xi)
}

pub fn parse_triangle_dump(text: &str) -> Result<DiscreteTriangle> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::DumpFormat("empty dump".into()))?;
    let (kind, dim, subdiv) = parse_header(header)?;
    if kind != "triangle" {
        return Err(Error::DumpFormat(format!("expected a triangle dump, got {kind}")));
    }
    let mut x = Vec::new();
    let mut xi1 = Vec::new();
    let mut xi2 = Vec::new();
    for line in lines {
        let row = parse_row(line, 3 * dim)?;
        x.push(row[..dim].to_vec());
        xi1.push(row[dim..2 * dim].to_vec());
        xi2.push(row[2 * dim..].to_vec());
    }
    DiscreteTriangle::new(dim, subdiv, x, xi1, xi2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_triangle(n: usize) -> DiscreteTriangle {
        // polynomial data so every identity is exercised on nontrivial values
        let dim = 2;
        let nodes = tri_node_count(n);
        let mut x = vec![vec![0.0; dim]; nodes];
        let mut xi1 = vec![vec![0.0; dim]; nodes];
        let mut xi2 = vec![vec![0.0; dim]; nodes];
        for i in 0..=n {
            for j in 0..=(n - i) {
                let (s1, s2) = (i as f64 / n as f64, j as f64 / n as f64);
                let idx = tri_index(n, i, j);
                x[idx] = vec![s1 + 0.5 * s2 * s2, s2 - s1 * s1];
                xi1[idx] = vec![s1 * s2, 1.0 + s1];
                xi2[idx] = vec![s2 * s2, s1 - s2];
            }
        }
        DiscreteTriangle::new(dim, n, x, xi1, xi2).unwrap()
    }

    #[test]
    fn face_of_constant_triangle_is_constant_path() {
        let t = DiscreteTriangle::constant(&[1.0, 2.0, 3.0], 5);
        for i in 0..3 {
            let p = face(&t, i).unwrap();
            assert_eq!(p, DiscretePath::constant(&[1.0, 2.0, 3.0], 5));
        }
    }

    #[test]
    fn face_zero_sees_slot_difference() {
        let n = 4;
        let dim = 2;
        let nodes = tri_node_count(n);
        let a = vec![1.0, -2.0];
        let b = vec![0.5, 3.0];
        let t = DiscreteTriangle::new(
            dim,
            n,
            vec![vec![0.0; dim]; nodes],
            vec![a.clone(); nodes],
            vec![b.clone(); nodes],
        )
        .unwrap();
        let p = face(&t, 0).unwrap();
        for k in 0..=n {
            assert_eq!(p.xi[k], vec![b[0] - a[0], b[1] - a[1]]);
        }
    }

    #[test]
    fn simplicial_face_identities() {
        // d_i d_j = d_{j-1} d_i for i < j, checked on the base points
        let t = sample_triangle(6);
        for i in 0..2usize {
            for j in (i + 1)..3usize {
                let left = face(&t, j).unwrap().face(i).unwrap();
                let right = face(&t, i).unwrap().face(j - 1).unwrap();
                assert_eq!(left, right, "d_{i} d_{j}");
            }
        }
    }

    #[test]
    fn degeneracy_face_identities() {
        let n = 5;
        let dim = 2;
        let mut x = Vec::new();
        let mut xi = Vec::new();
        for k in 0..=n {
            let t = k as f64 / n as f64;
            x.push(vec![t * t, 1.0 - t]);
            xi.push(vec![t, 2.0 * t - 1.0]);
        }
        let p = DiscretePath::new(dim, n, x, xi).unwrap();

        let s0 = degeneracy(&p, 0).unwrap();
        assert_eq!(face(&s0, 0).unwrap(), p, "d0 s0 = id");
        assert_eq!(face(&s0, 1).unwrap(), p, "d1 s0 = id");
        let d2s0 = face(&s0, 2).unwrap();
        assert_eq!(d2s0, degeneracy_point(&p.x[0], n), "d2 s0 = s0 d1");

        let s1 = degeneracy(&p, 1).unwrap();
        assert_eq!(face(&s1, 1).unwrap(), p, "d1 s1 = id");
        assert_eq!(face(&s1, 2).unwrap(), p, "d2 s1 = id");
        let d0s1 = face(&s1, 0).unwrap();
        assert_eq!(d0s1, degeneracy_point(&p.x[n], n), "d0 s1 = s0 d0");
    }

    #[test]
    fn boundary_triple_constraints_hold_exactly() {
        let t = sample_triangle(7);
        boundary_triple(&t).unwrap().check().unwrap();
        Lwx2Element::from_triangle(&t).unwrap().check().unwrap();
    }

    #[test]
    fn face_commutes_with_tangents() {
        let n = 4;
        let t = sample_triangle(n);
        // reuse the triangle data as tangent data
        let tan = TangentTriangle::new(t.dim, n, t.x.clone(), t.xi1.clone(), t.xi2.clone()).unwrap();
        for i in 0..3 {
            let via_tangent = face_tangent(&tan, i).unwrap();
            let via_base = face(&t, i).unwrap();
            assert_eq!(via_tangent.v, via_base.x);
            assert_eq!(via_tangent.chi, via_base.xi);
        }
    }

    #[test]
    fn horn_fill_reproduces_inputs_exactly() {
        let n = 5;
        let t = sample_triangle(n);
        let faces = [
            face(&t, 0).unwrap(),
            face(&t, 1).unwrap(),
            face(&t, 2).unwrap(),
        ];
        for ell in 0..3usize {
            let (pa, pb) = match ell {
                0 => (&faces[1], &faces[2]),
                1 => (&faces[0], &faces[2]),
                _ => (&faces[0], &faces[1]),
            };
            let filled = horn_fill(pa, pb, ell, &t.x).unwrap();
            for i in 0..3usize {
                if i == ell {
                    continue;
                }
                let got = face(&filled, i).unwrap();
                assert_eq!(got, faces[i], "ell={ell}, face {i}");
            }
            // refilling from the output's own horn reproduces the output
            let (qa, qb) = match ell {
                0 => (face(&filled, 1).unwrap(), face(&filled, 2).unwrap()),
                1 => (face(&filled, 0).unwrap(), face(&filled, 2).unwrap()),
                _ => (face(&filled, 0).unwrap(), face(&filled, 1).unwrap()),
            };
            let refilled = horn_fill(&qa, &qb, ell, &filled.x).unwrap();
            assert_eq!(refilled, filled, "refill idempotence at ell={ell}");
        }
    }

    #[test]
    fn horn_fill_zero_covectors_over_constant_base() {
        let n = 3;
        let x0 = [0.7, -0.2];
        let p = DiscretePath::constant(&x0, n);
        let base = DiscreteTriangle::constant(&x0, n);
        let filled = horn_fill(&p, &p, 1, &base.x).unwrap();
        assert_eq!(filled, base);
    }

    #[test]
    fn horn_fill_rejects_corner_mismatch() {
        let n = 3;
        let p = DiscretePath::constant(&[0.0, 0.0], n);
        let q = DiscretePath::constant(&[1.0, 0.0], n);
        let base = DiscreteTriangle::constant(&[0.0, 0.0], n);
        assert!(matches!(
            horn_fill(&p, &q, 1, &base.x),
            Err(Error::HornMismatch(_))
        ));
    }

    #[test]
    fn gradient_is_exact_on_quadratics() {
        let n = 6;
        let nodes = tri_node_count(n);
        let mut data = vec![vec![0.0; 1]; nodes];
        for i in 0..=n {
            for j in 0..=(n - i) {
                let (s1, s2) = (i as f64 / n as f64, j as f64 / n as f64);
                data[tri_index(n, i, j)][0] = 1.0 + 2.0 * s1 - s2 + 3.0 * s1 * s2 + s1 * s1;
            }
        }
        let (d1, d2) = tri_gradient(&data, n).unwrap();
        for i in 0..=n {
            for j in 0..=(n - i) {
                let (s1, s2) = (i as f64 / n as f64, j as f64 / n as f64);
                let idx = tri_index(n, i, j);
                assert!((d1[idx][0] - (2.0 + 3.0 * s2 + 2.0 * s1)).abs() < 1e-11);
                assert!((d2[idx][0] - (-1.0 + 3.0 * s1)).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn path_derivative_endpoint_modes() {
        let n = 8;
        let nodes: Vec<Vec<f64>> = (0..=n)
            .map(|k| {
                let t = k as f64 / n as f64;
                vec![t * t]
            })
            .collect();
        let o2 = path_derivative(&nodes, DiffMode::OneSidedO2).unwrap();
        assert!((o2[0][0] - 0.0).abs() < 1e-12, "three-point end is exact on quadratics");
        let sbp = path_derivative(&nodes, DiffMode::SummationByParts).unwrap();
        assert!((sbp[0][0] - 0.0).abs() < 0.2, "two-point end is only first order");
    }

    #[test]
    fn dump_round_trip() {
        let t = sample_triangle(3);
        let parsed = parse_triangle_dump(&dump_triangle(&t)).unwrap();
        assert_eq!(parsed, t);
        let p = face(&t, 0).unwrap();
        let parsed_p = parse_path_dump(&dump_path(&p)).unwrap();
        assert_eq!(parsed_p, p);
    }
}
