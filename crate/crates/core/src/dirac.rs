//! Frame-presented Dirac structures: spans of generalized sections
//! `Theta_a = q^i_a d_i + p_{ia} dx^i` that are isotropic and closed under
//! the (twisted) bracket, with pointwise structure functions recovered by
//! least squares.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::courant::{twisted_bracket, GeneralizedSection, TwistClass};
use crate::error::{Error, Result};
use crate::field::{
    exterior_derivative, sample_points, FieldKind, FieldRule, SmoothField, DEFAULT_FD_STEP,
};

/// Constructor gate on the off-span bracket residual (analytic evaluators).
pub const INVOLUTIVITY_TOL: f64 = 1e-7;
/// Constructor gate on the pairing residual.
pub const ISOTROPY_TOL: f64 = 1e-9;
/// Singular values below this times the largest are treated as rank loss.
pub const RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
enum FrameKind {
    /// Graph of a two-form: `q = id`, `p_{ja} = B_{aj}`.
    TwoFormGraph(SmoothField),
    /// Graph of a bivector: `q^i_a = pi^{ai}`, `p = id`.
    BivectorGraph(SmoothField),
    /// Arbitrary explicit sections.
    General,
}

struct FrameInner {
    dim: usize,
    sections: Vec<GeneralizedSection>,
    /// Twisted brackets `[Theta_a, Theta_b]` for `a < b`, row-major.
    pair_brackets: Vec<GeneralizedSection>,
    kind: FrameKind,
    twist: TwistClass,
}

/// A local frame spanning an isotropic, involutive subbundle of `TM + T*M`.
/// Cheap to clone; the section data is shared.
#[derive(Clone)]
pub struct DiracFrame {
    inner: Arc<FrameInner>,
}

impl std::fmt::Debug for DiracFrame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "DiracFrame(rank {} on R^{})",
            self.inner.sections.len(),
            self.inner.dim
        )
    }
}

impl DiracFrame {
    fn build(
        sections: Vec<GeneralizedSection>,
        kind: FrameKind,
        twist: TwistClass,
        require_maximal: bool,
    ) -> Result<Self> {
        let dim = match sections.first() {
            Some(s) => s.dim(),
            None => return Err(Error::ShapeMismatch("frame needs at least one section".into())),
        };
        for s in &sections {
            if s.dim() != dim {
                return Err(Error::DimensionMismatch(
                    "frame sections live on different charts".into(),
                ));
            }
        }
        if !twist.is_zero() && twist.dim() != dim {
            return Err(Error::DimensionMismatch(
                "twist lives on a chart of different dimension".into(),
            ));
        }
        let rank = sections.len();
        if rank > dim {
            return Err(Error::ShapeMismatch(format!(
                "{rank} sections cannot be independent on R^{dim} while isotropic"
            )));
        }
        if require_maximal && rank != dim {
            return Err(Error::RankDeficient { found: rank, expected: dim });
        }

        let mut pair_brackets = Vec::with_capacity(rank * (rank - 1) / 2);
        for a in 0..rank {
            for b in (a + 1)..rank {
                pair_brackets.push(twisted_bracket(&sections[a], &sections[b], &twist)?);
            }
        }
        let frame = DiracFrame {
            inner: Arc::new(FrameInner { dim, sections, pair_brackets, kind, twist }),
        };

        let points = sample_points(dim, 20, 0xD15C);
        // rank gate
        for p in &points {
            let m = frame.span_matrix(p)?;
            let svd = m.svd(false, false);
            let smax = svd.singular_values.max();
            let found = svd
                .singular_values
                .iter()
                .filter(|s| **s > RANK_TOL * smax.max(1.0))
                .count();
            if found < rank {
                return Err(Error::RankDeficient { found, expected: rank });
            }
        }
        // isotropy gate
        let iso = frame.isotropy_residual(&points)?;
        if iso > ISOTROPY_TOL {
            return Err(Error::Isotropy { residual: iso });
        }
        // involutivity gate
        let mut worst = 0.0f64;
        for p in &points {
            let (_, residual) = frame.structure_functions_at(p)?;
            worst = worst.max(residual);
        }
        if worst > INVOLUTIVITY_TOL {
            return Err(Error::Involutivity { residual: worst });
        }
        Ok(frame)
    }

    /// Frame `Theta_a = d_a + B_{aj} dx^j` for a two-form `B`.
    /// The involutivity gate accepts exactly the twists with `H = dB`.
    pub fn graph_of_two_form(b: SmoothField, twist: TwistClass) -> Result<Self> {
        if b.kind() != FieldKind::TwoForm {
            return Err(Error::Kind(format!("expected a two-form, got {}", b.kind())));
        }
        let n = b.dim();
        let mut sections = Vec::with_capacity(n);
        for alpha in 0..n {
            let q = SmoothField::basis_vector(n, alpha);
            // p_{ja} = B_{aj}: contract the first slot of B with d_alpha
            let p = crate::field::interior_product(&q, &b)?;
            sections.push(GeneralizedSection::new(q, p)?);
        }
        Self::build(sections, FrameKind::TwoFormGraph(b), twist, true)
    }

    /// Frame `Theta_a = pi^{ai} d_i + dx^a` for a bivector `pi` (zero twist).
    /// The involutivity gate plays the role of the Poisson condition.
    pub fn graph_of_bivector(pi: SmoothField) -> Result<Self> {
        if pi.kind() != FieldKind::Bivector {
            return Err(Error::Kind(format!("expected a bivector, got {}", pi.kind())));
        }
        let n = pi.dim();
        let twist = TwistClass::zero(n);
        let mut sections = Vec::with_capacity(n);
        for alpha in 0..n {
            // q^i_a = pi^{ai}: row a of the component matrix
            let q = row_of_bivector(&pi, alpha)?;
            let p = SmoothField::coordinate_one_form(n, alpha);
            sections.push(GeneralizedSection::new(q, p)?);
        }
        Self::build(sections, FrameKind::BivectorGraph(pi), twist, true)
    }

    /// Frame from explicit sections, required to span a maximal (rank `n`) subbundle.
    pub fn from_sections(sections: Vec<GeneralizedSection>, twist: TwistClass) -> Result<Self> {
        Self::build(sections, FrameKind::General, twist, true)
    }

    /// Relaxed constructor: isotropic and involutive but possibly of rank `< n`.
    pub fn from_sections_isotropic(
        sections: Vec<GeneralizedSection>,
        twist: TwistClass,
    ) -> Result<Self> {
        Self::build(sections, FrameKind::General, twist, false)
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn rank(&self) -> usize {
        self.inner.sections.len()
    }

    pub fn sections(&self) -> &[GeneralizedSection] {
        &self.inner.sections
    }

    pub fn twist(&self) -> &TwistClass {
        &self.inner.twist
    }

    pub fn two_form(&self) -> Option<&SmoothField> {
        match &self.inner.kind {
            FrameKind::TwoFormGraph(b) => Some(b),
            _ => None,
        }
    }

    pub fn bivector(&self) -> Option<&SmoothField> {
        match &self.inner.kind {
            FrameKind::BivectorGraph(p) => Some(p),
            _ => None,
        }
    }

    /// Coefficient matrix `q^i_a` (rows `i`, columns `a`) at `x`.
    pub fn q_at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let k = self.rank();
        let mut m = DMatrix::zeros(n, k);
        for (a, s) in self.inner.sections.iter().enumerate() {
            let v = s.vector().eval(x)?;
            for i in 0..n {
                m[(i, a)] = v[i];
            }
        }
        Ok(m)
    }

    /// Coefficient matrix `p_{ia}` at `x`.
    pub fn p_at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let k = self.rank();
        let mut m = DMatrix::zeros(n, k);
        for (a, s) in self.inner.sections.iter().enumerate() {
            let f = s.one_form().eval(x)?;
            for i in 0..n {
                m[(i, a)] = f[i];
            }
        }
        Ok(m)
    }

    /// Partial derivative `d_j q^i_a` at `x`.
    pub fn q_deriv_at(&self, x: &[f64], j: usize) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let k = self.rank();
        let mut m = DMatrix::zeros(n, k);
        for (a, s) in self.inner.sections.iter().enumerate() {
            let v = s.vector().eval_deriv(x, &[j])?;
            for i in 0..n {
                m[(i, a)] = v[i];
            }
        }
        Ok(m)
    }

    /// Partial derivative `d_j p_{ia}` at `x`.
    pub fn p_deriv_at(&self, x: &[f64], j: usize) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let k = self.rank();
        let mut m = DMatrix::zeros(n, k);
        for (a, s) in self.inner.sections.iter().enumerate() {
            let f = s.one_form().eval_deriv(x, &[j])?;
            for i in 0..n {
                m[(i, a)] = f[i];
            }
        }
        Ok(m)
    }

    /// Stacked `2n x k` coefficient matrix `[q; p]` at `x`.
    pub fn span_matrix(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let k = self.rank();
        let q = self.q_at(x)?;
        let p = self.p_at(x)?;
        let mut m = DMatrix::zeros(2 * n, k);
        for a in 0..k {
            for i in 0..n {
                m[(i, a)] = q[(i, a)];
                m[(n + i, a)] = p[(i, a)];
            }
        }
        Ok(m)
    }

    /// Max pairing `|<Theta_a, Theta_b>|` over the given points and all pairs.
    pub fn isotropy_residual(&self, points: &[Vec<f64>]) -> Result<f64> {
        let mut worst = 0.0f64;
        for p in points {
            let q = self.q_at(p)?;
            let pm = self.p_at(p)?;
            let k = self.rank();
            for a in 0..k {
                for b in a..k {
                    let mut acc = 0.0;
                    for i in 0..self.dim() {
                        acc += q[(i, a)] * pm[(i, b)] + q[(i, b)] * pm[(i, a)];
                    }
                    worst = worst.max(acc.abs());
                }
            }
        }
        Ok(worst)
    }

    /// Structure functions `C^g_{ab}(x)` (flattened `g*k*k + a*k + b`,
    /// antisymmetric in `a, b` by construction) and the off-span residual of
    /// the least-squares solves.
    pub fn structure_functions_at(&self, x: &[f64]) -> Result<(Vec<f64>, f64)> {
        let n = self.dim();
        let k = self.rank();
        let span = self.span_matrix(x)?;
        let svd = span.clone().svd(true, true);
        let mut c = vec![0.0; k * k * k];
        let mut worst = 0.0f64;
        let mut idx = 0;
        for a in 0..k {
            for b in (a + 1)..k {
                let br = &self.inner.pair_brackets[idx];
                idx += 1;
                let v = br.vector().eval(x)?;
                let f = br.one_form().eval(x)?;
                let mut rhs = DVector::zeros(2 * n);
                for i in 0..n {
                    rhs[i] = v[i];
                    rhs[n + i] = f[i];
                }
                let sol = svd
                    .solve(&rhs, RANK_TOL)
                    .map_err(|_| Error::RankDeficient { found: 0, expected: k })?;
                let residual = (&span * &sol - &rhs).norm();
                worst = worst.max(residual);
                for g in 0..k {
                    c[g * k * k + a * k + b] = sol[g];
                    c[g * k * k + b * k + a] = -sol[g];
                }
            }
        }
        Ok((c, worst))
    }

    /// The structure functions as scalar fields (derivatives by central differences).
    pub fn structure_function_fields(&self) -> StructureFunctions {
        StructureFunctions { frame: self.clone() }
    }
}

fn row_of_bivector(pi: &SmoothField, alpha: usize) -> Result<SmoothField> {
    // q^i_a = pi^{ai} as an exact-by-composition vector field
    struct RowRule {
        pi: SmoothField,
        alpha: usize,
    }
    impl FieldRule for RowRule {
        fn eval_into(&self, x: &[f64], derivs: &[usize], out: &mut [f64]) {
            let n = self.pi.dim();
            let c = self
                .pi
                .eval_deriv(x, derivs)
                .expect("bivector row evaluation");
            for i in 0..n {
                out[i] = c[self.alpha * n + i];
            }
        }
    }
    let n = pi.dim();
    Ok(SmoothField::from_rule_unchecked(
        FieldKind::Vector,
        n,
        Arc::new(RowRule { pi: pi.clone(), alpha }),
    ))
}

/// Structure functions of a frame, presented as evaluable scalar fields.
pub struct StructureFunctions {
    frame: DiracFrame,
}

impl StructureFunctions {
    pub fn rank(&self) -> usize {
        self.frame.rank()
    }

    /// The scalar field `C^g_{ab}`.
    pub fn field(&self, g: usize, a: usize, b: usize) -> SmoothField {
        struct CRule {
            frame: DiracFrame,
            g: usize,
            a: usize,
            b: usize,
            step: f64,
        }
        impl CRule {
            fn value(&self, x: &[f64]) -> f64 {
                let k = self.frame.rank();
                let (c, _) = self
                    .frame
                    .structure_functions_at(x)
                    .expect("structure function evaluation");
                c[self.g * k * k + self.a * k + self.b]
            }
            fn eval_rec(&self, x: &[f64], derivs: &[usize]) -> f64 {
                if derivs.is_empty() {
                    return self.value(x);
                }
                let j = derivs[0];
                let rest = &derivs[1..];
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[j] += self.step;
                xm[j] -= self.step;
                (self.eval_rec(&xp, rest) - self.eval_rec(&xm, rest)) / (2.0 * self.step)
            }
        }
        impl FieldRule for CRule {
            fn eval_into(&self, x: &[f64], derivs: &[usize], out: &mut [f64]) {
                out[0] = self.eval_rec(x, derivs);
            }
        }
        SmoothField::from_rule_unchecked(
            FieldKind::Scalar,
            self.frame.dim(),
            Arc::new(CRule {
                frame: self.frame.clone(),
                g,
                a,
                b,
                step: DEFAULT_FD_STEP,
            }),
        )
    }
}

/// Graph-of-two-form helper: checks `dB = H` directly at sampled points.
/// This is the same condition the involutivity gate enforces; exposed for
/// diagnostics and for demonstrating the gate.
pub fn two_form_graph_residual(b: &SmoothField, twist: &TwistClass) -> Result<f64> {
    let db = exterior_derivative(b)?;
    let n = b.dim();
    let mut worst = 0.0f64;
    for p in sample_points(n, 16, 0xB00B5) {
        let lhs = db.eval(&p)?;
        let rhs = match twist.three_form() {
            Some(h) => h.eval(&p)?,
            None => vec![0.0; lhs.len()],
        };
        for (l, r) in lhs.iter().zip(&rhs) {
            worst = worst.max((l - r).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::sample_points;

    fn vol3() -> SmoothField {
        SmoothField::from_terms(FieldKind::ThreeForm, 3, &[(1.0, vec![0; 3], vec![0, 1, 2])])
            .unwrap()
    }

    #[test]
    fn graph_of_zero_two_form_is_coordinate_frame() {
        let b = SmoothField::zero(FieldKind::TwoForm, 3);
        let frame = DiracFrame::graph_of_two_form(b, TwistClass::zero(3)).unwrap();
        let x = [0.3, -0.2, 0.8];
        let (c, residual) = frame.structure_functions_at(&x).unwrap();
        assert!(residual < 1e-12);
        for v in c {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn graph_of_constant_two_form_example() {
        // B = dx^1 ^ dx^2: Theta_1 = d1 + dx^2, Theta_2 = d2 - dx^1
        let b = SmoothField::from_terms(FieldKind::TwoForm, 2, &[(1.0, vec![0, 0], vec![0, 1])])
            .unwrap();
        let frame = DiracFrame::graph_of_two_form(b, TwistClass::zero(2)).unwrap();
        let x = [0.5, 0.5];
        let p = frame.p_at(&x).unwrap();
        // p_{i1} = B_{1i}: (0, 1); p_{i2} = B_{2i}: (-1, 0)
        assert_eq!(p[(0, 0)], 0.0);
        assert_eq!(p[(1, 0)], 1.0);
        assert_eq!(p[(0, 1)], -1.0);
        assert_eq!(p[(1, 1)], 0.0);
        let (c, residual) = frame.structure_functions_at(&x).unwrap();
        assert!(residual < 1e-12);
        assert!(c.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn twisted_graph_accepts_h_equals_db() {
        // B = x^1 dx^2 ^ dx^3, H = dB = dx^1 ^ dx^2 ^ dx^3
        let mut e = vec![0u32; 3];
        e[0] = 1;
        let b = SmoothField::from_terms(FieldKind::TwoForm, 3, &[(1.0, e, vec![1, 2])]).unwrap();
        let tw = TwistClass::closed(vol3()).unwrap();
        assert!(two_form_graph_residual(&b, &tw).unwrap() < 1e-12);
        let frame = DiracFrame::graph_of_two_form(b, tw).unwrap();
        let (c, residual) = frame
            .structure_functions_at(&[0.4, -0.1, 0.2])
            .unwrap();
        assert!(residual < 1e-10);
        assert!(c.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn non_closed_two_form_with_zero_twist_is_rejected() {
        let mut e = vec![0u32; 3];
        e[0] = 1;
        let b = SmoothField::from_terms(FieldKind::TwoForm, 3, &[(1.0, e, vec![1, 2])]).unwrap();
        let err = DiracFrame::graph_of_two_form(b, TwistClass::zero(3)).unwrap_err();
        assert!(matches!(err, Error::Involutivity { .. }));
    }

    #[test]
    fn graph_of_zero_and_constant_bivector() {
        let pi0 = SmoothField::zero(FieldKind::Bivector, 3);
        let f0 = DiracFrame::graph_of_bivector(pi0).unwrap();
        let pts = sample_points(3, 10, 5);
        assert!(f0.isotropy_residual(&pts).unwrap() < 1e-14);

        let pic = SmoothField::from_terms(FieldKind::Bivector, 3, &[(0.7, vec![0; 3], vec![0, 1])])
            .unwrap();
        let fc = DiracFrame::graph_of_bivector(pic).unwrap();
        let (c, residual) = fc.structure_functions_at(&[0.1, 0.9, -0.5]).unwrap();
        assert!(residual < 1e-12);
        assert!(c.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn lie_poisson_so3_structure_functions() {
        // pi^{ab} = eps^{abk} x_k; expect C^g_{ab} = eps^{abg}
        let eps = |a: usize, b: usize, c: usize| -> f64 {
            match (a, b, c) {
                (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
                (1, 0, 2) | (0, 2, 1) | (2, 1, 0) => -1.0,
                _ => 0.0,
            }
        };
        let mut terms = Vec::new();
        for a in 0..3 {
            for b in (a + 1)..3 {
                for k in 0..3 {
                    let e = eps(a, b, k);
                    if e != 0.0 {
                        let mut exps = vec![0u32; 3];
                        exps[k] = 1;
                        terms.push((e, exps, vec![a, b]));
                    }
                }
            }
        }
        let pi = SmoothField::from_terms(FieldKind::Bivector, 3, &terms).unwrap();
        let frame = DiracFrame::graph_of_bivector(pi).unwrap();
        for x in [[1.0, 0.0, 0.0], [0.3, -0.4, 0.9]] {
            let (c, residual) = frame.structure_functions_at(&x).unwrap();
            assert!(residual < 1e-10, "off-span residual {residual}");
            for g in 0..3 {
                for a in 0..3 {
                    for b in 0..3 {
                        let want = eps(a, b, g);
                        let got = c[g * 9 + a * 3 + b];
                        assert!(
                            (got - want).abs() < 1e-9,
                            "C^{g}_{a}{b}: got {got}, want {want}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn corrupted_frame_fails_isotropy() {
        // perturb p_{11} of the coordinate-frame graph by 1
        let n = 2;
        let mut sections = Vec::new();
        for alpha in 0..n {
            let q = SmoothField::basis_vector(n, alpha);
            let p = if alpha == 0 {
                SmoothField::constant(FieldKind::OneForm, n, &[1.0, 0.0]).unwrap()
            } else {
                SmoothField::zero(FieldKind::OneForm, n)
            };
            sections.push(GeneralizedSection::new(q, p).unwrap());
        }
        let err = DiracFrame::from_sections(sections, TwistClass::zero(n)).unwrap_err();
        match err {
            Error::Isotropy { residual } => assert!(residual >= 2.0 - 1e-12),
            other => panic!("expected isotropy failure, got {other:?}"),
        }
    }

    #[test]
    fn relaxed_constructor_accepts_non_maximal_frame() {
        let n = 3;
        let sections = vec![
            GeneralizedSection::from_vector(SmoothField::basis_vector(n, 0)).unwrap(),
            GeneralizedSection::from_vector(SmoothField::basis_vector(n, 1)).unwrap(),
        ];
        assert!(DiracFrame::from_sections(sections.clone(), TwistClass::zero(n)).is_err());
        let frame = DiracFrame::from_sections_isotropic(sections, TwistClass::zero(n)).unwrap();
        assert_eq!(frame.rank(), 2);
    }

    #[test]
    fn coordinate_bracket_identity_holds() {
        // C^g_{ab} p_{ig} matches the first-derivative combination from the
        // bracket expansion, for the so(3) bivector frame.
        let eps = |a: usize, b: usize, c: usize| -> f64 {
            match (a, b, c) {
                (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
                (1, 0, 2) | (0, 2, 1) | (2, 1, 0) => -1.0,
                _ => 0.0,
            }
        };
        let mut terms = Vec::new();
        for a in 0..3 {
            for b in (a + 1)..3 {
                for k in 0..3 {
                    let e = eps(a, b, k);
                    if e != 0.0 {
                        let mut exps = vec![0u32; 3];
                        exps[k] = 1;
                        terms.push((e, exps, vec![a, b]));
                    }
                }
            }
        }
        let pi = SmoothField::from_terms(FieldKind::Bivector, 3, &terms).unwrap();
        let frame = DiracFrame::graph_of_bivector(pi).unwrap();
        let n = 3;
        for x in sample_points(n, 5, 71) {
            let (c, _) = frame.structure_functions_at(&x).unwrap();
            let p = frame.p_at(&x).unwrap();
            let q = frame.q_at(&x).unwrap();
            let mut dq = Vec::new();
            let mut dp = Vec::new();
            for j in 0..n {
                dq.push(frame.q_deriv_at(&x, j).unwrap());
                dp.push(frame.p_deriv_at(&x, j).unwrap());
            }
            for a in 0..n {
                for b in 0..n {
                    for i in 0..n {
                        let mut lhs = 0.0;
                        for g in 0..n {
                            lhs += c[g * 9 + a * 3 + b] * p[(i, g)];
                        }
                        let mut rhs = 0.0;
                        for j in 0..n {
                            rhs += q[(j, a)] * dp[j][(i, b)] - q[(j, b)] * dp[j][(i, a)]
                                + p[(j, b)] * dq[i][(j, a)]
                                + q[(j, b)] * dp[i][(j, a)];
                        }
                        assert!(
                            (lhs - rhs).abs() < 1e-7,
                            "coordinate identity at ({a},{b},{i}): {lhs} vs {rhs}"
                        );
                    }
                }
            }
        }
    }
}
