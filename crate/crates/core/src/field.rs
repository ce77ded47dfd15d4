//! Chart-level tensor fields on a single chart `R^n`.
//!
//! A [`SmoothField`] is a component array (full, uncompressed storage for
//! forms and bivectors) together with an evaluation rule that can produce
//! values and iterated partial derivatives at a point. Polynomial rules
//! differentiate exactly; closure-backed rules fall back to central
//! differences. Composite operations (exterior derivative, Lie bracket,
//! interior product) return new fields whose rules chain derivative calls
//! through their inputs, so the algebra stays exact when the leaves are
//! polynomial.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// What a field's component array represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Scalar,
    Vector,
    OneForm,
    TwoForm,
    ThreeForm,
    Bivector,
}

impl FieldKind {
    /// Number of stored components in dimension `dim`.
    pub fn components(self, dim: usize) -> usize {
        match self {
            FieldKind::Scalar => 1,
            FieldKind::Vector | FieldKind::OneForm => dim,
            FieldKind::TwoForm | FieldKind::Bivector => dim * dim,
            FieldKind::ThreeForm => dim * dim * dim,
        }
    }

    /// Form degree, if this kind is a differential form (scalars count as 0-forms).
    pub fn form_degree(self) -> Option<usize> {
        match self {
            FieldKind::Scalar => Some(0),
            FieldKind::OneForm => Some(1),
            FieldKind::TwoForm => Some(2),
            FieldKind::ThreeForm => Some(3),
            FieldKind::Vector | FieldKind::Bivector => None,
        }
    }

    fn is_antisymmetric(self) -> bool {
        matches!(
            self,
            FieldKind::TwoForm | FieldKind::ThreeForm | FieldKind::Bivector
        )
    }
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FieldKind::Scalar => "scalar",
            FieldKind::Vector => "vector",
            FieldKind::OneForm => "one-form",
            FieldKind::TwoForm => "two-form",
            FieldKind::ThreeForm => "three-form",
            FieldKind::Bivector => "bivector",
        };
        f.write_str(s)
    }
}

/// Evaluation rule: components and iterated partials at a chart point.
///
/// `derivs` lists differentiation indices applied left to right, so
/// `eval_into(x, &[j, k], out)` writes the components of `d_j d_k (field)`.
pub trait FieldRule: Send + Sync {
    fn eval_into(&self, x: &[f64], derivs: &[usize], out: &mut [f64]);
}

/// One monomial `coeff * x^exponents` of a polynomial component.
#[derive(Debug, Clone)]
pub struct PolyTerm {
    pub coeff: f64,
    pub exponents: Vec<u32>,
}

impl PolyTerm {
    pub fn new(coeff: f64, exponents: Vec<u32>) -> Self {
        PolyTerm { coeff, exponents }
    }
}

struct PolyRule {
    // one sparse term list per component
    components: Vec<Vec<PolyTerm>>,
}

impl FieldRule for PolyRule {
    fn eval_into(&self, x: &[f64], derivs: &[usize], out: &mut [f64]) {
        for (c, terms) in self.components.iter().enumerate() {
            let mut acc = 0.0;
            'term: for t in terms {
                let mut coeff = t.coeff;
                let mut exps: Vec<u32> = t.exponents.clone();
                for &j in derivs {
                    if exps[j] == 0 {
                        continue 'term;
                    }
                    coeff *= exps[j] as f64;
                    exps[j] -= 1;
                }
                let mut v = coeff;
                for (j, &e) in exps.iter().enumerate() {
                    for _ in 0..e {
                        v *= x[j];
                    }
                }
                acc += v;
            }
            out[c] = acc;
        }
    }
}

struct FnRule {
    f: Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>,
    len: usize,
    step: f64,
}

impl FieldRule for FnRule {
    fn eval_into(&self, x: &[f64], derivs: &[usize], out: &mut [f64]) {
        if derivs.is_empty() {
            (self.f)(x, out);
            return;
        }
        // central difference in the first listed index, recursing on the rest
        let j = derivs[0];
        let rest = &derivs[1..];
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += self.step;
        xm[j] -= self.step;
        let mut plus = vec![0.0; self.len];
        let mut minus = vec![0.0; self.len];
        self.eval_into(&xp, rest, &mut plus);
        self.eval_into(&xm, rest, &mut minus);
        for c in 0..self.len {
            out[c] = (plus[c] - minus[c]) / (2.0 * self.step);
        }
    }
}

struct LinCombRule {
    parts: Vec<(f64, SmoothField)>,
    len: usize,
}

impl FieldRule for LinCombRule {
    fn eval_into(&self, x: &[f64], derivs: &[usize], out: &mut [f64]) {
        out.fill(0.0);
        let mut buf = vec![0.0; self.len];
        for (w, f) in &self.parts {
            f.rule.eval_into(x, derivs, &mut buf);
            for c in 0..self.len {
                out[c] += w * buf[c];
            }
        }
    }
}

/// Iterate over all splittings of a derivative list into two sublists
/// (the Leibniz rule for a product of two factors).
fn for_each_split(derivs: &[usize], mut f: impl FnMut(&[usize], &[usize])) {
    let m = derivs.len();
    let mut left = Vec::with_capacity(m);
    let mut right = Vec::with_capacity(m);
    for mask in 0..(1usize << m) {
        left.clear();
        right.clear();
        for (pos, &d) in derivs.iter().enumerate() {
            if mask & (1 << pos) != 0 {
                left.push(d);
            } else {
                right.push(d);
            }
        }
        f(&left, &right);
    }
}

/// `(d f)_{i0..ik} = sum_m (-1)^m d_{i_m} f_{i0..^i_m..ik}` on full component arrays.
struct ExtDerivRule {
    inner: SmoothField,
    out_degree: usize,
}

impl FieldRule for ExtDerivRule {
    fn eval_into(&self, x: &[f64], derivs: &[usize], out: &mut [f64]) {
        let n = self.inner.dim;
        let in_len = self.inner.len();
        // partials of the input in every coordinate direction, on top of `derivs`
        let mut dbuf: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut dl: Vec<usize> = Vec::with_capacity(derivs.len() + 1);
        for j in 0..n {
            dl.clear();
            dl.push(j);
            dl.extend_from_slice(derivs);
            let mut b = vec![0.0; in_len];
            self.inner.rule.eval_into(x, &dl, &mut b);
            dbuf.push(b);
        }
        match self.out_degree {
            1 => {
                for i in 0..n {
                    out[i] = dbuf[i][0];
                }
            }
            2 => {
                for i in 0..n {
                    for j in 0..n {
                        out[i * n + j] = dbuf[i][j] - dbuf[j][i];
                    }
                }
            }
            3 => {
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            out[(i * n + j) * n + k] =
                                dbuf[i][j * n + k] - dbuf[j][i * n + k] + dbuf[k][i * n + j];
                        }
                    }
                }
            }
            _ => unreachable!("output degree checked at construction"),
        }
    }
}

/// `(iota_X f)_I = X^j f_{jI}`, contraction in the first slot.
struct InteriorRule {
    vector: SmoothField,
    form: SmoothField,
    out_len: usize,
}

impl FieldRule for InteriorRule {
    fn eval_into(&self, x: &[f64], derivs: &[usize], out: &mut [f64]) {
        let n = self.vector.dim;
        out.fill(0.0);
        let mut vbuf = vec![0.0; n];
        let mut fbuf = vec![0.0; self.form.len()];
        for_each_split(derivs, |dl, dr| {
            self.vector.rule.eval_into(x, dl, &mut vbuf);
            self.form.rule.eval_into(x, dr, &mut fbuf);
            for j in 0..n {
                let block = &fbuf[j * self.out_len..(j + 1) * self.out_len];
                for c in 0..self.out_len {
                    out[c] += vbuf[j] * block[c];
                }
            }
        });
    }
}

/// `[X,Y]^i = X^j d_j Y^i - Y^j d_j X^i`.
struct LieBracketRule {
    x: SmoothField,
    y: SmoothField,
}

impl FieldRule for LieBracketRule {
    fn eval_into(&self, x: &[f64], derivs: &[usize], out: &mut [f64]) {
        let n = self.x.dim;
        out.fill(0.0);
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        let mut dl_j: Vec<usize> = Vec::new();
        for_each_split(derivs, |dl, dr| {
            for j in 0..n {
                dl_j.clear();
                dl_j.push(j);
                dl_j.extend_from_slice(dr);
                // X^j (under dl) times d_j Y (under dr)
                self.x.rule.eval_into(x, dl, &mut a);
                self.y.rule.eval_into(x, &dl_j, &mut b);
                let xj = a[j];
                for i in 0..n {
                    out[i] += xj * b[i];
                }
                // minus Y^j (under dl) times d_j X (under dr)
                self.y.rule.eval_into(x, dl, &mut a);
                self.x.rule.eval_into(x, &dl_j, &mut b);
                let yj = a[j];
                for i in 0..n {
                    out[i] -= yj * b[i];
                }
            }
        });
    }
}

/// A tensor field on the chart, evaluable with derivatives.
#[derive(Clone)]
pub struct SmoothField {
    kind: FieldKind,
    dim: usize,
    rule: Arc<dyn FieldRule>,
}

impl fmt::Debug for SmoothField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SmoothField({} on R^{})", self.kind, self.dim)
    }
}

/// Default step for closure-backed central differences.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Deterministic sample points in the unit box, used by construction-time checks.
pub(crate) fn sample_points(dim: usize, count: usize, salt: u64) -> Vec<Vec<f64>> {
    let mut state = 0x9e37_79b9_7f4a_7c15u64 ^ salt;
    let mut next = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    };
    (0..count).map(|_| (0..dim).map(|_| next()).collect()).collect()
}

impl SmoothField {
    /// Build from a rule without the construction-time antisymmetry sampling;
    /// for crate-internal rules whose output is antisymmetric by construction.
    pub(crate) fn from_rule_unchecked(
        kind: FieldKind,
        dim: usize,
        rule: Arc<dyn FieldRule>,
    ) -> Self {
        SmoothField { kind, dim, rule }
    }

    fn from_rule(kind: FieldKind, dim: usize, rule: Arc<dyn FieldRule>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionMismatch("chart dimension must be positive".into()));
        }
        let field = SmoothField { kind, dim, rule };
        if kind.is_antisymmetric() {
            field.check_antisymmetry()?;
        }
        Ok(field)
    }

    fn check_antisymmetry(&self) -> Result<()> {
        let n = self.dim;
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for p in sample_points(n, 4, 0xA5) {
            let c = self.eval(&p)?;
            for v in &c {
                scale = scale.max(v.abs());
            }
            match self.kind {
                FieldKind::TwoForm | FieldKind::Bivector => {
                    for i in 0..n {
                        for j in 0..n {
                            worst = worst.max((c[i * n + j] + c[j * n + i]).abs());
                        }
                    }
                }
                FieldKind::ThreeForm => {
                    for i in 0..n {
                        for j in 0..n {
                            for k in 0..n {
                                let v = c[(i * n + j) * n + k];
                                worst = worst.max((v + c[(j * n + i) * n + k]).abs());
                                worst = worst.max((v + c[(i * n + k) * n + j]).abs());
                            }
                        }
                    }
                }
                _ => {}
            }
        }
        if worst > 1e-9 * scale.max(1.0) {
            return Err(Error::Antisymmetry { residual: worst });
        }
        Ok(())
    }

    /// Field with polynomial components, exact under differentiation.
    pub fn polynomial(
        kind: FieldKind,
        dim: usize,
        components: Vec<Vec<PolyTerm>>,
    ) -> Result<Self> {
        if components.len() != kind.components(dim) {
            return Err(Error::ShapeMismatch(format!(
                "{} on R^{} needs {} components, got {}",
                kind,
                dim,
                kind.components(dim),
                components.len()
            )));
        }
        for terms in &components {
            for t in terms {
                if t.exponents.len() != dim {
                    return Err(Error::ShapeMismatch(
                        "polynomial exponent lists must match the chart dimension".into(),
                    ));
                }
            }
        }
        Self::from_rule(kind, dim, Arc::new(PolyRule { components }))
    }

    /// Constant field from a raw component array.
    pub fn constant(kind: FieldKind, dim: usize, values: &[f64]) -> Result<Self> {
        let comps = values
            .iter()
            .map(|&v| {
                if v == 0.0 {
                    vec![]
                } else {
                    vec![PolyTerm::new(v, vec![0; dim])]
                }
            })
            .collect();
        Self::polynomial(kind, dim, comps)
    }

    /// Zero field of a given kind.
    pub fn zero(kind: FieldKind, dim: usize) -> Self {
        Self::constant(kind, dim, &vec![0.0; kind.components(dim)]).expect("zero field")
    }

    /// Closure-backed field; derivatives use central differences with `step`.
    pub fn from_fn(
        kind: FieldKind,
        dim: usize,
        f: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        step: f64,
    ) -> Result<Self> {
        let len = kind.components(dim);
        Self::from_rule(
            kind,
            dim,
            Arc::new(FnRule {
                f: Arc::new(f),
                len,
                step,
            }),
        )
    }

    /// Antisymmetric field from sparse slot terms: each entry is
    /// `coeff * x^exponents * dx^{slots[0]} ^ dx^{slots[1]} (^ ...)`,
    /// written into the full component array with all signed permutations.
    /// Vector and scalar kinds take a single slot / no slot.
    pub fn from_terms(
        kind: FieldKind,
        dim: usize,
        terms: &[(f64, Vec<u32>, Vec<usize>)],
    ) -> Result<Self> {
        let len = kind.components(dim);
        let mut comps: Vec<Vec<PolyTerm>> = vec![Vec::new(); len];
        for (coeff, exps, slots) in terms {
            if exps.len() != dim {
                return Err(Error::ShapeMismatch(
                    "term exponent list must match the chart dimension".into(),
                ));
            }
            for &s in slots {
                if s >= dim {
                    return Err(Error::ShapeMismatch(format!(
                        "slot index {s} out of range for R^{dim}"
                    )));
                }
            }
            let push = |comps: &mut Vec<Vec<PolyTerm>>, idx: usize, c: f64| {
                comps[idx].push(PolyTerm::new(c, exps.clone()));
            };
            match (kind, slots.len()) {
                (FieldKind::Scalar, 0) => push(&mut comps, 0, *coeff),
                (FieldKind::Vector, 1) | (FieldKind::OneForm, 1) => {
                    push(&mut comps, slots[0], *coeff)
                }
                (FieldKind::TwoForm, 2) | (FieldKind::Bivector, 2) => {
                    let (i, j) = (slots[0], slots[1]);
                    if i == j {
                        return Err(Error::Antisymmetry { residual: coeff.abs() });
                    }
                    push(&mut comps, i * dim + j, *coeff);
                    push(&mut comps, j * dim + i, -*coeff);
                }
                (FieldKind::ThreeForm, 3) => {
                    let (i, j, k) = (slots[0], slots[1], slots[2]);
                    if i == j || j == k || i == k {
                        return Err(Error::Antisymmetry { residual: coeff.abs() });
                    }
                    let perms: [([usize; 3], f64); 6] = [
                        ([i, j, k], 1.0),
                        ([j, k, i], 1.0),
                        ([k, i, j], 1.0),
                        ([j, i, k], -1.0),
                        ([i, k, j], -1.0),
                        ([k, j, i], -1.0),
                    ];
                    for (p, s) in perms {
                        push(&mut comps, (p[0] * dim + p[1]) * dim + p[2], s * coeff);
                    }
                }
                _ => {
                    return Err(Error::Kind(format!(
                        "{} takes {} slot indices, got {}",
                        kind,
                        match kind {
                            FieldKind::Scalar => 0,
                            FieldKind::Vector | FieldKind::OneForm => 1,
                            FieldKind::TwoForm | FieldKind::Bivector => 2,
                            FieldKind::ThreeForm => 3,
                        },
                        slots.len()
                    )))
                }
            }
        }
        Self::polynomial(kind, dim, comps)
    }

    /// The coordinate vector field `d_i`.
    pub fn basis_vector(dim: usize, i: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        Self::constant(FieldKind::Vector, dim, &v).expect("basis vector")
    }

    /// The coordinate one-form `dx^i`.
    pub fn coordinate_one_form(dim: usize, i: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        Self::constant(FieldKind::OneForm, dim, &v).expect("coordinate one-form")
    }

    /// The coordinate function `x^i`.
    pub fn coordinate(dim: usize, i: usize) -> Self {
        let mut exps = vec![0u32; dim];
        exps[i] = 1;
        Self::polynomial(FieldKind::Scalar, dim, vec![vec![PolyTerm::new(1.0, exps)]])
            .expect("coordinate function")
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.kind.components(self.dim)
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPoint {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Component array at `x`.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        let mut out = vec![0.0; self.len()];
        self.rule.eval_into(x, &[], &mut out);
        Ok(out)
    }

    /// Iterated partial derivative `d_{derivs[0]} d_{derivs[1]} ...` of every component.
    pub fn eval_deriv(&self, x: &[f64], derivs: &[usize]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        if derivs.iter().any(|&j| j >= self.dim) {
            return Err(Error::DimensionMismatch(
                "derivative index out of range".into(),
            ));
        }
        let mut out = vec![0.0; self.len()];
        self.rule.eval_into(x, derivs, &mut out);
        Ok(out)
    }

    /// Weighted sum of fields of identical kind and dimension.
    pub fn linear_combination(parts: Vec<(f64, SmoothField)>) -> Result<Self> {
        let (kind, dim) = match parts.first() {
            Some((_, f)) => (f.kind, f.dim),
            None => return Err(Error::ShapeMismatch("empty linear combination".into())),
        };
        for (_, f) in &parts {
            if f.kind != kind || f.dim != dim {
                return Err(Error::DimensionMismatch(
                    "linear combination over mixed kinds or dimensions".into(),
                ));
            }
        }
        let len = kind.components(dim);
        // already-validated inputs; skip the sampling check
        Ok(SmoothField {
            kind,
            dim,
            rule: Arc::new(LinCombRule { parts, len }),
        })
    }

    pub fn add(&self, other: &SmoothField) -> Result<SmoothField> {
        Self::linear_combination(vec![(1.0, self.clone()), (1.0, other.clone())])
    }

    pub fn scale(&self, w: f64) -> SmoothField {
        Self::linear_combination(vec![(w, self.clone())]).expect("scale")
    }

    /// Contract a form with vectors in all its slots.
    pub fn contract(&self, x: &[f64], vectors: &[&[f64]]) -> Result<f64> {
        let deg = self
            .kind
            .form_degree()
            .ok_or_else(|| Error::Kind(format!("cannot contract a {}", self.kind)))?;
        if vectors.len() != deg {
            return Err(Error::ShapeMismatch(format!(
                "degree-{deg} form contracted with {} vectors",
                vectors.len()
            )));
        }
        let c = self.eval(x)?;
        let n = self.dim;
        let v = match deg {
            0 => c[0],
            1 => (0..n).map(|i| c[i] * vectors[0][i]).sum(),
            2 => {
                let mut acc = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        acc += c[i * n + j] * vectors[0][i] * vectors[1][j];
                    }
                }
                acc
            }
            3 => {
                let mut acc = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            acc += c[(i * n + j) * n + k]
                                * vectors[0][i]
                                * vectors[1][j]
                                * vectors[2][k];
                        }
                    }
                }
                acc
            }
            _ => unreachable!(),
        };
        Ok(v)
    }
}

/// Exterior derivative of a form of degree at most 2.
pub fn exterior_derivative(f: &SmoothField) -> Result<SmoothField> {
    let deg = f
        .kind
        .form_degree()
        .ok_or_else(|| Error::Degree(format!("exterior derivative of a {}", f.kind)))?;
    let out_kind = match deg {
        0 => FieldKind::OneForm,
        1 => FieldKind::TwoForm,
        2 => FieldKind::ThreeForm,
        _ => {
            return Err(Error::Degree(
                "exterior derivative supported for degrees 0..=2".into(),
            ))
        }
    };
    // rule output is antisymmetric by construction
    Ok(SmoothField {
        kind: out_kind,
        dim: f.dim,
        rule: Arc::new(ExtDerivRule {
            inner: f.clone(),
            out_degree: deg + 1,
        }),
    })
}

/// Interior product `iota_X f`, contracting the first slot.
pub fn interior_product(x: &SmoothField, f: &SmoothField) -> Result<SmoothField> {
    if x.kind != FieldKind::Vector {
        return Err(Error::Kind(format!("interior product needs a vector, got {}", x.kind)));
    }
    if x.dim != f.dim {
        return Err(Error::DimensionMismatch(
            "interior product over mixed dimensions".into(),
        ));
    }
    let deg = f
        .kind
        .form_degree()
        .ok_or_else(|| Error::Kind(format!("interior product into a {}", f.kind)))?;
    let out_kind = match deg {
        1 => FieldKind::Scalar,
        2 => FieldKind::OneForm,
        3 => FieldKind::TwoForm,
        _ => return Err(Error::Degree("interior product needs degree >= 1".into())),
    };
    let out_len = out_kind.components(f.dim);
    Ok(SmoothField {
        kind: out_kind,
        dim: f.dim,
        rule: Arc::new(InteriorRule {
            vector: x.clone(),
            form: f.clone(),
            out_len,
        }),
    })
}

/// Lie bracket of vector fields.
pub fn lie_bracket(x: &SmoothField, y: &SmoothField) -> Result<SmoothField> {
    if x.kind != FieldKind::Vector || y.kind != FieldKind::Vector {
        return Err(Error::Kind("lie_bracket takes two vector fields".into()));
    }
    if x.dim != y.dim {
        return Err(Error::DimensionMismatch("lie_bracket over mixed dimensions".into()));
    }
    Ok(SmoothField {
        kind: FieldKind::Vector,
        dim: x.dim,
        rule: Arc::new(LieBracketRule {
            x: x.clone(),
            y: y.clone(),
        }),
    })
}

/// Lie derivative of a form along a vector field, via `L_X = iota_X d + d iota_X`.
pub fn lie_derivative(x: &SmoothField, f: &SmoothField) -> Result<SmoothField> {
    if x.kind != FieldKind::Vector {
        return Err(Error::Kind("lie_derivative needs a vector field".into()));
    }
    if x.dim != f.dim {
        return Err(Error::DimensionMismatch(
            "lie_derivative over mixed dimensions".into(),
        ));
    }
    let deg = f
        .kind
        .form_degree()
        .ok_or_else(|| Error::Kind(format!("lie_derivative of a {}", f.kind)))?;
    if deg > 2 {
        return Err(Error::Degree("lie_derivative supported for degrees 0..=2".into()));
    }
    let term1 = interior_product(x, &exterior_derivative(f)?)?;
    if deg == 0 {
        return Ok(term1);
    }
    let term2 = exterior_derivative(&interior_product(x, f)?)?;
    term1.add(&term2)
}

/// Components of the degree-4 antisymmetrized derivative of a three-form,
/// flattened as `[i][j][k][l]`. Kept out of `FieldKind` since stored degrees
/// stop at 3; used to test closedness in dimension >= 4 and for transgressing
/// the derivative of a twist.
pub fn four_form_derivative(h: &SmoothField, x: &[f64]) -> Result<Vec<f64>> {
    if h.kind() != FieldKind::ThreeForm {
        return Err(Error::Kind("four_form_derivative takes a three-form".into()));
    }
    let n = h.dim();
    let mut partials = Vec::with_capacity(n);
    for j in 0..n {
        partials.push(h.eval_deriv(x, &[j])?);
    }
    let mut out = vec![0.0; n * n * n * n];
    let idx3 = |i: usize, j: usize, k: usize| (i * n + j) * n + k;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    out[((i * n + j) * n + k) * n + l] = partials[i][idx3(j, k, l)]
                        - partials[j][idx3(i, k, l)]
                        + partials[k][idx3(i, j, l)]
                        - partials[l][idx3(i, j, k)];
                }
            }
        }
    }
    Ok(out)
}

/// Max-norm of the degree-4 derivative of a three-form at `x` (zero iff closed there).
pub fn three_form_closedness_residual(h: &SmoothField, x: &[f64]) -> Result<f64> {
    Ok(four_form_derivative(h, x)?
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x_poly(dim: usize, i: usize) -> Vec<u32> {
        let mut e = vec![0u32; dim];
        e[i] = 1;
        e
    }

    #[test]
    fn exterior_derivative_of_monomial_one_form() {
        // d(x^2 dx^1) = -dx^1 ^ dx^2  (coefficient -1 in the (0,1) slot)
        let xi = SmoothField::from_terms(
            FieldKind::OneForm,
            2,
            &[(1.0, x_poly(2, 1), vec![0])],
        )
        .unwrap();
        let d = exterior_derivative(&xi).unwrap();
        let c = d.eval(&[0.3, -0.7]).unwrap();
        assert_eq!(c[0 * 2 + 1], -1.0);
        assert_eq!(c[1 * 2 + 0], 1.0);
    }

    #[test]
    fn exterior_derivative_of_constant_one_form_is_zero() {
        let xi = SmoothField::constant(FieldKind::OneForm, 3, &[1.0, -2.0, 0.5]).unwrap();
        let d = exterior_derivative(&xi).unwrap();
        for c in d.eval(&[0.1, 0.2, 0.3]).unwrap() {
            assert_eq!(c, 0.0);
        }
    }

    #[test]
    fn d_squared_vanishes() {
        // f = x^1 x^2 dx^3
        let mut e = vec![0u32; 3];
        e[0] = 1;
        e[1] = 1;
        let f = SmoothField::from_terms(FieldKind::OneForm, 3, &[(1.0, e, vec![2])]).unwrap();
        let dd = exterior_derivative(&exterior_derivative(&f).unwrap()).unwrap();
        for p in sample_points(3, 5, 7) {
            for c in dd.eval(&p).unwrap() {
                assert!(c.abs() < 1e-12, "d(d f) component {c}");
            }
        }
    }

    #[test]
    fn lie_bracket_examples() {
        let d1 = SmoothField::basis_vector(2, 0);
        let d2 = SmoothField::basis_vector(2, 1);
        let z = lie_bracket(&d1, &d2).unwrap();
        assert_eq!(z.eval(&[0.4, 0.9]).unwrap(), vec![0.0, 0.0]);

        // [x^1 d2, d1] = -d2
        let x1d2 =
            SmoothField::from_terms(FieldKind::Vector, 2, &[(1.0, x_poly(2, 0), vec![1])]).unwrap();
        let b = lie_bracket(&x1d2, &d1).unwrap();
        assert_eq!(b.eval(&[1.3, -2.0]).unwrap(), vec![0.0, -1.0]);

        // [x^1 d1, x^1 d2] = x^1 d2
        let x1d1 =
            SmoothField::from_terms(FieldKind::Vector, 2, &[(1.0, x_poly(2, 0), vec![0])]).unwrap();
        let c = lie_bracket(&x1d1, &x1d2).unwrap();
        let got = c.eval(&[0.7, 0.1]).unwrap();
        assert!((got[0] - 0.0).abs() < 1e-14);
        assert!((got[1] - 0.7).abs() < 1e-14);
    }

    #[test]
    fn lie_bracket_jacobi_polynomial_fields() {
        let n = 3;
        let mk = |terms: &[(f64, Vec<u32>, Vec<usize>)]| {
            SmoothField::from_terms(FieldKind::Vector, n, terms).unwrap()
        };
        let a = mk(&[(1.0, x_poly(n, 1), vec![0]), (0.5, x_poly(n, 2), vec![1])]);
        let b = mk(&[(1.0, x_poly(n, 0), vec![2]), (-0.7, vec![0, 0, 0], vec![0])]);
        let mut e2 = vec![0u32; n];
        e2[0] = 2;
        let c = mk(&[(0.3, e2, vec![1])]);

        let jac = |x: &SmoothField, y: &SmoothField, z: &SmoothField| {
            lie_bracket(&lie_bracket(x, y).unwrap(), z).unwrap()
        };
        let t1 = jac(&a, &b, &c);
        let t2 = jac(&b, &c, &a);
        let t3 = jac(&c, &a, &b);
        for p in sample_points(n, 6, 11) {
            let v1 = t1.eval(&p).unwrap();
            let v2 = t2.eval(&p).unwrap();
            let v3 = t3.eval(&p).unwrap();
            for i in 0..n {
                assert!((v1[i] + v2[i] + v3[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn interior_product_examples() {
        // iota_{d2}(dx^1 ^ dx^2 ^ dx^3) = dx^3 ^ dx^1
        let h = SmoothField::from_terms(
            FieldKind::ThreeForm,
            3,
            &[(1.0, vec![0, 0, 0], vec![0, 1, 2])],
        )
        .unwrap();
        let d2 = SmoothField::basis_vector(3, 1);
        let r = interior_product(&d2, &h).unwrap();
        let c = r.eval(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(c[2 * 3 + 0], 1.0); // (3,1) slot
        assert_eq!(c[0 * 3 + 2], -1.0);
        assert_eq!(c[0 * 3 + 1], 0.0);

        // iota_{d1} dx^2 = 0
        let dx2 = SmoothField::coordinate_one_form(3, 1);
        let d1 = SmoothField::basis_vector(3, 0);
        let s = interior_product(&d1, &dx2).unwrap();
        assert_eq!(s.eval(&[0.1, 0.2, 0.3]).unwrap()[0], 0.0);

        // iota_X iota_X of a two-form vanishes
        let b = SmoothField::from_terms(
            FieldKind::TwoForm,
            3,
            &[(1.0, x_poly(3, 2), vec![0, 1])],
        )
        .unwrap();
        let x = SmoothField::from_terms(
            FieldKind::Vector,
            3,
            &[(1.0, x_poly(3, 0), vec![0]), (2.0, vec![0; 3], vec![1])],
        )
        .unwrap();
        let xx = interior_product(&x, &interior_product(&x, &b).unwrap()).unwrap();
        for p in sample_points(3, 4, 3) {
            assert!(xx.eval(&p).unwrap()[0].abs() < 1e-12);
        }
    }

    #[test]
    fn lie_derivative_examples() {
        // L_{x^2 d1} dx^1 = dx^2
        let x = SmoothField::from_terms(FieldKind::Vector, 2, &[(1.0, x_poly(2, 1), vec![0])])
            .unwrap();
        let dx1 = SmoothField::coordinate_one_form(2, 0);
        let l = lie_derivative(&x, &dx1).unwrap();
        let c = l.eval(&[0.2, 0.5]).unwrap();
        assert!((c[0] - 0.0).abs() < 1e-14);
        assert!((c[1] - 1.0).abs() < 1e-14);

        // L_{d1} of a constant form vanishes
        let d1 = SmoothField::basis_vector(2, 0);
        let cf = SmoothField::constant(FieldKind::OneForm, 2, &[3.0, -1.0]).unwrap();
        let lz = lie_derivative(&d1, &cf).unwrap();
        assert_eq!(lz.eval(&[0.9, -0.4]).unwrap(), vec![0.0, 0.0]);

        // naturality: L_X df = d(X f) for f = x^1 x^2
        let mut e = vec![0u32; 2];
        e[0] = 1;
        e[1] = 1;
        let f = SmoothField::polynomial(FieldKind::Scalar, 2, vec![vec![PolyTerm::new(1.0, e)]])
            .unwrap();
        let lhs = lie_derivative(&x, &exterior_derivative(&f).unwrap()).unwrap();
        let rhs = exterior_derivative(&lie_derivative(&x, &f).unwrap()).unwrap();
        for p in sample_points(2, 5, 19) {
            let a = lhs.eval(&p).unwrap();
            let b = rhs.eval(&p).unwrap();
            for i in 0..2 {
                assert!((a[i] - b[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cartan_formula_matches_direct_leibniz_form() {
        // direct oracle for one-forms: (L_X xi)_i = X^j d_j xi_i + xi_j d_i X^j
        let n = 3;
        let x = SmoothField::from_terms(
            FieldKind::Vector,
            n,
            &[(1.0, x_poly(n, 1), vec![0]), (-0.5, x_poly(n, 0), vec![2])],
        )
        .unwrap();
        let mut e = vec![0u32; n];
        e[2] = 2;
        let xi = SmoothField::from_terms(
            FieldKind::OneForm,
            n,
            &[(1.0, e, vec![1]), (0.25, x_poly(n, 0), vec![0])],
        )
        .unwrap();
        let l = lie_derivative(&x, &xi).unwrap();
        for p in sample_points(n, 5, 23) {
            let got = l.eval(&p).unwrap();
            let xv = x.eval(&p).unwrap();
            let xiv = xi.eval(&p).unwrap();
            for i in 0..n {
                let mut want = 0.0;
                for j in 0..n {
                    want += xv[j] * xi.eval_deriv(&p, &[j]).unwrap()[i];
                    want += xiv[j] * x.eval_deriv(&p, &[i]).unwrap()[j];
                }
                assert!((got[i] - want).abs() < 1e-10, "component {i}");
            }
        }
    }

    #[test]
    fn finite_difference_derivatives_converge_at_order_two() {
        // f(x) = sin-free cubic so the FD error term is visible and clean
        let value = |x: &[f64], out: &mut [f64]| {
            out[0] = x[0] * x[0] * x[0] + 2.0 * x[0] * x[1];
        };
        let exact = |x: &[f64]| 3.0 * x[0] * x[0] + 2.0 * x[1];
        let p = [0.4, -0.3];
        let mut errs = Vec::new();
        for h in [1e-2, 5e-3, 2.5e-3] {
            let f = SmoothField::from_fn(FieldKind::Scalar, 2, value, h).unwrap();
            let d = f.eval_deriv(&p, &[0]).unwrap()[0];
            errs.push((d - exact(&p)).abs());
        }
        let order1 = (errs[0] / errs[1]).log2();
        let order2 = (errs[1] / errs[2]).log2();
        assert!(order1 > 1.8, "order {order1}");
        assert!(order2 > 1.8, "order {order2}");
    }

    #[test]
    fn antisymmetry_gate_rejects_bad_two_form() {
        // hand-build a symmetric "two-form": must be rejected
        let comps = vec![
            vec![],
            vec![PolyTerm::new(1.0, vec![0, 0])],
            vec![PolyTerm::new(1.0, vec![0, 0])],
            vec![],
        ];
        let err = SmoothField::polynomial(FieldKind::TwoForm, 2, comps).unwrap_err();
        assert!(matches!(err, Error::Antisymmetry { .. }));
    }

    #[test]
    fn degree_errors_are_reported() {
        let h = SmoothField::from_terms(
            FieldKind::ThreeForm,
            3,
            &[(1.0, vec![0; 3], vec![0, 1, 2])],
        )
        .unwrap();
        assert!(matches!(exterior_derivative(&h), Err(Error::Degree(_))));
        let f = SmoothField::coordinate(3, 0);
        let d1 = SmoothField::basis_vector(3, 0);
        assert!(matches!(interior_product(&d1, &f), Err(Error::Degree(_))));
    }
}
