//! The exact Courant algebroid on `TM + T*M` over a single chart:
//! symmetric pairing, Courant bracket, twisted bracket, and the Jacobi
//! residual that detects a non-closed twist.

use crate::error::{Error, Result};
use crate::field::{
    exterior_derivative, interior_product, lie_bracket, lie_derivative, sample_points,
    three_form_closedness_residual, FieldKind, SmoothField,
};

/// A section `X + xi` of `TM + T*M`.
#[derive(Debug, Clone)]
pub struct GeneralizedSection {
    vector: SmoothField,
    one_form: SmoothField,
}

impl GeneralizedSection {
    pub fn new(vector: SmoothField, one_form: SmoothField) -> Result<Self> {
        if vector.kind() != FieldKind::Vector {
            return Err(Error::Kind(format!(
                "vector part must be a vector field, got {}",
                vector.kind()
            )));
        }
        if one_form.kind() != FieldKind::OneForm {
            return Err(Error::Kind(format!(
                "covector part must be a one-form, got {}",
                one_form.kind()
            )));
        }
        if vector.dim() != one_form.dim() {
            return Err(Error::DimensionMismatch(
                "vector and covector parts live on different charts".into(),
            ));
        }
        Ok(GeneralizedSection { vector, one_form })
    }

    pub fn from_vector(vector: SmoothField) -> Result<Self> {
        let dim = vector.dim();
        Self::new(vector, SmoothField::zero(FieldKind::OneForm, dim))
    }

    pub fn from_one_form(one_form: SmoothField) -> Result<Self> {
        let dim = one_form.dim();
        Self::new(SmoothField::zero(FieldKind::Vector, dim), one_form)
    }

    pub fn vector(&self) -> &SmoothField {
        &self.vector
    }

    pub fn one_form(&self) -> &SmoothField {
        &self.one_form
    }

    pub fn dim(&self) -> usize {
        self.vector.dim()
    }

    /// Euclidean norm of the stacked (vector, covector) value at `x`.
    pub fn norm_at(&self, x: &[f64]) -> Result<f64> {
        let v = self.vector.eval(x)?;
        let f = self.one_form.eval(x)?;
        Ok(v.iter().chain(f.iter()).map(|a| a * a).sum::<f64>().sqrt())
    }
}

/// A background 3-form twist, with an optional verified closedness flag.
#[derive(Debug, Clone)]
pub struct TwistClass {
    dim: usize,
    three_form: Option<SmoothField>,
    closed: bool,
}

/// Tolerance for the sampled closedness verification below.
pub const CLOSEDNESS_TOL: f64 = 1e-8;

impl TwistClass {
    /// The zero twist (always closed).
    pub fn zero(dim: usize) -> Self {
        TwistClass { dim, three_form: None, closed: true }
    }

    /// A twist verified closed by sampling `dH` at deterministic points.
    pub fn closed(h: SmoothField) -> Result<Self> {
        if h.kind() != FieldKind::ThreeForm {
            return Err(Error::Kind("twist must be a three-form".into()));
        }
        let dim = h.dim();
        let mut worst = 0.0f64;
        for p in sample_points(dim, 16, 0x7157) {
            worst = worst.max(three_form_closedness_residual(&h, &p)?);
        }
        if worst > CLOSEDNESS_TOL {
            return Err(Error::Scenario(format!(
                "three-form is not closed (|dH| = {worst:.3e} at a sample point)"
            )));
        }
        Ok(TwistClass { dim, three_form: Some(h), closed: true })
    }

    /// A twist carried without verifying closedness.
    pub fn unverified(h: SmoothField) -> Result<Self> {
        if h.kind() != FieldKind::ThreeForm {
            return Err(Error::Kind("twist must be a three-form".into()));
        }
        let dim = h.dim();
        Ok(TwistClass { dim, three_form: Some(h), closed: false })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn three_form(&self) -> Option<&SmoothField> {
        self.three_form.as_ref()
    }

    pub fn is_zero(&self) -> bool {
        self.three_form.is_none()
    }

    pub fn closed_flag(&self) -> bool {
        self.closed
    }
}

fn check_same_chart(a: &GeneralizedSection, b: &GeneralizedSection) -> Result<usize> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(
            "sections live on charts of different dimension".into(),
        ));
    }
    Ok(a.dim())
}

/// `<X1 + xi1, X2 + xi2> = xi2(X1) + xi1(X2)` at `x`.
pub fn pairing(a: &GeneralizedSection, b: &GeneralizedSection, x: &[f64]) -> Result<f64> {
    let n = check_same_chart(a, b)?;
    let xa = a.vector.eval(x)?;
    let xb = b.vector.eval(x)?;
    let fa = a.one_form.eval(x)?;
    let fb = b.one_form.eval(x)?;
    let mut acc = 0.0;
    for i in 0..n {
        acc += fb[i] * xa[i] + fa[i] * xb[i];
    }
    Ok(acc)
}

/// The pairing as a scalar field (for `d <a,a>` style identities).
pub fn pairing_field(a: &GeneralizedSection, b: &GeneralizedSection) -> Result<SmoothField> {
    check_same_chart(a, b)?;
    let fa = interior_product(a.vector(), b.one_form())?;
    let fb = interior_product(b.vector(), a.one_form())?;
    fa.add(&fb)
}

/// Courant bracket `([X1,X2], L_{X1} xi2 - iota_{X2} d xi1)`.
pub fn courant_bracket(
    a: &GeneralizedSection,
    b: &GeneralizedSection,
) -> Result<GeneralizedSection> {
    check_same_chart(a, b)?;
    let vec_part = lie_bracket(a.vector(), b.vector())?;
    let l = lie_derivative(a.vector(), b.one_form())?;
    let i = interior_product(b.vector(), &exterior_derivative(a.one_form())?)?;
    GeneralizedSection::new(vec_part, l.add(&i.scale(-1.0))?)
}

/// Twisted bracket: the Courant bracket plus `iota_{X1} iota_{X2} H` in the
/// covector slot. The contraction order is fixed so that the extra one-form
/// evaluates on `Z` to `H(X2, X1, Z)`; with this binding the graph of a
/// two-form `B` is involutive exactly for the twist `H = dB`.
pub fn twisted_bracket(
    a: &GeneralizedSection,
    b: &GeneralizedSection,
    twist: &TwistClass,
) -> Result<GeneralizedSection> {
    let n = check_same_chart(a, b)?;
    let h = match twist.three_form() {
        None => return courant_bracket(a, b),
        Some(h) => {
            if twist.dim() != n {
                return Err(Error::DimensionMismatch(
                    "twist lives on a chart of different dimension".into(),
                ));
            }
            h
        }
    };
    let plain = courant_bracket(a, b)?;
    let twist_term = interior_product(a.vector(), &interior_product(b.vector(), h)?)?;
    GeneralizedSection::new(plain.vector.clone(), plain.one_form.add(&twist_term)?)
}

/// Norm of `[a,[b,c]] - [[a,b],c] - [b,[a,c]]` (twisted brackets) at `x`.
/// Vanishes when the twist is closed.
pub fn jacobi_residual(
    a: &GeneralizedSection,
    b: &GeneralizedSection,
    c: &GeneralizedSection,
    twist: &TwistClass,
    x: &[f64],
) -> Result<f64> {
    let t1 = twisted_bracket(a, &twisted_bracket(b, c, twist)?, twist)?;
    let t2 = twisted_bracket(&twisted_bracket(a, b, twist)?, c, twist)?;
    let t3 = twisted_bracket(b, &twisted_bracket(a, c, twist)?, twist)?;
    let v1 = t1.vector.eval(x)?;
    let v2 = t2.vector.eval(x)?;
    let v3 = t3.vector.eval(x)?;
    let f1 = t1.one_form.eval(x)?;
    let f2 = t2.one_form.eval(x)?;
    let f3 = t3.one_form.eval(x)?;
    let mut acc = 0.0;
    for i in 0..v1.len() {
        let dv = v1[i] - v2[i] - v3[i];
        let df = f1[i] - f2[i] - f3[i];
        acc += dv * dv + df * df;
    }
    Ok(acc.sqrt())
}
