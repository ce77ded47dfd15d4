//! Numerical toolkit for exact Courant algebroids over a flat chart:
//! chart-level bracket calculus, frame-presented Dirac structures,
//! discretized simplex mapping spaces with their symplectic forms, and a
//! scenario runner that certifies the structural identities on refinement
//! ladders.

pub mod analytic;
pub mod courant;
pub mod dirac;
pub mod error;
pub mod field;
pub mod forms;
pub mod quadrature;
pub mod simplex;

pub use courant::{
    courant_bracket, jacobi_residual, pairing, pairing_field, twisted_bracket, GeneralizedSection,
    TwistClass,
};
pub use dirac::{DiracFrame, StructureFunctions};
pub use error::{Error, Result};
pub use field::{
    exterior_derivative, interior_product, lie_bracket, lie_derivative, FieldKind, PolyTerm,
    SmoothField,
};
pub use forms::{
    coboundary, lambda1, lambda2, omega1, omega2, omega_h_1, omega_h_2, phi_h_1, phi_h_2,
    PathForm, TriangleForm, TRANSGRESSION_COUPLING,
};
pub use quadrature::{quadrature_edge, quadrature_triangle};
pub use simplex::{
    boundary_triple, face, face_tangent, horn_fill, truncation_tangent_model, DiscretePath,
    DiscreteTriangle, TangentPath, TangentTriangle, TriangleBoundaryTriple,
};
