//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unsupported degree: {0}")]
    Degree(String),

    #[error("invalid field kind: {0}")]
    Kind(String),

    #[error("point must have {expected} finite coordinates, got {got}")]
    InvalidPoint { expected: usize, got: usize },

    #[error("antisymmetry violated on construction (residual {residual:.3e})")]
    Antisymmetry { residual: f64 },

    #[error("frame is not isotropic (pairing residual {residual:.3e})")]
    Isotropy { residual: f64 },

    #[error("frame is not involutive (off-span bracket residual {residual:.3e})")]
    Involutivity { residual: f64 },

    #[error("frame rank {found} below expected {expected} at a sample point")]
    RankDeficient { found: usize, expected: usize },

    #[error("quadrature needs at least {needed} nodes, got {got}")]
    TooFewNodes { needed: usize, got: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid face index {0} (must be 0, 1 or 2)")]
    FaceIndex(usize),

    #[error("horn data incompatible: {0}")]
    HornMismatch(String),

    #[error("lattice dump malformed: {0}")]
    DumpFormat(String),

    #[error("scenario: {0}")]
    Scenario(String),

    #[error("unknown check id `{0}`")]
    UnknownCheck(String),

    #[error("wrong frame kind: {0}")]
    FrameKind(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
