use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not unitary (residual {residual:.3e})")]
    NonUnitary { residual: f64 },

    #[error("matrix is not symplectic (residual {residual:.3e})")]
    NonSymplectic { residual: f64 },

    #[error("invalid covariance matrix: {0}")]
    InvalidCovariance(String),

    #[error("loss fraction {0} outside [0, 1]")]
    InvalidLoss(f64),

    #[error("variance must be positive, got {0}")]
    NonPositiveVariance(f64),

    #[error("invalid squeezing profile: {0}")]
    InvalidProfile(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("unknown builtin graph '{0}'")]
    UnknownGraph(String),

    #[error("graph '{name}' cannot be built with {n} nodes")]
    IncompatibleSize { name: String, n: usize },

    #[error("invalid optimizer configuration: {0}")]
    InvalidConfig(String),

    #[error("index {index} out of range for {len} modes")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("local oscillator is not normalized (norm^2 = {0})")]
    UnnormalizedLo(f64),

    #[error("invalid access party {party:?}: {reason}")]
    InvalidParty { party: Vec<usize>, reason: String },

    #[error("reconstruction system for party {party:?} is singular (smallest singular value {smallest_singular:.3e}, constraint residual {residual:.3e})")]
    SingularSystem {
        party: Vec<usize>,
        smallest_singular: f64,
        residual: f64,
    },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
