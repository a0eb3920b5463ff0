use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported exponent q = {0} (need q >= 2 or q = inf)")]
    UnsupportedExponent(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular step: r(z) has a pole within {distance:.3e} of z = {z}")]
    SingularStep { z: String, distance: f64 },

    #[error("fit refused: {0}")]
    FitRefused(String),

    #[error("invalid configuration field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("mesh error: coarse size {coarse} does not divide fine size {fine}")]
    Mesh { coarse: usize, fine: usize },

    #[error("model mismatch: {0}")]
    ModelMismatch(String),

    #[error("covariance factorization failed: pivot {pivot:.3e} below clamp tolerance")]
    Factorization { pivot: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
