use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("input contains non-finite entries")]
    NonFinite,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("matrix is rank deficient: smallest singular value {sigma_min:e} <= tolerance {tol:e}")]
    RankDeficient { sigma_min: f64, tol: f64 },

    #[error("unsupported shape {rows}x{cols}: expected a fat matrix with rows < cols")]
    UnsupportedShape { rows: usize, cols: usize },

    #[error("invalid norm: {0}")]
    InvalidNorm(String),

    #[error("norm {0} has no characterized dual")]
    NoDual(String),

    #[error("unsupported proximal operator for {spec} with exponent {exponent}; supported: {supported}")]
    UnsupportedProx {
        spec: String,
        exponent: f64,
        supported: &'static str,
    },

    #[error("no closed-form subdifferential available for {0}")]
    UnsupportedSubdifferential(String),

    #[error("invalid solver configuration: {0}")]
    Config(String),

    #[error("invalid construction parameters: {0}")]
    Parameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
