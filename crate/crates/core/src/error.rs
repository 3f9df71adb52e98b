use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("basis mismatch between functionals")]
    BasisMismatch,
    #[error("divergent integral: s = {s} must exceed n/2 = {half_n}")]
    DivergentIntegral { s: f64, half_n: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("need samples {needed:?} around index {index}, path has {len}")]
    InsufficientSamples {
        index: usize,
        needed: (usize, usize),
        len: usize,
    },
    #[error("nonlinearity must vanish at zero (constant monomial found)")]
    ConstantMonomial,
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("picard iteration did not contract at t = {t} (residual {residual:e})")]
    PicardStall { t: f64, residual: f64 },
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Numerical failures (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonFinite(_) | Error::PicardStall { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
