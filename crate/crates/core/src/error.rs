use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("time grid is not uniform at sample {index}")]
    NonUniformGrid { index: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("state norm drifted by {drift:.3e} at t = {t:.4e} s; reduce the integration step")]
    NormViolation { t: f64, drift: f64 },

    #[error("target is infeasible: |c_e|^2 fell to {floor:.3e} at t = {t:.4e} s")]
    Infeasible { t: f64, floor: f64 },

    #[error("unknown shape `{0}`")]
    UnknownShape(String),

    #[error("stream is not sorted at index {0}")]
    UnsortedStream(usize),

    #[error("pulse schedule windows overlap: {0}")]
    OverlappingWindows(String),

    #[error("configuration invalid:\n  - {}", .0.join("\n  - "))]
    Config(Vec<String>),

    #[error("malformed record at line {line}: {reason}")]
    Format { line: usize, reason: String },

    #[error("insufficient statistics: {0}")]
    InsufficientStatistics(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
