use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension {0}: must be at least 1")]
    InvalidDimension(usize),

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{variable} = {value} is outside the support of the density")]
    OutOfSupport { variable: &'static str, value: f64 },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("wavenumber {k} is within the pole guard of bond {bond} (|sin(kL)| = {sin_kl:e})")]
    PoleProximity { bond: usize, k: f64, sin_kl: f64 },

    #[error("calibration failed: {0}")]
    CalibrationFailure(String),

    #[error("gamma fit failed: {0}")]
    FitFailure(String),

    #[error("degenerate ensemble: {0}")]
    DegenerateEnsemble(String),

    #[error("invalid reference density: {0}")]
    InvalidReference(String),

    #[error("parse error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse { line: Option<usize>, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::NumericalFailure(msg.into())
    }
}
