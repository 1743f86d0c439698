use std::fmt;

use kramers_core::Error;

/// Process exit codes.
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_CHECK: u8 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: msg.into(),
        }
    }

    pub fn check(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_CHECK,
            message: msg.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidDimension(_)
            | Error::InvalidShape(_)
            | Error::InvalidInput(_)
            | Error::OutOfSupport { .. }
            | Error::InvalidReference(_)
            | Error::Parse { .. } => EXIT_CONFIG,
            Error::NumericalFailure(_)
            | Error::PoleProximity { .. }
            | Error::CalibrationFailure(_)
            | Error::FitFailure(_)
            | Error::DegenerateEnsemble(_) => EXIT_NUMERICAL,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::config(format!("I/O error: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
