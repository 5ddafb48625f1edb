use thiserror::Error;

pub type Result<T, E = SimError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("time {t} outside [0, {tau}]")]
    Range { t: f64, tau: f64 },

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("kernel sum did not converge after {terms} terms (achieved relative bound {achieved:e})")]
    Convergence { terms: usize, achieved: f64 },

    #[error("step doubling at {steps} steps changed F(tau) by {difference:e} (tolerance {tolerance:e})")]
    NotConverged { steps: usize, difference: f64, tolerance: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid value for `{key}`: {message}")]
    Validation { key: String, message: String },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("integration error at t = {t}: {message}")]
    Integration { t: f64, message: String },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl SimError {
    pub(crate) fn validation(key: impl Into<String>, message: impl Into<String>) -> Self {
        SimError::Validation {
            key: key.into(),
            message: message.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Parse { .. }
            | SimError::Validation { .. }
            | SimError::Config(_)
            | SimError::Domain(_)
            | SimError::Range { .. } => 2,
            SimError::Convergence { .. } | SimError::NotConverged { .. } => 3,
            _ => 1,
        }
    }
}
