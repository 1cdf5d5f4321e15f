use thiserror::Error;

/// Errors produced by the toolkit. `Physics` marks aborts where the flow
/// left the regime the solver is valid in (lost diffeomorphism, NaN, ...);
/// those map to a distinct process exit code in the CLI.
#[derive(Debug, Error)]
pub enum MrtError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("physics abort at t={t}: {reason}")]
    Physics { t: f64, reason: String },

    #[error("verification failure: {0}")]
    Verification(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(String),
}

impl MrtError {
    pub fn config(msg: impl Into<String>) -> Self {
        MrtError::Config(msg.into())
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        MrtError::InvalidInput(msg.into())
    }

    pub fn solver(msg: impl Into<String>) -> Self {
        MrtError::Solver(msg.into())
    }

    pub fn physics(t: f64, reason: impl Into<String>) -> Self {
        MrtError::Physics {
            t,
            reason: reason.into(),
        }
    }

    /// CLI exit code for this error class (0 ok, 2 config, 3 physics, 4 verification).
    pub fn exit_code(&self) -> i32 {
        match self {
            MrtError::Config(_) | MrtError::InvalidInput(_) => 2,
            MrtError::Physics { .. } => 3,
            MrtError::Verification(_) => 4,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, MrtError>;
