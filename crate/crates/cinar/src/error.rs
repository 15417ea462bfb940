use crate::io::GridError;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const VALIDATION: i32 = 2;
    pub const NUMERICAL: i32 = 3;
    pub const NOT_CONVERGED: i32 = 4;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Numerical(_) => exit::NUMERICAL,
            _ => exit::VALIDATION,
        }
    }
}

impl From<cinar_core::Error> for CliError {
    fn from(e: cinar_core::Error) -> Self {
        use cinar_core::Error as E;
        let msg = e.to_string();
        match e {
            E::DegenerateGrid
            | E::AcfNotConverged { .. }
            | E::YwSingular
            | E::ClsSingular
            | E::ZeroProbability { .. }
            | E::NotAtMaximum { .. } => Self::Numerical(msg),
            _ => Self::Validation(msg),
        }
    }
}
