use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("ground-state optimization did not converge: {0}")]
    Convergence(String),
    #[error("non-physical result: {0}")]
    NonPhysical(String),
    #[error("campaign produced no valid runs (artifact {0})")]
    NoValidRuns(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            Self::Io(_) => 1,
            Self::Validation(_) => 2,
            Self::Convergence(_) => 3,
            Self::NonPhysical(_) => 4,
            Self::NoValidRuns(_) => 5,
        })
    }
}

impl From<qlrlab::Error> for CliError {
    fn from(e: qlrlab::Error) -> Self {
        use qlrlab::Error as E;
        match e {
            E::Io(io) => Self::Io(io),
            E::NotConverged { .. } => Self::Convergence(e.to_string()),
            E::Singular(_) | E::NotHermitian(_) | E::EmptySpectrum => Self::NonPhysical(e.to_string()),
            other => Self::Validation(other.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::Validation(format!("malformed artifact: {e}"))
    }
}
