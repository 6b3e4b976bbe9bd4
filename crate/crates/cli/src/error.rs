use povm_forge_core::Error as CoreError;

/// Failure of a command, carrying its process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// A checked property did not hold; `record` is the offending output, if any.
    #[error("invariant violated: {message}")]
    Invariant { message: String, record: Option<String> },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("input error: {0}")]
    Input(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invariant { .. } => 2,
            CliError::Solver(_) => 3,
            CliError::Input(_) => 4,
        }
    }

    pub fn invariant(message: impl Into<String>) -> Self {
        CliError::Invariant { message: message.into(), record: None }
    }

    pub fn input(message: impl Into<String>) -> Self {
        CliError::Input(message.into())
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Solver { .. } | CoreError::NumericalFailure(_) | CoreError::DegenerateWitness => {
                CliError::Solver(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
