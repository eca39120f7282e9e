use std::process::ExitCode;

/// Failure classes of the command-line tool, each with its own exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("extraction failure: {0}")]
    Extraction(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Extraction(_) => 4,
        })
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }
}

impl From<viscowri::Error> for CliError {
    fn from(e: viscowri::Error) -> Self {
        use viscowri::Error as E;
        match e {
            E::InvalidArgument(_) | E::DimensionMismatch { .. } | E::Format(_) => CliError::Config(e.to_string()),
            E::Domain(_) | E::Extraction { .. } => CliError::Extraction(e.to_string()),
            E::Solver(_) | E::Io(_) => CliError::Solver(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Solver(format!("i/o: {e}"))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
