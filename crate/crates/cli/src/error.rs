use std::fmt;

/// Failure of one invocation, split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or configuration; exit code 2.
    Usage(String),
    /// Inputs were well-formed but the operation failed; exit code 1.
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Domain(msg) => write!(f, "error: {msg}"),
        }
    }
}

impl From<sdlane::Error> for CliError {
    fn from(e: sdlane::Error) -> Self {
        CliError::Domain(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn usage(e: impl fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}
