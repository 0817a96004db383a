use std::fmt;

/// Failure of a command, carrying its exit status.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable, incomplete or invalid configuration (exit 2).
    Config(String),
    /// A solver, fit or simulation failed, or an artifact could not be written (exit 3).
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<dcg_core::Error> for CliError {
    fn from(e: dcg_core::Error) -> Self {
        match e {
            dcg_core::Error::InvalidArgument(m) => CliError::Config(m),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Numerical(format!("i/o: {e}"))
    }
}
