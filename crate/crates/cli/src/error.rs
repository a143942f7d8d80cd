use std::fmt;

/// Failure of a subcommand, mapped to the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable network file or bad argument value.
    Parse(String),
    Numeric(String),
    /// The transient block splits into several classes.
    Reducible(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Reducible(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse(m) => write!(f, "error: {}", m),
            CliError::Numeric(m) => write!(f, "numerical failure: {}", m),
            CliError::Reducible(m) => write!(f, "reducible transient block: {}", m),
            CliError::Io(m) => write!(f, "i/o error: {}", m),
        }
    }
}
