use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or input data (exit 2).
    Usage(String),
    /// Files that cannot be read or written (exit 3).
    Io(String),
    /// `validate` ran and at least one check failed (exit 1).
    ChecksFailed,
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::ChecksFailed => 1,
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    pub fn io(path: &std::path::Path, err: impl fmt::Display) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Io(msg) => f.write_str(msg),
            CliError::ChecksFailed => f.write_str("validation checks failed"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<hdboot::Error> for CliError {
    fn from(err: hdboot::Error) -> Self {
        use hdboot::Error;
        match &err {
            Error::Io(_) | Error::Sink { .. } => CliError::Io(err.to_string()),
            Error::Csv(e) if e.is_io_error() => CliError::Io(err.to_string()),
            Error::Replication { source, .. } if matches!(**source, Error::Io(_)) => CliError::Io(err.to_string()),
            _ => CliError::Usage(err.to_string()),
        }
    }
}
