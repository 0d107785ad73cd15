use std::fmt;

/// Failure of a CLI run, classified by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, bad config or missing inputs (exit 1).
    Usage(String),
    Core(scarseg::Error),
}

impl From<scarseg::Error> for CliError {
    fn from(e: scarseg::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) if e.is_numeric() => 3,
            CliError::Core(scarseg::Error::Spec(_) | scarseg::Error::InvalidArgument(_)) => 1,
            CliError::Core(_) => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            1 => "usage",
            3 => "numeric",
            _ => "data",
        }
    }

    /// `error code=<n> kind=<kind> message="<escaped>"` on one line.
    pub fn stderr_line(&self) -> String {
        format!("error code={} kind={} message={:?}", self.exit_code(), self.kind(), self.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = Result<T, CliError>;
