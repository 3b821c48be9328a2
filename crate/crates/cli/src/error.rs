use std::fmt;
use std::io;

/// Failures surfaced by the command-line tool, each with an exit status.
#[derive(Debug)]
pub enum CliError {
    Core(backhaul_core::Error),
    Config(String),
    Io(io::Error),
    SelftestFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(backhaul_core::Error::Numeric { .. }) => 2,
            CliError::Core(_) | CliError::Config(_) | CliError::Io(_) => 1,
            CliError::SelftestFailed(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Config(msg) => write!(f, "configuration: {msg}"),
            CliError::Io(e) => write!(f, "i/o: {e}"),
            CliError::SelftestFailed(n) => write!(f, "{n} self-test check(s) failed"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<backhaul_core::Error> for CliError {
    fn from(e: backhaul_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
