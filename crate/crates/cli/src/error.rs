use std::fmt;
use std::process::ExitCode;

use ria_core::Error;

pub const EXIT_INPUT: u8 = 1;
pub const EXIT_NOT_ERGODIC: u8 = 2;
pub const EXIT_PRECONDITION: u8 = 3;
pub const EXIT_VERIFY_FAILED: u8 = 4;

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Core(Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Core(Error::NotErgodic { .. }) => EXIT_NOT_ERGODIC,
            CliError::Core(Error::Precondition(_)) => EXIT_PRECONDITION,
            CliError::Core(_) => EXIT_INPUT,
        }
    }

    pub fn exit(&self) -> ExitCode {
        ExitCode::from(self.exit_code())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(msg) => write!(f, "{msg}"),
            CliError::Core(Error::Capacity(msg)) => write!(f, "capacity: {msg}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<ria_core::numerics::NumericsError> for CliError {
    fn from(e: ria_core::numerics::NumericsError) -> Self {
        CliError::Core(e.into())
    }
}

pub type CliResult<T> = Result<T, CliError>;
