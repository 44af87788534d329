use std::fmt;

/// A command failure, split by exit code: bad input or configuration (2)
/// versus everything else (1).
#[derive(Debug)]
pub enum CliError {
    Invalid(String),
    Internal(String),
}

impl CliError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        CliError::Invalid(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        CliError::Internal(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(m) | CliError::Internal(m) => f.write_str(m),
        }
    }
}

/// Tags errors from reading inputs as validation failures.
pub trait Input<T> {
    fn input(self) -> Result<T, CliError>;
}

impl<T, E: fmt::Display> Input<T> for Result<T, E> {
    fn input(self) -> Result<T, CliError> {
        self.map_err(|e| CliError::Invalid(e.to_string()))
    }
}

/// Tags errors from running a stage or writing its outputs as internal.
pub trait Internal<T> {
    fn internal(self) -> Result<T, CliError>;
}

impl<T, E: fmt::Display> Internal<T> for Result<T, E> {
    fn internal(self) -> Result<T, CliError> {
        self.map_err(|e| CliError::Internal(e.to_string()))
    }
}
