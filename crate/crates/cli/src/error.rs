use std::fmt;

use physlayout::Error;

/// Failures mapped onto the documented process exit codes.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Core(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Core(e) => match e {
                Error::Config(_)
                | Error::GraphSizeMismatch(_)
                | Error::Checkpoint(_)
                | Error::ShapeMismatch { .. } => 2,
                Error::Io(_) | Error::Json(_) | Error::InvalidScene(_) | Error::InvalidGraph(_) | Error::InvalidMesh(_) | Error::UnknownLabel(_) => 3,
                Error::DivergedTraining { .. } => 4,
                Error::NonFiniteState { .. } | Error::NonFiniteGradient { .. } => 5,
                _ => 1,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
