use std::fmt;
use std::path::Path;

use arithdyn::Error;

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

/// A failed run: the exit code and a one-line diagnostic.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Failure::usage(format!("{}: {err}", path.display()))
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let line = self.message.lines().next().unwrap_or("");
        write!(f, "error: {line}")
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidPair(_) | Error::SingularMatrix | Error::DegenerateFamily(_) => EXIT_VALIDATION,
        Error::ResourceLimit(_) => EXIT_RESOURCE,
        Error::NearIndeterminate { .. }
        | Error::IndeterminateEvaluation { .. }
        | Error::DegenerateRestriction { .. }
        | Error::PrecisionExhausted { .. }
        | Error::EmptySet => EXIT_NUMERIC,
        Error::ZeroVector
        | Error::DimensionMismatch { .. }
        | Error::NotPrime(_)
        | Error::WrongDimension(_)
        | Error::DegenerateLine
        | Error::InvalidMap(_)
        | Error::InvalidArgument(_) => EXIT_USAGE,
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        Failure {
            code: exit_code(&err),
            message: err.to_string(),
        }
    }
}
