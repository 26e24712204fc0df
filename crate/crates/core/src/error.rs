use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Failure categories shared by every stage.
///
/// The variants line up with how callers react: bad arguments and violated
/// preconditions are caller bugs, numerical failures come from the data.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument is outside its documented domain.
    InvalidArgument(String),
    /// A stage was called on input that does not satisfy its precondition.
    Precondition(String),
    /// A non-finite value in input data.
    NonFinite { row: usize, col: usize },
    /// Shapes of two paired inputs disagree.
    DimensionMismatch { expected: usize, found: usize, what: &'static str },
    /// A numerical routine produced a non-finite or invalid intermediate.
    Numerical(String),
    /// An iterative routine did not converge.
    NoConvergence { routine: &'static str, iterations: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::Precondition(msg) => write!(f, "precondition violated: {msg}"),
            Error::NonFinite { row, col } => {
                write!(f, "non-finite value at row {row}, column {col}")
            }
            Error::DimensionMismatch { expected, found, what } => {
                write!(f, "{what} mismatch: expected {expected}, found {found}")
            }
            Error::Numerical(msg) => write!(f, "numerical failure: {msg}"),
            Error::NoConvergence { routine, iterations } => {
                write!(f, "{routine} did not converge after {iterations} iterations")
            }
        }
    }
}

impl core::error::Error for Error {}
