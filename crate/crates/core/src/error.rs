use core::fmt;

/// Errors raised by model construction and the exact evaluators.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside its admissible range.
    InvalidParameter(&'static str),
    /// A measure is not a probability, has negative mass, or has the wrong length.
    InvalidMeasure(&'static str),
    /// Boltzmann-Gibbs normalisation by a zero mass.
    ZeroMass,
    /// A function expected to be strictly positive is not.
    NonPositive,
    /// The requested operation needs `d >= 2`.
    DegenerateModel,
    /// Path enumeration would exceed the size guard.
    TooLarge { requested: u128, limit: u128 },
    /// The tridiagonal eigensolver did not converge.
    ConvergenceFailure { iterations: usize },
    /// Fewer replicates than needed for a variance estimate.
    TooFewReplicates { got: usize, need: usize },
    /// Mismatched dimensions.
    Dimension { expected: usize, got: usize },
    /// A variance evaluated below the round-off tolerance.
    NegativeVariance(f64),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            Error::InvalidMeasure(what) => write!(f, "invalid measure: {what}"),
            Error::ZeroMass => f.write_str("zero mass in Boltzmann-Gibbs normalisation"),
            Error::NonPositive => f.write_str("function is not strictly positive"),
            Error::DegenerateModel => f.write_str("operation requires d >= 2"),
            Error::TooLarge { requested, limit } => {
                write!(f, "enumeration of {requested} paths exceeds limit {limit}")
            }
            Error::ConvergenceFailure { iterations } => {
                write!(f, "eigensolver failed to converge after {iterations} iterations")
            }
            Error::TooFewReplicates { got, need } => {
                write!(f, "need at least {need} replicates, got {got}")
            }
            Error::Dimension { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::NegativeVariance(v) => write!(f, "negative variance {v:e}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
