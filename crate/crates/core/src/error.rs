use core::fmt;

/// Errors raised by the core operations.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// Two objects that must share a dimension do not.
    DimensionMismatch { expected: usize, found: usize },
    /// Entry `(row, col)` differs from `(col, row)` beyond the symmetry tolerance.
    NonSymmetric { row: usize, col: usize },
    /// The scale matrix is not strictly positive definite.
    NotPositiveDefinite { min_eigenvalue: f64 },
    /// A skewness component lies outside the open interval (-1, 1).
    DeltaOutOfRange { index: usize, value: f64 },
    /// The residual correlation `Psi - delta delta'` is not positive semidefinite.
    RepresentationInfeasible { min_eigenvalue: f64 },
    /// Degrees of freedom must be finite and positive.
    BadNu,
    /// A moment required by the operation does not exist for the generator.
    MomentsUndefined,
    /// The operation has no implementation for this generator.
    UnsupportedGenerator,
    EmptyBatch,
    ZeroVector,
    /// A linear form produced an invalid univariate skewness.
    InfeasibleProjection,
    /// An index set is empty, repeats an index, or leaves the valid range.
    BadIndex { index: Option<usize> },
    /// Two distributions do not share the same density generator.
    GeneratorMismatch,
    /// Tail limits disagree or do not settle.
    NumericallyUnstable,
    /// The order is not supported by this operation.
    UnsupportedOrder,
    /// A value was NaN or infinite where a finite number is required.
    NonFinite,
    InvalidArgument(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::NonSymmetric { row, col } => write!(
                f,
                "matrix is not symmetric: entry ({row},{col}) differs from ({col},{row})"
            ),
            Error::NotPositiveDefinite { min_eigenvalue } => write!(
                f,
                "scale matrix is not positive definite (min eigenvalue {min_eigenvalue:e})"
            ),
            Error::DeltaOutOfRange { index, value } => {
                write!(f, "delta[{index}] = {value} is outside (-1, 1)")
            }
            Error::RepresentationInfeasible { min_eigenvalue } => write!(
                f,
                "Psi - delta delta' is not positive semidefinite (min eigenvalue {min_eigenvalue:e})"
            ),
            Error::BadNu => f.write_str("degrees of freedom must be finite and positive"),
            Error::MomentsUndefined => {
                f.write_str("required moments do not exist for this generator")
            }
            Error::UnsupportedGenerator => {
                f.write_str("operation is not available for this generator")
            }
            Error::EmptyBatch => f.write_str("sample batch is empty"),
            Error::ZeroVector => f.write_str("coefficient vector is zero"),
            Error::InfeasibleProjection => {
                f.write_str("linear form has |skewness| >= scale; projection is infeasible")
            }
            Error::BadIndex { index: Some(index) } => {
                write!(f, "index {index} is repeated or out of range")
            }
            Error::BadIndex { index: None } => f.write_str("index set is empty"),
            Error::GeneratorMismatch => {
                f.write_str("distributions use different density generators")
            }
            Error::NumericallyUnstable => f.write_str("tail limits are numerically unstable"),
            Error::UnsupportedOrder => f.write_str("order is not supported by this operation"),
            Error::NonFinite => f.write_str("non-finite value in input"),
            Error::InvalidArgument(what) => write!(f, "invalid argument: {what}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
