use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("parameter point outside [-1,1]^d")]
    OutsideDomain,
    #[error("point is not a node of the sparse grid")]
    NotAGridPoint,
    #[error("singular matrix (zero pivot in column {0})")]
    Singular(usize),
    #[error("timestep underflow at t = {t:e} (dt = {dt:e})")]
    StepUnderflow { t: f64, dt: f64 },
    #[error("time {t} outside [{start}, {end}]")]
    TimeOutOfRange { t: f64, start: f64, end: f64 },
    #[error("missing value for collocation point {0}")]
    MissingValue(String),
    #[error("integration failed at collocation point {point}: {source}")]
    PointFailure {
        point: String,
        #[source]
        source: alloc::boxed::Box<Error>,
    },
    #[error("eigensolver: {0}")]
    Eigen(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
