use thiserror::Error;

/// Errors raised by the identification core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid record: {0}")]
    InvalidRecord(&'static str),
    #[error("invalid battery metadata: {0}")]
    InvalidMeta(&'static str),
    #[error("record has no SOC column")]
    MissingSoc,
    #[error("SOC left [-0.01, 1.01] at sample {index} (value {value})")]
    SocOutOfRange { index: usize, value: f64 },
    #[error("timestamps not strictly increasing at row {index}")]
    NonMonotonicTime { index: usize },
    #[error("sampling interval varies beyond tolerance at row {index}")]
    NonUniformSampling { index: usize },

    #[error("invalid ECM parameters: {0}")]
    InvalidParams(&'static str),
    #[error("SOC {value} at sample {index} is outside the OCV range [{lo}, {hi}]")]
    SocRangeExceeded { index: usize, value: f64, lo: f64, hi: f64 },
    #[error("OCV evaluated to a non-finite value at sample {index}")]
    NonFiniteOcv { index: usize },
    #[error("argument {value} outside the valid domain")]
    DomainError { value: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),

    #[error("transfer function evaluated at its pole s = -nu")]
    PoleEvaluation,
    #[error("Laguerre bank is degenerate for this nu (normalizing coefficient is zero)")]
    DegenerateBank,
    #[error("empty input signal")]
    EmptyInput,

    #[error("knot vector invalid: {0}")]
    InvalidKnots(&'static str),
    #[error("SOC {value} at sample {index} outside the spline support")]
    OutOfSupport { index: usize, value: f64 },
    #[error("derivative order must be in 1..=3")]
    BadOrder,
    #[error("SOC sequence is not sorted")]
    UnsortedInput,
    #[error("finite-difference matrix needs at least two columns")]
    TooSmall,

    #[error("regression column {column} is identically zero on the active rows")]
    DegenerateColumn { column: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(&'static str),

    #[error("solver hit a non-finite value")]
    NumericalFailure,
    #[error("singular value decomposition failed")]
    SvdFailure,
    #[error("rank-one structure of P not present (sigma1 / sigma2 = {ratio})")]
    DegenerateP { ratio: f64 },

    #[error("linear system for coefficient recovery is singular")]
    SingularSystem,
    #[error("time constants are complex (a1^2 - 4 a2 = {discriminant})")]
    ComplexTimeConstants { discriminant: f64 },

    #[error("sequences have different lengths ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("reference signal has zero variance")]
    ZeroVariance,
}

pub type Result<T> = core::result::Result<T, Error>;
