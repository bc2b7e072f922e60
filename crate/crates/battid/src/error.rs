use std::path::PathBuf;

use battid_core::Error as CoreError;
use thiserror::Error;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error("{}: missing column '{column}'", path.display())]
    MissingColumn { path: PathBuf, column: String },
    #[error("{}: no data rows", path.display())]
    EmptyFile { path: PathBuf },
    #[error("{}: {source}", path.display())]
    Record {
        path: PathBuf,
        #[source]
        source: CoreError,
    },
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("every grid cell failed; first error: {first}")]
    AllSolvesFailed { first: CoreError },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => EXIT_CONFIG,
            Error::Io { .. } | Error::Parse { .. } | Error::MissingColumn { .. } | Error::EmptyFile { .. } => EXIT_DATA,
            Error::Record { source, .. } => core_exit_code(source),
            Error::Core(e) => core_exit_code(e),
            Error::AllSolvesFailed { .. } => EXIT_NUMERICAL,
        }
    }
}

fn core_exit_code(e: &CoreError) -> i32 {
    use CoreError::*;
    match e {
        InvalidConfig(_) | InvalidMeta(_) | InvalidParams(_) | InvalidKnots(_) | BadOrder | DomainError { .. } => {
            EXIT_CONFIG
        }
        InvalidRecord(_)
        | MissingSoc
        | SocOutOfRange { .. }
        | NonMonotonicTime { .. }
        | NonUniformSampling { .. }
        | SocRangeExceeded { .. }
        | NonFiniteOcv { .. }
        | EmptyInput
        | OutOfSupport { .. }
        | UnsortedInput
        | TooSmall
        | DegenerateColumn { .. }
        | DimensionMismatch(_)
        | LengthMismatch { .. }
        | ZeroVariance => EXIT_DATA,
        PoleEvaluation
        | DegenerateBank
        | NumericalFailure
        | SvdFailure
        | DegenerateP { .. }
        | SingularSystem
        | ComplexTimeConstants { .. } => EXIT_NUMERICAL,
    }
}
