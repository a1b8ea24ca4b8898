use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("series too short: need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("series has zero variance")]
    ZeroVariance,

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("non-positive value {value} at index {index}")]
    NonPositive { index: usize, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dates must be strictly increasing (index {0})")]
    UnorderedDates(usize),

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("duplicate name `{0}`")]
    DuplicateName(String),

    #[error("regressor `{0}` is constant over the estimation sample")]
    DegenerateRegressor(String),

    #[error("regressor matrix is rank deficient")]
    RankDeficient,

    #[error("parameter vector does not match model: {0}")]
    ParamMismatch(String),

    #[error("explosive parameterization (persistence {0:.4}); pass an explicit override to simulate it")]
    Explosive(f64),

    #[error("usable sample of {got} is below the required {needed} (10 per free parameter)")]
    InsufficientSample { needed: usize, got: usize },

    #[error("all optimizer starts diverged")]
    AllStartsDiverged,

    #[error("series has no sign variation")]
    NoSignVariation,

    #[error("csv error at line {line}: {message}")]
    Csv { line: usize, message: String },

    #[error("io error: {0}")]
    Io(String),

    #[error("no dates in common across inputs")]
    EmptyIntersection,
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
