use thiserror::Error;

/// Errors raised by the estimation, attack and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("system is not observable: rank {rank} < state dimension {n}")]
    NotObservable { rank: usize, n: usize },

    #[error("degenerate horizon SVD: sigma_min {sigma_min:e} below tolerance (sigma_max {sigma_max:e})")]
    DegenerateSvd { sigma_min: f64, sigma_max: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("window ending at {end} with horizon {horizon} exceeds trajectory of length {len}")]
    WindowOutOfRange { end: usize, horizon: usize, len: usize },

    #[error("effective observation matrix is rank deficient: rank {rank} < {n}")]
    RankDeficient { rank: usize, n: usize },

    #[error("linear program solver failure: {0}")]
    SolverFailure(String),

    #[error("Riccati iteration did not converge after {iterations} iterations")]
    RiccatiDivergence { iterations: usize },

    #[error("attack support of size {size} must be smaller than the {rows} stacked rows")]
    SupportTooLarge { size: usize, rows: usize },

    #[error("attack support is empty")]
    EmptySupport,

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("estimated indicator has no positive entries")]
    EmptyEstimate,

    #[error("probability mass drifted from one by {drift:e}")]
    NumericalInstability { drift: f64 },

    #[error("support budget must be positive")]
    BudgetZero,

    #[error("recovery bound condition violated: {0}")]
    ConditionViolated(String),

    #[error("random system generation failed after {attempts} attempts")]
    GenerationFailed { attempts: usize },

    #[error("{0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl Error {
    /// True for failures of the numerical machinery, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateSvd { .. }
                | Error::RankDeficient { .. }
                | Error::SolverFailure(_)
                | Error::RiccatiDivergence { .. }
                | Error::NumericalInstability { .. }
                | Error::ConditionViolated(_)
                | Error::GenerationFailed { .. }
                | Error::NotObservable { .. }
        )
    }
}
