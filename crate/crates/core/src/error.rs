use thiserror::Error;

/// Every failure the toolkit can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("generator does not support the requested order: {0}")]
    UnsupportedOrder(&'static str),
    #[error("tabulated generator queried at t = {t} outside its coverage [{lo}, {hi}]")]
    OutOfTable { t: f64, lo: f64, hi: f64 },
    #[error("alias sum tail estimate {tail:e} exceeds tolerance {tol:e}")]
    NonConvergentTail { tail: f64, tol: f64 },
    #[error("lower frame bound {lower:e} is below the floor {floor:e}")]
    DegenerateFrame { lower: f64, floor: f64 },
    #[error("spectral profile contains non-finite entries")]
    UnboundedDerivativeProfile,
    #[error("period K = {k} must exceed the generator support {support}")]
    PeriodTooSmall { k: usize, support: f64 },
    #[error("Gram matrix is singular")]
    SingularGram,
    #[error("bad partition: {0}")]
    BadPartition(String),
    #[error("signals live in different spaces")]
    SpaceMismatch,
    #[error("encoder produced no spikes: {0}")]
    NoSpikes(String),
    #[error("spike budget of {0} exceeded")]
    SpikeBudgetExceeded(usize),
    #[error("generator is not supported by this operation: {0}")]
    UnsupportedGenerator(&'static str),
    #[error("spike train is empty or too short")]
    EmptyTrain,
    #[error("spike train has max gap {max_gap} > T = {t}")]
    NotDenseEnough { max_gap: f64, t: f64 },
    #[error("normal matrix is rank deficient (pivot {pivot:e} at column {column})")]
    RankDeficient { pivot: f64, column: usize },
    #[error("iteration is not contractive (observed ratio {ratio})")]
    NotContractive { ratio: f64 },
    #[error("iteration did not converge in {iterations} steps")]
    NonConvergent { iterations: usize },
    #[error("relaxation parameter gamma = {0} must lie in [0, 1)")]
    InvalidGamma(f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
