use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("invalid exponent p = {0}; must be positive")]
    InvalidExponent(f64),
    #[error("field list is empty")]
    EmptyFieldList,
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid ladder: {0}")]
    InvalidLadder(String),
    #[error("cone window {window} exceeds half the period {half_period}")]
    ConeTooWide { window: f64, half_period: f64 },
    #[error("degenerate open set = whole torus")]
    FullMask,
    #[error("degenerate profile: Calderon integral {0:e} too small to normalize")]
    DegenerateProfile(f64),
    #[error("degenerate split: alpha = {alpha}, beta = {beta}")]
    DegenerateSplit { alpha: f64, beta: f64 },
    #[error("set A must be proper")]
    ImproperSetA,
    #[error("level sets are not nested at level {0}")]
    NotNested(usize),
    #[error("regions do not partition the tent union: {0}")]
    PartitionViolation(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("invalid field file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
