use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("particle ceiling of {ceiling} exceeded at t = {t_reached:.4}")]
    ResourceLimit { ceiling: u64, t_reached: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid leaf identifier {0}")]
    InvalidLeaf(usize),

    #[error("missing data: {0}")]
    MissingData(String),

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("all {subtrees} subtrees below the root were pruned, no leaf survives")]
    AllPruned { subtrees: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("planning error: {0}")]
    Planning(String),

    #[error("store error: {0}")]
    Store(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
