use thiserror::Error;

use crate::regression::SoftPredicate;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid predicate: {0}")]
    InvalidPredicate(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("dataset has no usable rows")]
    EmptyDataset,

    #[error("no numeric dimensions")]
    NoNumericDimensions,

    #[error("no projection columns and PCA fallback disabled")]
    MissingProjection,

    #[error("degenerate projection: {0}")]
    DegenerateProjection(String),

    #[error("empty selection: {0}")]
    EmptySelection(String),

    /// The joint loss became non-finite. Carries the last iterate whose loss
    /// was finite.
    #[error("optimization diverged at iteration {iteration} (last finite loss {last_loss})")]
    Divergence {
        iteration: usize,
        last_loss: f64,
        last_finite: Vec<SoftPredicate>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
