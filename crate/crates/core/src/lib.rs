//! Predicate induction for brushed patterns in 2D projections of
//! high-dimensional tables.
//!
//! A user brushes points in a scatterplot of precomputed projection
//! coordinates; this crate turns the gesture into binary labels and finds a
//! conjunction of per-dimension intervals over the original columns that
//! reproduces the selection. Two induction engines are provided:
//!
//! - [`regression`]: a differentiable bump-function relaxation of an
//!   axis-aligned box, fitted by first-order descent with L1 sparsity and an
//!   optional smoothness coupling across a sequence of brushes.
//! - [`rpi`]: a greedy bottom-up beam search over bin-aligned clauses scored
//!   by F1.

pub mod data;
pub mod error;
pub mod ingest;
pub mod metrics;
pub mod query;
pub mod regression;
pub mod rpi;
pub mod selection;
pub mod synth;

pub use data::{
    categorize, clamp_to_extent, evaluate_predicate, Clause, ClauseWire, Dataset, Extent,
    LabeledSelection, PointCategory, Predicate, PredicateWire,
};
pub use error::{Error, Result};
pub use ingest::{load_csv, load_csv_path, normalize, pca_2d, IngestConfig, LoadReport, NormalizedView};
pub use metrics::{confusion, sequence_stats, Confusion, SequenceStats};
pub use query::{run_query, Algorithm, BrushResult, Gesture, QueryConfig, QueryResult};
pub use regression::{fit, RegressionConfig, RegressionResult, SoftPredicate};
pub use rpi::{rpi_fit, RpiConfig, ScoredPredicate};
pub use selection::{BrushSequence, ContrastBackground, DragPath, Region};
