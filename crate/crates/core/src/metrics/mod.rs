//! Evaluation metrics: Fréchet emotion distance, emotion reconstruction
//! error and smoothness score.

mod frechet;
mod oracle;
mod search;

pub use frechet::{fed, fit_gaussian, frechet_distance, FeatureStats};
pub use oracle::{class_index, softmax, ClassifierOracle, SyntheticOracle, CLASSES, CLASS_COUNT};
pub use search::{
    default_directions, ere, smoothness, ConditionSpace, DEFAULT_ERE_BUDGET, DEFAULT_ERE_RUNS,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("feature dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("eigendecomposition failed even with maximal jitter")]
    NumericalFailure,
    #[error("non-finite feature value")]
    NonFinite,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
