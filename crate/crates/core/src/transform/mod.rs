//! Preprocessing shared by both predictors: min-max normalization of
//! features and target, followed by a PCA projection of the features.

mod minmax;
mod pca;
mod pipeline;

use thiserror::Error;

pub use minmax::MinMaxNormalizer;
pub use pca::PcaModel;
pub use pipeline::TransformPipeline;

/// Component count used when nothing else is requested.
pub const DEFAULT_COMPONENTS: usize = 18;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error("fit error: {0}")]
    Fit(String),
    #[error("invalid argument: {0}")]
    Argument(String),
}
