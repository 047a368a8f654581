//! The two ORTG regressors and everything around them: fitting, training,
//! input gradients, architecture search and the model file format.

mod file;
mod linear;
mod mlp;
mod predictor;
mod search;
mod train;

use thiserror::Error;

use crate::transform::TransformError;

pub use file::{load_model, model_from_json, model_to_json, save_model, SCHEMA_VERSION};
pub use linear::{fit_linear_least_squares, LinearModel};
pub use mlp::MlpModel;
pub use predictor::{creation_timestamp, parse_hidden_shape, ModelSpec, PredictorMetadata, Regressor, TrainedPredictor};
pub use search::{search_mlp_architecture, SearchEntry};
pub use train::{mlp_train, mse_gradient, mse_loss, MlpFit, TrainConfig};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("fit error: {0}")]
    Fit(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("training failed: {0}")]
    Training(String),
    #[error("model file schema version {found} is not supported (expected {expected})")]
    Version { found: String, expected: u32 },
    #[error("cannot parse model file: {0}")]
    Parse(String),
    #[error("model file I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error("evaluation failed: {0}")]
    Eval(String),
}
