//! Versioned JSON model file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::linear::LinearModel;
use super::mlp::MlpModel;
use super::predictor::{PredictorMetadata, Regressor, TrainedPredictor};
use super::train::TrainConfig;
use super::ModelError;
use crate::transform::{MinMaxNormalizer, PcaModel, TransformPipeline};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    schema_version: u32,
    model_kind: String,
    pipeline: PipelineDto,
    parameters: serde_json::Value,
    metadata: MetadataDto,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PipelineDto {
    feature_min: Vec<f64>,
    feature_max: Vec<f64>,
    target_min: f64,
    target_max: f64,
    pca_mean: Vec<f64>,
    pca_scale: Vec<f64>,
    pca_components: Vec<Vec<f64>>,
    pca_explained_variance: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinearDto {
    weights: Vec<f64>,
    bias: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MlpDto {
    layer_sizes: Vec<usize>,
    /// Per layer, `outputs` rows of `inputs` weights.
    weights: Vec<Vec<Vec<f64>>>,
    biases: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetadataDto {
    seed: u64,
    restarts: usize,
    final_loss: f64,
    dataset_fingerprint: String,
    created_at: String,
    learning_rate: f64,
    max_epochs: usize,
    plateau_tolerance: f64,
    plateau_patience: usize,
}

fn parse_err(e: impl std::fmt::Display) -> ModelError {
    ModelError::Parse(e.to_string())
}

/// Render a predictor as the model file's JSON text.
pub fn model_to_json(p: &TrainedPredictor) -> String {
    let pl = p.pipeline();
    let pca = pl.pca();
    let parameters = match p.regressor() {
        Regressor::Linear(m) => serde_json::to_value(LinearDto {
            weights: m.weights().to_vec(),
            bias: m.bias(),
        }),
        Regressor::Mlp(m) => {
            let layers = m.layer_sizes().len() - 1;
            serde_json::to_value(MlpDto {
                layer_sizes: m.layer_sizes().to_vec(),
                weights: (0..layers).map(|l| m.layer_weights(l)).collect(),
                biases: (0..layers).map(|l| m.layer_biases(l)).collect(),
            })
        }
    }
    .expect("model parameters serialize");
    let md = p.metadata();
    let file = ModelFile {
        schema_version: SCHEMA_VERSION,
        model_kind: p.regressor().kind().to_string(),
        pipeline: PipelineDto {
            feature_min: pl.feature_normalizer().min().to_vec(),
            feature_max: pl.feature_normalizer().max().to_vec(),
            target_min: pl.target_normalizer().min()[0],
            target_max: pl.target_normalizer().max()[0],
            pca_mean: pca.mean().to_vec(),
            pca_scale: pca.scale().to_vec(),
            pca_components: pca.components().to_vec(),
            pca_explained_variance: pca.explained_variance().to_vec(),
        },
        parameters,
        metadata: MetadataDto {
            seed: md.seed,
            restarts: md.restarts,
            final_loss: md.final_loss,
            dataset_fingerprint: md.dataset_fingerprint.clone(),
            created_at: md.created_at.clone(),
            learning_rate: md.train_config.learning_rate,
            max_epochs: md.train_config.max_epochs,
            plateau_tolerance: md.train_config.plateau_tolerance,
            plateau_patience: md.train_config.plateau_patience,
        },
    };
    let mut text = serde_json::to_string_pretty(&file).expect("model file serializes");
    text.push('\n');
    text
}

/// Parse model file text. The schema version is checked before anything else.
pub fn model_from_json(text: &str) -> Result<TrainedPredictor, ModelError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(parse_err)?;
    let version = value
        .get("schema_version")
        .ok_or_else(|| ModelError::Parse("missing schema_version".into()))?;
    if version.as_u64() != Some(u64::from(SCHEMA_VERSION)) {
        let found = match version {
            serde_json::Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        return Err(ModelError::Version {
            found,
            expected: SCHEMA_VERSION,
        });
    }
    let file: ModelFile = serde_json::from_value(value).map_err(parse_err)?;

    let pl = file.pipeline;
    let pipeline = TransformPipeline::from_parts(
        MinMaxNormalizer::from_bounds(pl.feature_min, pl.feature_max).map_err(parse_err)?,
        MinMaxNormalizer::from_bounds(vec![pl.target_min], vec![pl.target_max]).map_err(parse_err)?,
        PcaModel::from_parts(pl.pca_mean, pl.pca_scale, pl.pca_components, pl.pca_explained_variance)
            .map_err(parse_err)?,
    )
    .map_err(parse_err)?;

    let regressor = match file.model_kind.as_str() {
        "linear" => {
            let dto: LinearDto = serde_json::from_value(file.parameters).map_err(parse_err)?;
            Regressor::Linear(LinearModel::new(dto.weights, dto.bias).map_err(parse_err)?)
        }
        "mlp" => {
            let dto: MlpDto = serde_json::from_value(file.parameters).map_err(parse_err)?;
            Regressor::Mlp(MlpModel::from_layers(dto.layer_sizes, &dto.weights, &dto.biases).map_err(parse_err)?)
        }
        other => return Err(ModelError::Parse(format!("unknown model_kind {other:?}"))),
    };

    let md = file.metadata;
    let metadata = PredictorMetadata {
        seed: md.seed,
        restarts: md.restarts,
        final_loss: md.final_loss,
        dataset_fingerprint: md.dataset_fingerprint,
        created_at: md.created_at,
        train_config: TrainConfig {
            seed: md.seed,
            learning_rate: md.learning_rate,
            max_epochs: md.max_epochs,
            plateau_tolerance: md.plateau_tolerance,
            plateau_patience: md.plateau_patience,
            restarts: md.restarts,
        },
    };
    TrainedPredictor::new(pipeline, regressor, metadata).map_err(parse_err)
}

pub fn save_model(p: &TrainedPredictor, path: &Path) -> Result<(), ModelError> {
    crate::io::write_atomic(path, model_to_json(p).as_bytes())?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<TrainedPredictor, ModelError> {
    model_from_json(&std::fs::read_to_string(path)?)
}
