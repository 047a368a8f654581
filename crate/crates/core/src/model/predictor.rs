use std::fmt;
use std::str::FromStr;

use super::linear::{fit_linear_least_squares, LinearModel};
use super::mlp::MlpModel;
use super::train::{mlp_train, TrainConfig};
use super::ModelError;
use crate::features::{FeatureVector, FEATURE_COUNT};
use crate::ingest::Dataset;
use crate::transform::TransformPipeline;

/// Which regressor to fit on top of the pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ModelSpec {
    Linear,
    /// Hidden layer widths, e.g. `[3]` for the 18→3→1 network.
    Mlp { hidden: Vec<usize> },
}

impl ModelSpec {
    pub fn mlp(hidden: &[usize]) -> Self {
        ModelSpec::Mlp { hidden: hidden.to_vec() }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ModelSpec::Linear => "linear",
            ModelSpec::Mlp { .. } => "mlp",
        }
    }

    pub fn hidden(&self) -> &[usize] {
        match self {
            ModelSpec::Linear => &[],
            ModelSpec::Mlp { hidden } => hidden,
        }
    }

    /// Full layer sizes for `k` pipeline components.
    pub fn layer_sizes(&self, k: usize) -> Vec<usize> {
        let mut sizes = vec![k];
        sizes.extend(self.hidden());
        sizes.push(1);
        sizes
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::Linear => f.write_str("linear"),
            ModelSpec::Mlp { hidden } => {
                let parts: Vec<String> = hidden.iter().map(usize::to_string).collect();
                write!(f, "mlp[{}]", parts.join(","))
            }
        }
    }
}

/// Parse a comma-separated hidden shape such as `3` or `4,2`.
pub fn parse_hidden_shape(s: &str) -> Result<Vec<usize>, ModelError> {
    let shape: Result<Vec<usize>, _> = s.split(',').map(|p| p.trim().parse::<usize>()).collect();
    match shape {
        Ok(v) if !v.is_empty() && v.iter().all(|&w| w > 0) => Ok(v),
        _ => Err(ModelError::Argument(format!("invalid hidden shape {s:?}; expected widths like 3 or 4,2"))),
    }
}

impl FromStr for ModelSpec {
    type Err = ModelError;

    /// Accepts `linear`, `mlp` (hidden `[3]`) or `mlp:4,2`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(ModelSpec::Linear),
            "mlp" => Ok(ModelSpec::mlp(&[3])),
            _ => match s.strip_prefix("mlp:") {
                Some(shape) => Ok(ModelSpec::Mlp { hidden: parse_hidden_shape(shape)? }),
                None => Err(ModelError::Argument(format!("unknown model kind {s:?}; expected linear or mlp"))),
            },
        }
    }
}

/// A fitted regressor over pipeline coordinates, predicting normalized ORTG.
#[derive(Debug, Clone, PartialEq)]
pub enum Regressor {
    Linear(LinearModel),
    Mlp(MlpModel),
}

impl Regressor {
    /// Fit on pipeline coordinates and normalized targets; returns the model
    /// and its training mean squared error.
    pub fn fit<S: AsRef<[f64]>>(
        spec: &ModelSpec,
        inputs: &[S],
        targets: &[f64],
        cfg: &TrainConfig,
    ) -> Result<(Self, f64), ModelError> {
        match spec {
            ModelSpec::Linear => {
                let model = fit_linear_least_squares(inputs, targets)?;
                let mse = inputs
                    .iter()
                    .zip(targets)
                    .map(|(x, t)| (model.predict(x.as_ref()) - t).powi(2))
                    .sum::<f64>()
                    / inputs.len() as f64;
                Ok((Regressor::Linear(model), mse))
            }
            ModelSpec::Mlp { hidden } => {
                let k = inputs.first().map_or(0, |x| x.as_ref().len());
                let mut sizes = vec![k];
                sizes.extend(hidden);
                sizes.push(1);
                let fit = mlp_train(inputs, targets, &sizes, cfg)?;
                Ok((Regressor::Mlp(fit.model), fit.final_loss))
            }
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Regressor::Linear(_) => "linear",
            Regressor::Mlp(_) => "mlp",
        }
    }

    pub fn spec(&self) -> ModelSpec {
        match self {
            Regressor::Linear(_) => ModelSpec::Linear,
            Regressor::Mlp(m) => ModelSpec::mlp(m.hidden_sizes()),
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Regressor::Linear(m) => m.input_dim(),
            Regressor::Mlp(m) => m.input_dim(),
        }
    }

    pub fn parameter_count(&self) -> usize {
        match self {
            Regressor::Linear(m) => m.input_dim() + 1,
            Regressor::Mlp(m) => m.parameter_count(),
        }
    }

    pub fn predict(&self, z: &[f64]) -> f64 {
        match self {
            Regressor::Linear(m) => m.predict(z),
            Regressor::Mlp(m) => m.forward_unchecked(z),
        }
    }

    pub fn input_gradient(&self, z: &[f64]) -> Vec<f64> {
        match self {
            Regressor::Linear(m) => m.weights().to_vec(),
            Regressor::Mlp(m) => m.input_gradient(z),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictorMetadata {
    pub seed: u64,
    pub restarts: usize,
    /// Training mean squared error in normalized target units.
    pub final_loss: f64,
    pub dataset_fingerprint: String,
    /// ISO-8601 UTC timestamp.
    pub created_at: String,
    pub train_config: TrainConfig,
}

/// Creation timestamp for model metadata. Honors `SOURCE_DATE_EPOCH` so that
/// repeated runs can produce identical files.
pub fn creation_timestamp() -> String {
    let when = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok())
        .and_then(|secs| chrono::DateTime::from_timestamp(secs, 0))
        .unwrap_or_else(chrono::Utc::now);
    when.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// End-to-end ORTG predictor: raw features → pipeline → regressor → ORTG points.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedPredictor {
    pipeline: TransformPipeline,
    regressor: Regressor,
    metadata: PredictorMetadata,
}

impl TrainedPredictor {
    pub fn new(pipeline: TransformPipeline, regressor: Regressor, metadata: PredictorMetadata) -> Result<Self, ModelError> {
        if regressor.input_dim() != pipeline.n_components() {
            return Err(ModelError::Argument(format!(
                "regressor expects {} inputs but the pipeline yields {}",
                regressor.input_dim(),
                pipeline.n_components()
            )));
        }
        Ok(Self {
            pipeline,
            regressor,
            metadata,
        })
    }

    /// Fit the pipeline with `k` components on all of `data`, then the regressor.
    pub fn fit(data: &Dataset, spec: &ModelSpec, k: usize, cfg: &TrainConfig) -> Result<Self, ModelError> {
        let features = data.features();
        let targets = data.targets();
        let pipeline = TransformPipeline::fit(&features, &targets, k)?;
        let inputs: Vec<Vec<f64>> = features.iter().map(|x| pipeline.forward_unchecked(x)).collect();
        let normalized: Vec<f64> = targets.iter().map(|&t| pipeline.normalize_target(t)).collect();
        let (regressor, final_loss) = Regressor::fit(spec, &inputs, &normalized, cfg)?;
        let metadata = PredictorMetadata {
            seed: cfg.seed,
            restarts: cfg.restarts,
            final_loss,
            dataset_fingerprint: data.fingerprint(),
            created_at: creation_timestamp(),
            train_config: cfg.clone(),
        };
        Self::new(pipeline, regressor, metadata)
    }

    pub fn pipeline(&self) -> &TransformPipeline {
        &self.pipeline
    }

    pub fn regressor(&self) -> &Regressor {
        &self.regressor
    }

    pub fn metadata(&self) -> &PredictorMetadata {
        &self.metadata
    }

    pub fn spec(&self) -> ModelSpec {
        self.regressor.spec()
    }

    /// Regressor output in normalized target units.
    pub fn predict_normalized(&self, x: &[f64; FEATURE_COUNT]) -> f64 {
        self.regressor.predict(&self.pipeline.forward_unchecked(x))
    }

    /// Predicted ORTG in points per 100 possessions.
    pub fn predict(&self, x: &FeatureVector) -> f64 {
        self.predict_values(x.values())
    }

    /// Same as [`predict`](Self::predict) for an unvalidated vector; only
    /// finiteness is checked.
    pub fn predict_raw(&self, x: &[f64; FEATURE_COUNT]) -> Result<f64, ModelError> {
        if let Some(j) = x.iter().position(|v| !v.is_finite()) {
            return Err(ModelError::Argument(format!("feature {j} is not finite")));
        }
        Ok(self.predict_values(x))
    }

    pub(crate) fn predict_values(&self, x: &[f64; FEATURE_COUNT]) -> f64 {
        self.pipeline.denormalize_target(self.predict_normalized(x))
    }

    /// ∂ORTG/∂feature: target range × Jᵀ × ∇regressor.
    pub fn gradient_input(&self, x: &[f64; FEATURE_COUNT]) -> [f64; FEATURE_COUNT] {
        let z = self.pipeline.forward_unchecked(x);
        let mut g = self.regressor.input_gradient(&z);
        let range = self.pipeline.target_range();
        g.iter_mut().for_each(|v| *v *= range);
        self.pipeline.jacobian_transpose_mul(&g)
    }
}
