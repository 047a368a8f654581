use serde::Serialize;

use super::mlp::parameter_count;
use super::predictor::ModelSpec;
use super::train::TrainConfig;
use super::ModelError;
use crate::eval::{run_loocv, FitScope};
use crate::ingest::Dataset;

/// One candidate hidden shape and its cross-validated error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchEntry {
    pub hidden: Vec<usize>,
    pub parameter_count: usize,
    pub rmse_ortg: f64,
    pub rmse_normalized: f64,
    pub r_squared: f64,
}

/// Cross-validate every candidate hidden shape and rank them by ORTG RMSE,
/// then parameter count, then shape.
pub fn search_mlp_architecture(
    data: &Dataset,
    candidates: &[Vec<usize>],
    k: usize,
    cfg: &TrainConfig,
    scope: FitScope,
) -> Result<Vec<SearchEntry>, ModelError> {
    if candidates.is_empty() {
        return Err(ModelError::Argument("no candidate shapes".into()));
    }
    let mut entries = Vec::with_capacity(candidates.len());
    for hidden in candidates {
        let spec = ModelSpec::mlp(hidden);
        let report = run_loocv(data, &spec, k, cfg, scope)
            .map_err(|e| ModelError::Eval(format!("shape {hidden:?}: {e}")))?;
        entries.push(SearchEntry {
            hidden: hidden.clone(),
            parameter_count: parameter_count(&spec.layer_sizes(k)),
            rmse_ortg: report.rmse_ortg,
            rmse_normalized: report.rmse_normalized,
            r_squared: report.r_squared,
        });
    }
    entries.sort_by(|a, b| {
        a.rmse_ortg
            .total_cmp(&b.rmse_ortg)
            .then(a.parameter_count.cmp(&b.parameter_count))
            .then_with(|| a.hidden.cmp(&b.hidden))
    });
    Ok(entries)
}
