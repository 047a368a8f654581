//! Leave-one-out cross-validation and the error metrics it reports.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::ingest::Dataset;
use crate::model::{ModelError, ModelSpec, Regressor, TrainConfig};
use crate::transform::TransformPipeline;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("undefined R²: actual values have zero variance")]
    UndefinedRSquared,
    #[error("fold {index} ({season} {team}) failed: {source}")]
    Fold {
        index: usize,
        season: String,
        team: String,
        source: ModelError,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub fn rmse(errors: &[f64]) -> Result<f64, EvalError> {
    if errors.is_empty() {
        return Err(EvalError::Argument("rmse of an empty list".into()));
    }
    let sse: f64 = errors.iter().map(|e| e * e).sum();
    Ok((sse / errors.len() as f64).sqrt())
}

/// `1 − SSE/SST`, with SST taken about the mean of `actual`.
pub fn r_squared(actual: &[f64], predicted: &[f64]) -> Result<f64, EvalError> {
    if actual.is_empty() || actual.len() != predicted.len() {
        return Err(EvalError::Argument(format!(
            "r_squared needs equal nonempty lengths, got {} and {}",
            actual.len(),
            predicted.len()
        )));
    }
    let mean = actual.iter().sum::<f64>() / actual.len() as f64;
    let sst: f64 = actual.iter().map(|a| (a - mean).powi(2)).sum();
    if sst == 0.0 {
        return Err(EvalError::UndefinedRSquared);
    }
    let sse: f64 = actual.iter().zip(predicted).map(|(a, p)| (a - p).powi(2)).sum();
    Ok(1.0 - sse / sst)
}

/// Where the normalizers and PCA are fit during cross-validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FitScope {
    /// Once on all rows, before folding.
    #[default]
    Global,
    /// Refit on each fold's training rows.
    PerFold,
}

impl FitScope {
    pub fn as_str(self) -> &'static str {
        match self {
            FitScope::Global => "global",
            FitScope::PerFold => "per-fold",
        }
    }
}

impl fmt::Display for FitScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FitScope {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "global" => Ok(FitScope::Global),
            "per-fold" | "per_fold" => Ok(FitScope::PerFold),
            _ => Err(EvalError::Argument(format!("unknown fit scope {s:?}; expected global or per-fold"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    /// Row index of the held-out sample.
    pub index: usize,
    pub season: String,
    pub team: String,
    pub actual: f64,
    pub predicted: f64,
    /// Actual and predicted ORTG under the all-rows target normalizer.
    pub normalized_actual: f64,
    pub normalized_predicted: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub model: ModelSpec,
    pub k: usize,
    pub fit_scope: FitScope,
    pub train_config: TrainConfig,
    /// Minimum and maximum ORTG over all rows.
    pub target_min: f64,
    pub target_max: f64,
    pub folds: Vec<FoldResult>,
    pub rmse_normalized: f64,
    pub rmse_ortg: f64,
    pub r_squared: f64,
}

/// Per-fold seed: the master seed xor the held-out index.
pub fn fold_seed(seed: u64, index: usize) -> u64 {
    seed ^ index as u64
}

/// Leave-one-out cross-validation of `spec` on `data` with `k` components.
///
/// Folds run in parallel on the current rayon pool; each fold's training is
/// seeded from [`fold_seed`], so the report does not depend on scheduling.
pub fn run_loocv(
    data: &Dataset,
    spec: &ModelSpec,
    k: usize,
    cfg: &TrainConfig,
    scope: FitScope,
) -> Result<EvalReport, EvalError> {
    let n = data.len();
    if n < 3 {
        return Err(EvalError::Argument(format!("cross-validation needs at least 3 rows, got {n}")));
    }
    if k == 0 || k >= n {
        return Err(EvalError::Argument(format!("component count {k} must be in [1, {})", n)));
    }
    cfg.validate()?;
    let features = data.features();
    let targets = data.targets();
    let global = TransformPipeline::fit(&features, &targets, k).map_err(ModelError::from)?;
    let projected: Vec<Vec<f64>> = match scope {
        FitScope::Global => features.iter().map(|x| global.forward_unchecked(x)).collect(),
        FitScope::PerFold => Vec::new(),
    };
    let normalized: Vec<f64> = targets.iter().map(|&t| global.normalize_target(t)).collect();

    let run_fold = |i: usize| -> Result<FoldResult, ModelError> {
        let fold_cfg = TrainConfig {
            seed: fold_seed(cfg.seed, i),
            ..cfg.clone()
        };
        let predicted = match scope {
            FitScope::Global => {
                let inputs: Vec<&[f64]> = (0..n).filter(|&j| j != i).map(|j| projected[j].as_slice()).collect();
                let ys: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| normalized[j]).collect();
                let (model, _) = Regressor::fit(spec, &inputs, &ys, &fold_cfg)?;
                global.denormalize_target(model.predict(&projected[i]))
            }
            FitScope::PerFold => {
                let xs: Vec<_> = (0..n).filter(|&j| j != i).map(|j| features[j]).collect();
                let ts: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| targets[j]).collect();
                let pipeline = TransformPipeline::fit(&xs, &ts, k)?;
                let inputs: Vec<Vec<f64>> = xs.iter().map(|x| pipeline.forward_unchecked(x)).collect();
                let ys: Vec<f64> = ts.iter().map(|&t| pipeline.normalize_target(t)).collect();
                let (model, _) = Regressor::fit(spec, &inputs, &ys, &fold_cfg)?;
                pipeline.denormalize_target(model.predict(&pipeline.forward_unchecked(&features[i])))
            }
        };
        if !predicted.is_finite() {
            return Err(ModelError::Fit("non-finite prediction".into()));
        }
        let row = &data.rows()[i];
        Ok(FoldResult {
            index: i,
            season: row.season.clone(),
            team: row.team.clone(),
            actual: row.ortg,
            predicted,
            normalized_actual: normalized[i],
            normalized_predicted: global.normalize_target(predicted),
        })
    };

    let folds: Vec<FoldResult> = (0..n)
        .into_par_iter()
        .map(|i| {
            run_fold(i).map_err(|source| EvalError::Fold {
                index: i,
                season: data.rows()[i].season.clone(),
                team: data.rows()[i].team.clone(),
                source,
            })
        })
        .collect::<Result<_, _>>()?;

    let ortg_errors: Vec<f64> = folds.iter().map(|f| f.predicted - f.actual).collect();
    let norm_errors: Vec<f64> = folds.iter().map(|f| f.normalized_predicted - f.normalized_actual).collect();
    let actual: Vec<f64> = folds.iter().map(|f| f.actual).collect();
    let predicted: Vec<f64> = folds.iter().map(|f| f.predicted).collect();
    Ok(EvalReport {
        model: spec.clone(),
        k,
        fit_scope: scope,
        train_config: cfg.clone(),
        target_min: global.target_normalizer().min()[0],
        target_max: global.target_normalizer().max()[0],
        rmse_normalized: rmse(&norm_errors)?,
        rmse_ortg: rmse(&ortg_errors)?,
        r_squared: r_squared(&actual, &predicted)?,
        folds,
    })
}

#[derive(Serialize)]
struct ReportDto<'a> {
    model_kind: &'static str,
    hidden: &'a [usize],
    k: usize,
    fit_scope: &'static str,
    seed: u64,
    target_min: f64,
    target_max: f64,
    rmse_normalized: f64,
    rmse_ortg: f64,
    r_squared: f64,
    folds: Vec<FoldDto<'a>>,
}

#[derive(Serialize)]
struct FoldDto<'a> {
    index: usize,
    season: &'a str,
    team: &'a str,
    actual_ortg: f64,
    predicted_ortg: f64,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let dto = ReportDto {
            model_kind: self.model.kind(),
            hidden: self.model.hidden(),
            k: self.k,
            fit_scope: self.fit_scope.as_str(),
            seed: self.train_config.seed,
            target_min: self.target_min,
            target_max: self.target_max,
            rmse_normalized: self.rmse_normalized,
            rmse_ortg: self.rmse_ortg,
            r_squared: self.r_squared,
            folds: self
                .folds
                .iter()
                .map(|f| FoldDto {
                    index: f.index,
                    season: &f.season,
                    team: &f.team,
                    actual_ortg: f.actual,
                    predicted_ortg: f.predicted,
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&dto).expect("report serializes");
        s.push('\n');
        s
    }

    /// `season,team,actual_ortg,predicted_ortg`, one line per fold.
    pub fn predicted_vs_actual_csv(&self) -> String {
        let mut out = String::from("season,team,actual_ortg,predicted_ortg\n");
        for f in &self.folds {
            out.push_str(&format!("{},{},{},{}\n", f.season, f.team, f.actual, f.predicted));
        }
        out
    }
}
