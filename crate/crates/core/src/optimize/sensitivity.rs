use serde::Serialize;

use super::ascent::Surrogate;
use super::OptimizeError;
use crate::features::{FeatureKey, FEATURE_COUNT};
use crate::ingest::Dataset;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityEntry {
    pub rank: usize,
    pub feature: &'static str,
    /// ∂ORTG/∂feature averaged over the dataset rows.
    pub mean_gradient: f64,
    /// Sample standard deviation of the feature.
    pub std: f64,
    /// `mean_gradient × std`: predicted ORTG change for a one-deviation move.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityReport {
    /// All 48 features, by descending score, ties by name.
    pub entries: Vec<SensitivityEntry>,
}

/// Sum in ascending order so the result does not depend on row order.
fn ordered_sum(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum()
}

pub fn sensitivity_rank<S: Surrogate + ?Sized>(model: &S, data: &Dataset) -> Result<SensitivityReport, OptimizeError> {
    let n = data.len();
    if n == 0 {
        return Err(OptimizeError::Argument("sensitivity needs at least one row".into()));
    }
    let gradients: Vec<[f64; FEATURE_COUNT]> = data.rows().iter().map(|r| model.gradient(r.features.values())).collect();
    let mut entries: Vec<SensitivityEntry> = FeatureKey::all()
        .map(|key| {
            let j = key.index();
            let mut g: Vec<f64> = gradients.iter().map(|g| g[j]).collect();
            let mean_gradient = ordered_sum(&mut g) / n as f64;
            let mut x: Vec<f64> = data.rows().iter().map(|r| r.features.values()[j]).collect();
            let mean = ordered_sum(&mut x) / n as f64;
            let std = if n < 2 {
                0.0
            } else {
                let mut sq: Vec<f64> = x.iter().map(|v| (v - mean) * (v - mean)).collect();
                (ordered_sum(&mut sq) / (n - 1) as f64).sqrt()
            };
            SensitivityEntry {
                rank: 0,
                feature: key.name(),
                mean_gradient,
                std,
                score: mean_gradient * std,
            }
        })
        .collect();
    entries.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.feature.cmp(b.feature)));
    for (i, e) in entries.iter_mut().enumerate() {
        e.rank = i + 1;
    }
    Ok(SensitivityReport { entries })
}

impl SensitivityReport {
    pub fn get(&self, feature: &str) -> Option<&SensitivityEntry> {
        self.entries.iter().find(|e| e.feature == feature)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("sensitivity serializes");
        s.push('\n');
        s
    }

    /// `rank,feature,mean_gradient,std,score`, one line per feature.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,feature,mean_gradient,std,score\n");
        for e in &self.entries {
            out.push_str(&format!("{},{},{},{},{}\n", e.rank, e.feature, e.mean_gradient, e.std, e.score));
        }
        out
    }
}
