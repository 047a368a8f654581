//! Seeded synthetic team-season datasets with a planted linear ORTG rule.
//!
//! Frequencies are drawn as eight positive weights rescaled to a total in
//! `freq_sum_range`, so the remainder left for unmodeled playtypes stays
//! realistic. The remaining metrics are uniform within per-feature ranges.
//! The target is `weights · x + bias` plus Gaussian noise in ORTG points.
//!
//! When `planted_rank` is set, the planted weights are projected onto the
//! row space of the Jacobian of a preprocessing pipeline fit on the
//! generated features with that many components, which makes the rule
//! exactly representable by a linear model over the retained components.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::{Dataset, IngestError, TeamSeasonRow};
use crate::features::{FeatureKey, FeatureVector, MetricKind, PlaytypeKind, FEATURE_COUNT};
use crate::transform::TransformPipeline;

/// The 30 franchises, used to label generated rows.
pub const TEAM_CODES: [&str; 30] = [
    "ATL", "BOS", "BKN", "CHA", "CHI", "CLE", "DAL", "DEN", "DET", "GSW", "HOU", "IND", "LAC", "LAL", "MEM",
    "MIA", "MIL", "MIN", "NOP", "NYK", "OKC", "ORL", "PHI", "PHX", "POR", "SAC", "SAS", "TOR", "UTA", "WAS",
];

/// First season labels start from.
pub const FIRST_SEASON: i32 = 2015;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    /// Per-feature sampling range. For frequency coordinates this is the
    /// range of the raw positive weight drawn before rescaling.
    pub ranges: [(f64, f64); FEATURE_COUNT],
    /// Range of the total modeled-playtype frequency.
    pub freq_sum_range: (f64, f64),
    /// Standard deviation of the additive target noise, in ORTG points.
    pub sigma: f64,
    /// Mean of the noiseless rule over the generated rows.
    pub ortg_center: f64,
    /// Standard deviation of the noiseless rule over the generated rows.
    pub ortg_spread: f64,
    pub planted_rank: Option<usize>,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        // Typical league shares and efficiencies per playtype.
        let share = [0.075, 0.155, 0.17, 0.07, 0.05, 0.22, 0.07, 0.05];
        let fg = [0.40, 0.55, 0.41, 0.57, 0.46, 0.39, 0.64, 0.42];
        let mut ranges = [(0.0, 0.0); FEATURE_COUNT];
        for p in PlaytypeKind::ALL {
            let i = p.index();
            for m in MetricKind::ALL {
                let r = match m {
                    MetricKind::Freq => (0.6 * share[i], 1.4 * share[i]),
                    MetricKind::FgPct => (fg[i] - 0.05, fg[i] + 0.05),
                    MetricKind::FtFreq => (0.05, 0.20),
                    MetricKind::TovFreq => (0.06, 0.19),
                    MetricKind::AndOneFreq => (0.01, 0.05),
                    MetricKind::ScoreFreq => (fg[i] - 0.02, fg[i] + 0.10),
                };
                ranges[FeatureKey::new(p, m).index()] = r;
            }
        }
        Self {
            ranges,
            freq_sum_range: (0.7, 0.95),
            sigma: 2.0,
            ortg_center: 110.0,
            ortg_spread: 4.5,
            planted_rank: Some(18),
        }
    }
}

impl SyntheticSpec {
    fn validate(&self) -> Result<(), IngestError> {
        for key in FeatureKey::all() {
            let (lo, hi) = self.ranges[key.index()];
            if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
                return Err(IngestError::Argument(format!(
                    "range for `{key}` must lie within [0, 1], got [{lo}, {hi}]"
                )));
            }
            if key.is_freq() && hi <= 0.0 {
                return Err(IngestError::Argument(format!("frequency weight range for `{key}` must allow positive draws")));
            }
        }
        let (lo, hi) = self.freq_sum_range;
        if !(lo > 0.0 && hi <= 1.0 && lo <= hi) {
            return Err(IngestError::Argument(format!(
                "frequency total range must lie within (0, 1], got [{lo}, {hi}]"
            )));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(IngestError::Argument(format!("sigma must be nonnegative, got {}", self.sigma)));
        }
        if !(self.ortg_center.is_finite() && self.ortg_spread.is_finite() && self.ortg_spread >= 0.0) {
            return Err(IngestError::Argument("ORTG center and spread must be finite".into()));
        }
        Ok(())
    }
}

/// Ground truth of a generated dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedRule {
    pub weights: [f64; FEATURE_COUNT],
    pub bias: f64,
    pub sigma: f64,
}

impl PlantedRule {
    /// Noiseless target for a raw feature vector.
    pub fn evaluate(&self, x: &[f64; FEATURE_COUNT]) -> f64 {
        let mut acc = self.bias;
        for (w, v) in self.weights.iter().zip(x) {
            acc += w * v;
        }
        acc
    }
}

pub fn season_label(index: usize) -> String {
    let start = FIRST_SEASON + index as i32;
    format!("{start}-{:02}", (start + 1) % 100)
}

fn sample_features(rng: &mut ChaCha8Rng, spec: &SyntheticSpec) -> [f64; FEATURE_COUNT] {
    let mut x = [0.0; FEATURE_COUNT];
    for key in FeatureKey::all() {
        let (lo, hi) = spec.ranges[key.index()];
        x[key.index()] = if lo == hi { lo } else { rng.random_range(lo..hi) };
    }
    let (lo, hi) = spec.freq_sum_range;
    let total = if lo == hi { lo } else { rng.random_range(lo..hi) };
    let raw: f64 = FeatureKey::freq_keys().map(|k| x[k.index()]).sum();
    for key in FeatureKey::freq_keys() {
        let v = if raw > 0.0 {
            x[key.index()] / raw * total
        } else {
            total / 8.0
        };
        x[key.index()] = v;
    }
    // Rescaling can overshoot the requested total by an ulp or two.
    let sum: f64 = FeatureKey::freq_keys().map(|k| x[k.index()]).sum();
    if sum > 1.0 {
        for key in FeatureKey::freq_keys() {
            x[key.index()] /= sum;
        }
    }
    x
}

/// Project `w` onto the row space of the `k × 48` Jacobian `j`.
fn project_onto_rows(j: &[f64], k: usize, w: &[f64; FEATURE_COUNT]) -> [f64; FEATURE_COUNT] {
    let jt = DMatrix::from_fn(FEATURE_COUNT, k, |r, c| j[c * FEATURE_COUNT + r]);
    let rhs = DVector::from_column_slice(w);
    let svd = jt.clone().svd(true, true);
    let eps = svd.singular_values.max() * FEATURE_COUNT as f64 * f64::EPSILON;
    let v = svd.solve(&rhs, eps).expect("SVD carries both factors");
    let projected = jt * v;
    let mut out = [0.0; FEATURE_COUNT];
    out.copy_from_slice(projected.as_slice());
    out
}

/// Generate `n` rows deterministically from `seed`.
pub fn generate_synthetic_dataset(
    seed: u64,
    n: usize,
    spec: &SyntheticSpec,
) -> Result<(Dataset, PlantedRule), IngestError> {
    if n < 2 {
        return Err(IngestError::Argument(format!("need at least 2 rows, got {n}")));
    }
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let features: Vec<[f64; FEATURE_COUNT]> = (0..n).map(|_| sample_features(&mut rng, spec)).collect();

    let mut weights = [0.0; FEATURE_COUNT];
    for w in &mut weights {
        *w = StandardNormal.sample(&mut rng);
    }
    if let Some(rank) = spec.planted_rank {
        let k = rank.clamp(1, FEATURE_COUNT).min(n - 1);
        let zeros = vec![0.0; n];
        let pipeline = TransformPipeline::fit(&features, &zeros, k)
            .map_err(|e| IngestError::Argument(format!("planted-rule projection failed: {e}")))?;
        weights = project_onto_rows(pipeline.jacobian(), k, &weights);
    }

    let raw: Vec<f64> = features
        .iter()
        .map(|x| weights.iter().zip(x).map(|(w, v)| w * v).sum())
        .collect();
    let mean = raw.iter().sum::<f64>() / n as f64;
    let std = (raw.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (n - 1) as f64).sqrt();
    let factor = if std > 0.0 { spec.ortg_spread / std } else { 0.0 };
    for w in &mut weights {
        *w *= factor;
    }
    let rule = PlantedRule {
        weights,
        bias: spec.ortg_center - mean * factor,
        sigma: spec.sigma,
    };

    let noise = Normal::new(0.0, spec.sigma.max(f64::MIN_POSITIVE))
        .map_err(|e| IngestError::Argument(e.to_string()))?;
    let mut rows = Vec::with_capacity(n);
    for (i, x) in features.iter().enumerate() {
        let eps = noise.sample(&mut rng);
        let ortg = rule.evaluate(x) + if spec.sigma > 0.0 { eps } else { 0.0 };
        let fv = FeatureVector::new(*x)?;
        rows.push(TeamSeasonRow::new(season_label(i / TEAM_CODES.len()), TEAM_CODES[i % TEAM_CODES.len()], ortg, fv)?);
    }
    Ok((Dataset::new(rows)?, rule))
}
