use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::hypothesis::{hypothesis_check, HypothesisReport};
use super::region::{project_raw, FeasibleRegion};
use super::OptimizeError;
use crate::features::{named_map, FeatureKey, FeatureVector, FEATURE_COUNT};
use crate::ingest::Dataset;
use crate::model::TrainedPredictor;
use crate::seed;

/// A differentiable scalar function of the 48 raw features.
pub trait Surrogate: Sync {
    fn value(&self, x: &[f64; FEATURE_COUNT]) -> f64;
    fn gradient(&self, x: &[f64; FEATURE_COUNT]) -> [f64; FEATURE_COUNT];
}

impl Surrogate for TrainedPredictor {
    fn value(&self, x: &[f64; FEATURE_COUNT]) -> f64 {
        self.predict_values(x)
    }

    fn gradient(&self, x: &[f64; FEATURE_COUNT]) -> [f64; FEATURE_COUNT] {
        self.gradient_input(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeConfig {
    pub seed: u64,
    pub restarts: usize,
    pub step: f64,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            restarts: 16,
            step: 1e-2,
            max_iters: 500,
            tol: 1e-7,
        }
    }
}

impl OptimizeConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

/// Locked features and their fixed values.
pub type Locks = [(FeatureKey, f64)];

/// Feasibility tolerance used to report a constraint as active.
const ACTIVE_TOL: f64 = 1e-9;
/// Step halvings allowed before an iterate is declared stationary.
const MAX_HALVINGS: usize = 40;
const MAX_STEP: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ActiveConstraint {
    Lower(FeatureKey),
    Upper(FeatureKey),
    FreqSum,
}

impl fmt::Display for ActiveConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActiveConstraint::Lower(k) => write!(f, "{k}:lower"),
            ActiveConstraint::Upper(k) => write!(f, "{k}:upper"),
            ActiveConstraint::FreqSum => f.write_str("freq_sum"),
        }
    }
}

impl Serialize for ActiveConstraint {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameplanCandidate {
    pub features: FeatureVector,
    pub predicted_ortg: f64,
    /// Bounds (of unlocked features) and the frequency cap met with equality.
    pub active_constraints: Vec<ActiveConstraint>,
    /// Locked features in canonical order.
    pub locked: Vec<(FeatureKey, f64)>,
    /// Restart that produced the candidate.
    pub restart: usize,
}

struct Ascent {
    x: [f64; FEATURE_COUNT],
    value: f64,
}

fn distance(a: &[f64; FEATURE_COUNT], b: &[f64; FEATURE_COUNT]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

/// Projected gradient ascent from `start`. Steps that lower the value are
/// halved and retried, so accepted iterates never decrease.
fn ascend<S: Surrogate + ?Sized>(model: &S, region: &FeasibleRegion, start: [f64; FEATURE_COUNT], cfg: &OptimizeConfig) -> Ascent {
    let mut x = project_raw(&start, region);
    let mut value = model.value(&x);
    let mut step = cfg.step;
    for _ in 0..cfg.max_iters {
        let g = model.gradient(&x);
        if g.iter().all(|v| *v == 0.0) {
            break;
        }
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let mut trial = x;
            for (t, gi) in trial.iter_mut().zip(&g) {
                *t += step * gi;
            }
            let trial = project_raw(&trial, region);
            let v = model.value(&trial);
            if v >= value {
                accepted = Some((trial, v));
                break;
            }
            step *= 0.5;
        }
        let Some((next, v)) = accepted else { break };
        let moved = distance(&next, &x);
        let gain = v - value;
        x = next;
        value = v;
        step = (step * 2.0).min(MAX_STEP);
        if moved == 0.0 || (gain < cfg.tol && moved < cfg.tol) {
            break;
        }
    }
    Ascent { x, value }
}

fn lexicographic(a: &[f64; FEATURE_COUNT], b: &[f64; FEATURE_COUNT]) -> Ordering {
    a.iter().zip(b).map(|(p, q)| p.total_cmp(q)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
}

fn normalize_locks(locks: &Locks) -> Result<Vec<(FeatureKey, f64)>, OptimizeError> {
    let mut map = BTreeMap::new();
    for &(key, value) in locks {
        if let Some(prev) = map.insert(key, value) {
            if prev.to_bits() != value.to_bits() {
                return Err(OptimizeError::Argument(format!("`{key}` locked to both {prev} and {value}")));
            }
        }
    }
    let mut sorted: Vec<_> = map.into_iter().collect();
    sorted.sort_by_key(|(k, _)| k.index());
    Ok(sorted)
}

/// Starting points: the highest-ORTG dataset rows (a quarter of the
/// restarts, rounded up) followed by uniform draws from the box.
fn starting_points(region: &FeasibleRegion, data: &Dataset, cfg: &OptimizeConfig) -> Vec<[f64; FEATURE_COUNT]> {
    let mut by_ortg: Vec<usize> = (0..data.len()).collect();
    by_ortg.sort_by(|&a, &b| data.rows()[b].ortg.total_cmp(&data.rows()[a].ortg).then(a.cmp(&b)));
    let from_rows = cfg.restarts.div_ceil(4).min(data.len());
    let mut starts: Vec<[f64; FEATURE_COUNT]> =
        by_ortg[..from_rows].iter().map(|&i| *data.rows()[i].features.values()).collect();
    for r in from_rows..cfg.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(cfg.seed, r as u64));
        let mut x = [0.0; FEATURE_COUNT];
        for j in 0..FEATURE_COUNT {
            let (lo, hi) = (region.lower()[j], region.upper()[j]);
            x[j] = if hi > lo { rng.random_range(lo..=hi) } else { lo };
        }
        starts.push(x);
    }
    starts
}

/// Maximize `model` over `region` with `locks` held fixed.
///
/// Runs projected gradient ascent from `cfg.restarts` starting points in
/// parallel and keeps the highest value, breaking ties toward the
/// lexicographically smallest feature vector. `data` supplies the
/// high-ORTG starting rows and may be empty.
pub fn optimize_gameplan<S: Surrogate + ?Sized>(
    model: &S,
    region: &FeasibleRegion,
    data: &Dataset,
    locks: &Locks,
    cfg: &OptimizeConfig,
) -> Result<GameplanCandidate, OptimizeError> {
    let valid = cfg.restarts > 0
        && cfg.max_iters > 0
        && cfg.step.is_finite()
        && cfg.step > 0.0
        && cfg.tol.is_finite()
        && cfg.tol >= 0.0;
    if !valid {
        return Err(OptimizeError::Argument(format!("invalid optimizer configuration {cfg:?}")));
    }
    let locked = normalize_locks(locks)?;
    let pinned = region.with_locks(&locked)?;
    let starts = starting_points(&pinned, data, cfg);
    let results: Vec<Ascent> = starts.into_par_iter().map(|s| ascend(model, &pinned, s, cfg)).collect();
    let (restart, best) = results
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| a.value.total_cmp(&b.value).then_with(|| lexicographic(&b.x, &a.x)))
        .expect("at least one restart");

    let is_locked = |j: usize| locked.iter().any(|(k, _)| k.index() == j);
    let mut active = Vec::new();
    for key in FeatureKey::all() {
        let j = key.index();
        if is_locked(j) {
            continue;
        }
        if best.x[j] - region.lower()[j] <= ACTIVE_TOL {
            active.push(ActiveConstraint::Lower(key));
        } else if region.upper()[j] - best.x[j] <= ACTIVE_TOL {
            active.push(ActiveConstraint::Upper(key));
        }
    }
    let sum: f64 = FeatureKey::freq_keys().map(|k| best.x[k.index()]).sum();
    if region.freq_sum_cap() - sum <= ACTIVE_TOL {
        active.push(ActiveConstraint::FreqSum);
    }
    let features = FeatureVector::new(best.x)
        .map_err(|e| OptimizeError::Argument(format!("optimizer produced an invalid vector: {e}")))?;
    Ok(GameplanCandidate {
        features,
        predicted_ortg: best.value,
        active_constraints: active,
        locked,
        restart,
    })
}

#[derive(Serialize)]
struct GameplanDto<'a> {
    predicted_ortg: f64,
    features: crate::features::NamedValues<'a>,
    active_constraints: &'a [ActiveConstraint],
    locked: BTreeMap<&'static str, f64>,
    hypothesis_checks: HypothesisReport,
    region_fingerprint: String,
}

/// The gameplan document written by the CLI and returned by the service.
pub fn gameplan_json(candidate: &GameplanCandidate, region: &FeasibleRegion) -> String {
    let dto = GameplanDto {
        predicted_ortg: candidate.predicted_ortg,
        features: named_map(candidate.features.values()),
        active_constraints: &candidate.active_constraints,
        locked: candidate.locked.iter().map(|(k, v)| (k.name(), *v)).collect(),
        hypothesis_checks: hypothesis_check(&candidate.features),
        region_fingerprint: region.fingerprint(),
    };
    let mut s = serde_json::to_string_pretty(&dto).expect("gameplan serializes");
    s.push('\n');
    s
}

/// Derive the region from `data` with `margin`, optimize `model` under
/// `locks`, and render the gameplan document. Both the command line and the
/// HTTP service produce their output through this function.
pub fn plan_document<S: Surrogate + ?Sized>(
    model: &S,
    data: &Dataset,
    margin: f64,
    locks: &Locks,
    cfg: &OptimizeConfig,
) -> Result<(GameplanCandidate, String), OptimizeError> {
    let region = super::derive_feasible_region(data, margin)?;
    let candidate = optimize_gameplan(model, &region, data, locks, cfg)?;
    let doc = gameplan_json(&candidate, &region);
    Ok((candidate, doc))
}
