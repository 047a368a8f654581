use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use super::OptimizeError;
use crate::features::{named_map, FeatureKey, FeatureVector, FEATURE_COUNT, FREQ_SUM_TOLERANCE};
use crate::ingest::Dataset;

/// Box bounds on every feature intersected with a cap on the sum of the
/// eight playtype frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleRegion {
    lower: [f64; FEATURE_COUNT],
    upper: [f64; FEATURE_COUNT],
    freq_sum_cap: f64,
}

fn freq_indices() -> impl Iterator<Item = usize> {
    FeatureKey::freq_keys().map(FeatureKey::index)
}

impl FeasibleRegion {
    pub fn new(
        lower: [f64; FEATURE_COUNT],
        upper: [f64; FEATURE_COUNT],
        freq_sum_cap: f64,
    ) -> Result<Self, OptimizeError> {
        for j in 0..FEATURE_COUNT {
            let (lo, hi) = (lower[j], upper[j]);
            if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi && hi <= 1.0) {
                return Err(OptimizeError::Argument(format!(
                    "bounds for `{}` must satisfy 0 <= lower <= upper <= 1, got [{lo}, {hi}]",
                    FeatureKey::from_index(j).unwrap()
                )));
            }
        }
        if !(freq_sum_cap.is_finite() && freq_sum_cap > 0.0 && freq_sum_cap <= 1.0) {
            return Err(OptimizeError::Argument(format!("frequency cap {freq_sum_cap} must lie in (0, 1]")));
        }
        let minimum: f64 = freq_indices().map(|j| lower[j]).sum();
        if minimum > freq_sum_cap + FREQ_SUM_TOLERANCE {
            return Err(OptimizeError::LockedFreqSum {
                minimum,
                cap: freq_sum_cap,
            });
        }
        Ok(Self {
            lower,
            upper,
            freq_sum_cap,
        })
    }

    pub fn lower(&self) -> &[f64; FEATURE_COUNT] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64; FEATURE_COUNT] {
        &self.upper
    }

    pub fn freq_sum_cap(&self) -> f64 {
        self.freq_sum_cap
    }

    /// Largest constraint violation of `x` (0 when feasible).
    pub fn violation(&self, x: &[f64; FEATURE_COUNT]) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..FEATURE_COUNT {
            worst = worst.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        let sum: f64 = freq_indices().map(|j| x[j]).sum();
        worst.max(sum - self.freq_sum_cap)
    }

    pub fn contains(&self, x: &[f64; FEATURE_COUNT], tol: f64) -> bool {
        self.violation(x) <= tol
    }

    /// Features of `x` lying outside their box bounds.
    pub fn out_of_bounds(&self, x: &[f64; FEATURE_COUNT]) -> Vec<FeatureKey> {
        FeatureKey::all()
            .filter(|k| {
                let v = x[k.index()];
                v < self.lower[k.index()] || v > self.upper[k.index()]
            })
            .collect()
    }

    /// The region with each locked coordinate pinned to its value.
    pub fn with_locks(&self, locks: &[(FeatureKey, f64)]) -> Result<Self, OptimizeError> {
        let mut lower = self.lower;
        let mut upper = self.upper;
        for &(key, value) in locks {
            let j = key.index();
            if !(value.is_finite() && self.lower[j] <= value && value <= self.upper[j]) {
                return Err(OptimizeError::LockedConflict {
                    key,
                    value,
                    lower: self.lower[j],
                    upper: self.upper[j],
                });
            }
            lower[j] = value;
            upper[j] = value;
        }
        Self::new(lower, upper, self.freq_sum_cap)
    }

    /// 64-bit content hash of the bounds and cap.
    pub fn fingerprint(&self) -> String {
        let mut text = String::new();
        for v in self.lower.iter().chain(&self.upper).chain([&self.freq_sum_cap]) {
            text.push_str(&format!("{v}\n"));
        }
        crate::io::fingerprint64(text.as_bytes())
    }
}

impl Serialize for FeasibleRegion {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("FeasibleRegion", 3)?;
        s.serialize_field("lower", &named_map(&self.lower))?;
        s.serialize_field("upper", &named_map(&self.upper))?;
        s.serialize_field("freq_sum_cap", &self.freq_sum_cap)?;
        s.end()
    }
}

/// Observed per-feature extrema widened by `margin` × range and clipped to
/// `[0, 1]`; the frequency cap is the largest observed frequency sum,
/// widened the same way and clipped to 1.
pub fn derive_feasible_region(data: &Dataset, margin: f64) -> Result<FeasibleRegion, OptimizeError> {
    if data.is_empty() {
        return Err(OptimizeError::Argument("cannot derive a region from an empty dataset".into()));
    }
    if !(margin.is_finite() && margin >= 0.0) {
        return Err(OptimizeError::Argument(format!("margin {margin} must be finite and nonnegative")));
    }
    let mut lo = [f64::INFINITY; FEATURE_COUNT];
    let mut hi = [f64::NEG_INFINITY; FEATURE_COUNT];
    let mut sum_lo = f64::INFINITY;
    let mut sum_hi = f64::NEG_INFINITY;
    for row in data.rows() {
        for (j, v) in row.features.values().iter().enumerate() {
            lo[j] = lo[j].min(*v);
            hi[j] = hi[j].max(*v);
        }
        let s = row.features.freq_sum();
        sum_lo = sum_lo.min(s);
        sum_hi = sum_hi.max(s);
    }
    let mut lower = [0.0; FEATURE_COUNT];
    let mut upper = [0.0; FEATURE_COUNT];
    for j in 0..FEATURE_COUNT {
        let pad = margin * (hi[j] - lo[j]);
        lower[j] = (lo[j] - pad).max(0.0);
        upper[j] = (hi[j] + pad).min(1.0);
    }
    let cap = (sum_hi + margin * (sum_hi - sum_lo)).min(1.0);
    FeasibleRegion::new(lower, upper, cap)
}

/// Euclidean projection onto the region.
///
/// Non-frequency coordinates are clamped independently. Frequency
/// coordinates are clamped; if their sum still exceeds the cap they become
/// `clamp(xᵢ − τ, lᵢ, uᵢ)` with the unique τ > 0 that meets the cap exactly,
/// found by walking the breakpoints of that piecewise-linear sum.
pub(crate) fn project_raw(x: &[f64; FEATURE_COUNT], region: &FeasibleRegion) -> [f64; FEATURE_COUNT] {
    let (l, u) = (&region.lower, &region.upper);
    let mut y = [0.0; FEATURE_COUNT];
    for j in 0..FEATURE_COUNT {
        y[j] = x[j].clamp(l[j], u[j]);
    }
    let freq: Vec<usize> = freq_indices().collect();
    let cap = region.freq_sum_cap;
    let shifted_sum = |tau: f64| -> f64 { freq.iter().map(|&j| (x[j] - tau).clamp(l[j], u[j])).sum() };
    if freq.iter().map(|&j| y[j]).sum::<f64>() <= cap {
        return y;
    }

    let mut breaks: Vec<f64> = freq
        .iter()
        .flat_map(|&j| [x[j] - u[j], x[j] - l[j]])
        .filter(|b| *b > 0.0)
        .collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let mut left = 0.0;
    let mut left_sum = shifted_sum(0.0);
    let mut tau = None;
    for &b in &breaks {
        let s = shifted_sum(b);
        if s <= cap {
            // linear on [left, b]
            tau = Some(if left_sum == s {
                b
            } else {
                left + (b - left) * (left_sum - cap) / (left_sum - s)
            });
            break;
        }
        left = b;
        left_sum = s;
    }
    // All frequencies sit at their lower bounds past the last breakpoint,
    // and the region guarantees that sum is within the cap.
    let tau = tau.unwrap_or(left);
    for &j in &freq {
        y[j] = (x[j] - tau).clamp(l[j], u[j]);
    }
    y
}

pub fn project_feasible(x: &[f64; FEATURE_COUNT], region: &FeasibleRegion) -> FeatureVector {
    FeatureVector::new(project_raw(x, region)).expect("region lies inside the unit box with cap <= 1")
}
