use super::TransformError;

/// Per-dimension affine map of `[min, max]` onto `[0, 1]`.
///
/// Dimensions whose observed range is zero are degenerate: they map to 0
/// and invert to the constant.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxNormalizer {
    min: Vec<f64>,
    max: Vec<f64>,
}

impl MinMaxNormalizer {
    pub fn fit<S: AsRef<[f64]>>(samples: &[S]) -> Result<Self, TransformError> {
        let first = samples
            .first()
            .ok_or_else(|| TransformError::Fit("no samples to fit a normalizer".into()))?
            .as_ref();
        let dim = first.len();
        if dim == 0 {
            return Err(TransformError::Fit("zero-dimensional samples".into()));
        }
        let mut min = vec![f64::INFINITY; dim];
        let mut max = vec![f64::NEG_INFINITY; dim];
        for (n, sample) in samples.iter().enumerate() {
            let sample = sample.as_ref();
            if sample.len() != dim {
                return Err(TransformError::Fit(format!(
                    "sample {n} has dimension {}, expected {dim}",
                    sample.len()
                )));
            }
            for (d, &v) in sample.iter().enumerate() {
                if !v.is_finite() {
                    return Err(TransformError::Fit(format!("sample {n} dimension {d} is not finite")));
                }
                min[d] = min[d].min(v);
                max[d] = max[d].max(v);
            }
        }
        Ok(Self { min, max })
    }

    pub fn from_bounds(min: Vec<f64>, max: Vec<f64>) -> Result<Self, TransformError> {
        if min.len() != max.len() || min.is_empty() {
            return Err(TransformError::Argument("normalizer bounds must be nonempty and of equal length".into()));
        }
        for (d, (lo, hi)) in min.iter().zip(&max).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && hi >= lo) {
                return Err(TransformError::Argument(format!("invalid bounds at dimension {d}: [{lo}, {hi}]")));
            }
        }
        Ok(Self { min, max })
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn min(&self) -> &[f64] {
        &self.min
    }

    pub fn max(&self) -> &[f64] {
        &self.max
    }

    pub fn range(&self, d: usize) -> f64 {
        self.max[d] - self.min[d]
    }

    pub fn is_degenerate(&self, d: usize) -> bool {
        self.max[d] == self.min[d]
    }

    pub fn degenerate_dims(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&d| self.is_degenerate(d)).collect()
    }

    pub fn apply_dim(&self, d: usize, v: f64) -> f64 {
        if self.is_degenerate(d) {
            0.0
        } else {
            (v - self.min[d]) / (self.max[d] - self.min[d])
        }
    }

    pub fn invert_dim(&self, d: usize, v: f64) -> f64 {
        if self.is_degenerate(d) {
            self.min[d]
        } else {
            self.min[d] + v * (self.max[d] - self.min[d])
        }
    }

    /// d(apply)/dv for dimension `d`; zero on degenerate dimensions.
    pub fn slope(&self, d: usize) -> f64 {
        if self.is_degenerate(d) {
            0.0
        } else {
            1.0 / (self.max[d] - self.min[d])
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dim());
        x.iter().enumerate().map(|(d, &v)| self.apply_dim(d, v)).collect()
    }

    pub fn invert(&self, y: &[f64]) -> Vec<f64> {
        debug_assert_eq!(y.len(), self.dim());
        y.iter().enumerate().map(|(d, &v)| self.invert_dim(d, v)).collect()
    }
}
