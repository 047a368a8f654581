use super::{MinMaxNormalizer, PcaModel, TransformError};
use crate::features::FEATURE_COUNT;

/// Fitted preprocessing: `forward(x) = pca.apply(feature_normalizer.apply(x))`,
/// plus the target normalizer used to map model outputs back to ORTG points.
///
/// Both stages are affine, so the composition has a constant Jacobian which
/// is computed once at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformPipeline {
    feature_normalizer: MinMaxNormalizer,
    target_normalizer: MinMaxNormalizer,
    pca: PcaModel,
    jacobian: Vec<f64>,
}

impl TransformPipeline {
    /// Fit the normalizers on `features` and `targets`, then PCA with `k`
    /// components on the normalized features.
    pub fn fit(
        features: &[[f64; FEATURE_COUNT]],
        targets: &[f64],
        k: usize,
    ) -> Result<Self, TransformError> {
        if features.len() != targets.len() {
            return Err(TransformError::Argument(format!(
                "{} feature rows but {} targets",
                features.len(),
                targets.len()
            )));
        }
        let feature_normalizer = MinMaxNormalizer::fit(features)?;
        let target_rows: Vec<[f64; 1]> = targets.iter().map(|&t| [t]).collect();
        let target_normalizer = MinMaxNormalizer::fit(&target_rows)?;
        let normalized: Vec<Vec<f64>> = features.iter().map(|x| feature_normalizer.apply(x)).collect();
        let pca = PcaModel::fit(&normalized, k)?;
        Self::from_parts(feature_normalizer, target_normalizer, pca)
    }

    pub fn from_parts(
        feature_normalizer: MinMaxNormalizer,
        target_normalizer: MinMaxNormalizer,
        pca: PcaModel,
    ) -> Result<Self, TransformError> {
        if feature_normalizer.dim() != FEATURE_COUNT || pca.input_dim() != FEATURE_COUNT {
            return Err(TransformError::Argument(format!(
                "pipeline expects {FEATURE_COUNT} input features"
            )));
        }
        if target_normalizer.dim() != 1 {
            return Err(TransformError::Argument("target normalizer must be one-dimensional".into()));
        }
        let mut jacobian = Vec::with_capacity(pca.n_components() * FEATURE_COUNT);
        for row in pca.components() {
            for j in 0..FEATURE_COUNT {
                jacobian.push(row[j] / pca.scale()[j] * feature_normalizer.slope(j));
            }
        }
        Ok(Self {
            feature_normalizer,
            target_normalizer,
            pca,
            jacobian,
        })
    }

    pub fn feature_normalizer(&self) -> &MinMaxNormalizer {
        &self.feature_normalizer
    }

    pub fn target_normalizer(&self) -> &MinMaxNormalizer {
        &self.target_normalizer
    }

    pub fn pca(&self) -> &PcaModel {
        &self.pca
    }

    pub fn n_components(&self) -> usize {
        self.pca.n_components()
    }

    pub fn forward(&self, x: &[f64; FEATURE_COUNT]) -> Result<Vec<f64>, TransformError> {
        if let Some(j) = x.iter().position(|v| !v.is_finite()) {
            return Err(TransformError::Argument(format!("feature {j} is not finite")));
        }
        Ok(self.forward_unchecked(x))
    }

    pub(crate) fn forward_unchecked(&self, x: &[f64; FEATURE_COUNT]) -> Vec<f64> {
        self.pca.apply(&self.feature_normalizer.apply(x))
    }

    /// Approximate inverse of [`forward`](Self::forward): component
    /// transpose, then min-max inversion. Exact only within the retained span.
    pub fn inverse(&self, scores: &[f64]) -> [f64; FEATURE_COUNT] {
        let normalized = self.pca.reconstruct(scores);
        let raw = self.feature_normalizer.invert(&normalized);
        let mut out = [0.0; FEATURE_COUNT];
        out.copy_from_slice(&raw);
        out
    }

    /// Row-major `k × 48` Jacobian of `forward`.
    pub fn jacobian(&self) -> &[f64] {
        &self.jacobian
    }

    /// `Jᵀ v` for a vector `v` in component space.
    pub fn jacobian_transpose_mul(&self, v: &[f64]) -> [f64; FEATURE_COUNT] {
        let mut out = [0.0; FEATURE_COUNT];
        for (c, &vc) in v.iter().enumerate() {
            let row = &self.jacobian[c * FEATURE_COUNT..(c + 1) * FEATURE_COUNT];
            for (o, r) in out.iter_mut().zip(row) {
                *o += r * vc;
            }
        }
        out
    }

    pub fn normalize_target(&self, ortg: f64) -> f64 {
        self.target_normalizer.apply_dim(0, ortg)
    }

    pub fn denormalize_target(&self, normalized: f64) -> f64 {
        self.target_normalizer.invert_dim(0, normalized)
    }

    /// `ortg_max - ortg_min` of the fitted target normalizer.
    pub fn target_range(&self) -> f64 {
        self.target_normalizer.range(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_rows(seed: u64, n: usize) -> (Vec<[f64; FEATURE_COUNT]>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs = (0..n)
            .map(|_| {
                let mut x = [0.0; FEATURE_COUNT];
                x.iter_mut().for_each(|v| *v = rng.random_range(0.0..0.3));
                x
            })
            .collect();
        let ys = (0..n).map(|_| rng.random_range(100.0..120.0)).collect();
        (xs, ys)
    }

    #[test]
    fn training_minimum_maps_to_centered_zero() {
        let (xs, ys) = random_rows(3, 60);
        let p = TransformPipeline::fit(&xs, &ys, 18).unwrap();
        let mut lo = [0.0; FEATURE_COUNT];
        lo.copy_from_slice(p.feature_normalizer().min());
        assert!(p.feature_normalizer().apply(&lo).iter().all(|v| *v == 0.0));
        let expected: Vec<f64> = p
            .pca()
            .components()
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(j, c)| c * (0.0 - p.pca().mean()[j]) / p.pca().scale()[j])
                    .sum()
            })
            .collect();
        let got = p.forward(&lo).unwrap();
        for (a, b) in got.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn forward_is_affine_with_cached_jacobian() {
        let (xs, ys) = random_rows(4, 80);
        let p = TransformPipeline::fit(&xs, &ys, 18).unwrap();
        let k = p.n_components();
        for pair in xs.windows(2).take(20) {
            let fa = p.forward(&pair[0]).unwrap();
            let fb = p.forward(&pair[1]).unwrap();
            for c in 0..k {
                let jd: f64 = (0..FEATURE_COUNT)
                    .map(|j| p.jacobian()[c * FEATURE_COUNT + j] * (pair[0][j] - pair[1][j]))
                    .sum();
                assert!((fa[c] - fb[c] - jd).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn null_space_direction_is_invisible() {
        let (xs, ys) = random_rows(8, 80);
        let p = TransformPipeline::fit(&xs, &ys, 18).unwrap();
        // Build a direction orthogonal (in standardized coordinates) to all
        // retained components, then map it back to raw feature units.
        let mut z = [0.0; FEATURE_COUNT];
        z[5] = 1.0;
        z[30] = -0.5;
        for row in p.pca().components() {
            let dot: f64 = row.iter().zip(&z).map(|(a, b)| a * b).sum();
            for (zi, r) in z.iter_mut().zip(row) {
                *zi -= dot * r;
            }
        }
        let base = xs[0];
        let mut moved = base;
        for j in 0..FEATURE_COUNT {
            let raw_step = z[j] * p.pca().scale()[j] * p.feature_normalizer().range(j);
            moved[j] += 1e-3 * raw_step;
        }
        let a = p.forward(&base).unwrap();
        let b = p.forward(&moved).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn reconstruction_error_matches_truncation() {
        let (xs, ys) = random_rows(12, 100);
        let full = TransformPipeline::fit(&xs, &ys, 48).unwrap();
        for x in xs.iter().take(10) {
            let back = full.inverse(&full.forward(x).unwrap());
            for (a, b) in back.iter().zip(x) {
                assert!((a - b).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn rejects_non_finite_input() {
        let (xs, ys) = random_rows(1, 30);
        let p = TransformPipeline::fit(&xs, &ys, 5).unwrap();
        let mut bad = xs[0];
        bad[7] = f64::INFINITY;
        assert!(p.forward(&bad).is_err());
    }
}
