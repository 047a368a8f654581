use nalgebra::DMatrix;

use super::TransformError;

/// Principal component projection of standardized samples.
///
/// Samples are centered and divided by their per-dimension sample standard
/// deviation (a zero deviation is replaced by 1), then projected onto the
/// top `k` right singular vectors of the standardized sample matrix.
/// Each component row is flipped so its largest-magnitude entry is
/// nonnegative, which makes the fit reproducible bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    mean: Vec<f64>,
    scale: Vec<f64>,
    /// k rows of length d, orthonormal.
    components: Vec<Vec<f64>>,
    explained_variance: Vec<f64>,
}

impl PcaModel {
    pub fn fit<S: AsRef<[f64]>>(samples: &[S], k: usize) -> Result<Self, TransformError> {
        let n = samples.len();
        let d = samples.first().map(|s| s.as_ref().len()).unwrap_or(0);
        if d == 0 {
            return Err(TransformError::Fit("no samples to fit PCA".into()));
        }
        if k == 0 || k > d {
            return Err(TransformError::Fit(format!("component count {k} must be in [1, {d}]")));
        }
        if k >= n {
            return Err(TransformError::Fit(format!(
                "component count {k} requires more than {k} samples, got {n}"
            )));
        }
        for (i, s) in samples.iter().enumerate() {
            let s = s.as_ref();
            if s.len() != d {
                return Err(TransformError::Fit(format!("sample {i} has dimension {}, expected {d}", s.len())));
            }
            if s.iter().any(|v| !v.is_finite()) {
                return Err(TransformError::Fit(format!("sample {i} has a non-finite value")));
            }
        }

        let mut mean = vec![0.0; d];
        for s in samples {
            for (m, v) in mean.iter_mut().zip(s.as_ref()) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        let mut scale = vec![0.0; d];
        for s in samples {
            for ((acc, v), m) in scale.iter_mut().zip(s.as_ref()).zip(&mean) {
                *acc += (v - m) * (v - m);
            }
        }
        for (sd, m) in scale.iter_mut().zip(&mean) {
            *sd = (*sd / (n - 1) as f64).sqrt();
            // a constant column only shows rounding noise around its mean
            if *sd <= 1e-12 * m.abs().max(1.0) {
                *sd = 1.0;
            }
        }

        let z = DMatrix::from_fn(n, d, |i, j| (samples[i].as_ref()[j] - mean[j]) / scale[j]);
        let svd = z.svd(false, true);
        let v_t = svd
            .v_t
            .ok_or_else(|| TransformError::Fit("singular value decomposition failed".into()))?;
        let singular = svd.singular_values;

        let mut order: Vec<usize> = (0..singular.len()).collect();
        order.sort_by(|&a, &b| singular[b].total_cmp(&singular[a]).then(a.cmp(&b)));

        let mut components = Vec::with_capacity(k);
        let mut explained_variance = Vec::with_capacity(k);
        for &idx in order.iter().take(k) {
            let mut row: Vec<f64> = v_t.row(idx).iter().copied().collect();
            let mut pivot = 0;
            for j in 1..d {
                if row[j].abs() > row[pivot].abs() {
                    pivot = j;
                }
            }
            if row[pivot] < 0.0 {
                row.iter_mut().for_each(|v| *v = -*v);
            }
            components.push(row);
            explained_variance.push(singular[idx] * singular[idx] / (n - 1) as f64);
        }
        // Fewer singular values than requested components cannot happen with
        // k < n and k <= d, since the thin SVD returns min(n, d) of them.
        debug_assert_eq!(components.len(), k);

        Ok(Self {
            mean,
            scale,
            components,
            explained_variance,
        })
    }

    pub fn from_parts(
        mean: Vec<f64>,
        scale: Vec<f64>,
        components: Vec<Vec<f64>>,
        explained_variance: Vec<f64>,
    ) -> Result<Self, TransformError> {
        let d = mean.len();
        let bad = d == 0
            || scale.len() != d
            || components.is_empty()
            || components.len() > d
            || components.iter().any(|r| r.len() != d)
            || explained_variance.len() != components.len()
            || scale.iter().any(|s| !(s.is_finite() && *s > 0.0))
            || mean.iter().chain(components.iter().flatten()).chain(&explained_variance).any(|v| !v.is_finite());
        if bad {
            return Err(TransformError::Argument("inconsistent PCA parameters".into()));
        }
        Ok(Self {
            mean,
            scale,
            components,
            explained_variance,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn explained_variance(&self) -> &[f64] {
        &self.explained_variance
    }

    /// Scores of `x` on the retained components.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let z: Vec<f64> = x
            .iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect();
        self.components
            .iter()
            .map(|row| row.iter().zip(&z).map(|(c, v)| c * v).sum())
            .collect()
    }

    /// Map scores back to the input space through the component transpose.
    pub fn reconstruct(&self, scores: &[f64]) -> Vec<f64> {
        let d = self.input_dim();
        let mut z = vec![0.0; d];
        for (row, s) in self.components.iter().zip(scores) {
            for (acc, c) in z.iter_mut().zip(row) {
                *acc += c * s;
            }
        }
        z.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| v * s + m)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_samples(seed: u64, n: usize, d: usize) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| (0..d).map(|j| rng.random_range(-1.0..1.0) * (1.0 + j as f64 * 0.1)).collect())
            .collect()
    }

    #[test]
    fn collinear_points_give_diagonal_component() {
        let samples: Vec<[f64; 2]> = (0..6).map(|i| [i as f64, i as f64]).collect();
        let pca = PcaModel::fit(&samples, 1).unwrap();
        let c = &pca.components()[0];
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((c[0] - h).abs() < 1e-12 && (c[1] - h).abs() < 1e-12, "{c:?}");
        // z-scored collinear data: all variance (2 = trace) on the first component
        assert!((pca.explained_variance()[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn full_rank_round_trip() {
        let samples = random_samples(11, 80, 48);
        let pca = PcaModel::fit(&samples, 48).unwrap();
        for s in &samples {
            let back = pca.reconstruct(&pca.apply(s));
            for (a, b) in back.iter().zip(s) {
                assert!((a - b).abs() <= 1e-8);
            }
        }
        let total: f64 = pca.explained_variance().iter().sum();
        assert!((total - 48.0).abs() < 1e-6, "{total}");
    }

    #[test]
    fn components_are_orthonormal_and_sorted() {
        let samples = random_samples(5, 60, 12);
        let pca = PcaModel::fit(&samples, 7).unwrap();
        let c = pca.components();
        for i in 0..c.len() {
            for j in 0..c.len() {
                let dot: f64 = c[i].iter().zip(&c[j]).map(|(a, b)| a * b).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() <= 1e-9);
            }
            let pivot = c[i].iter().cloned().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
            assert!(pivot >= 0.0);
        }
        assert!(pca.explained_variance().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn row_permutation_does_not_change_fit() {
        let samples = random_samples(21, 50, 10);
        let a = PcaModel::fit(&samples, 5).unwrap();
        let mut shuffled = samples.clone();
        shuffled.reverse();
        shuffled.swap(3, 17);
        let b = PcaModel::fit(&shuffled, 5).unwrap();
        for (ra, rb) in a.components().iter().zip(b.components()) {
            for (x, y) in ra.iter().zip(rb) {
                assert!((x - y).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn zero_variance_feature_scaled_by_one() {
        let mut samples = random_samples(2, 30, 4);
        for s in &mut samples {
            s[2] = 0.7;
        }
        let pca = PcaModel::fit(&samples, 2).unwrap();
        assert_eq!(pca.scale()[2], 1.0);
        for row in pca.components() {
            assert!(row[2].abs() < 1e-12);
        }
    }

    #[test]
    fn argument_checks() {
        let samples = random_samples(1, 10, 4);
        assert!(PcaModel::fit(&samples, 0).is_err());
        assert!(PcaModel::fit(&samples, 5).is_err());
        let few = random_samples(1, 3, 4);
        assert!(PcaModel::fit(&few, 3).is_err());
        assert!(PcaModel::fit(&few, 2).is_ok());
    }
}
