use nalgebra::{DMatrix, DVector};

use super::ModelError;

/// `predict(x) = Σ wᵢ xᵢ + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    weights: Vec<f64>,
    bias: f64,
}

impl LinearModel {
    pub fn new(weights: Vec<f64>, bias: f64) -> Result<Self, ModelError> {
        if weights.is_empty() || weights.iter().chain([&bias]).any(|v| !v.is_finite()) {
            return Err(ModelError::Argument("linear coefficients must be nonempty and finite".into()));
        }
        Ok(Self { weights, bias })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn input_dim(&self) -> usize {
        self.weights.len()
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.weights.len());
        let mut acc = 0.0;
        for (w, v) in self.weights.iter().zip(x) {
            acc += w * v;
        }
        acc + self.bias
    }
}

/// Least-squares fit with an unpenalized intercept.
///
/// Inputs and targets are centered, the weights are the minimum-norm
/// solution of the centered problem (SVD with a relative rank cutoff), and
/// the bias restores the means. Rank-deficient inputs therefore still fit.
pub fn fit_linear_least_squares<S: AsRef<[f64]>>(inputs: &[S], targets: &[f64]) -> Result<LinearModel, ModelError> {
    let n = inputs.len();
    if n < 2 {
        return Err(ModelError::Fit(format!("least squares needs at least 2 samples, got {n}")));
    }
    if targets.len() != n {
        return Err(ModelError::Fit(format!("{n} inputs but {} targets", targets.len())));
    }
    let d = inputs[0].as_ref().len();
    if d == 0 {
        return Err(ModelError::Fit("zero-dimensional inputs".into()));
    }
    for (i, x) in inputs.iter().enumerate() {
        let x = x.as_ref();
        if x.len() != d || x.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::Fit(format!("input {i} has wrong dimension or non-finite values")));
        }
    }
    if targets.iter().any(|t| !t.is_finite()) {
        return Err(ModelError::Fit("non-finite target".into()));
    }

    let mut x_mean = vec![0.0; d];
    for x in inputs {
        for (m, v) in x_mean.iter_mut().zip(x.as_ref()) {
            *m += v;
        }
    }
    x_mean.iter_mut().for_each(|m| *m /= n as f64);
    let y_mean = targets.iter().sum::<f64>() / n as f64;

    let a = DMatrix::from_fn(n, d, |i, j| inputs[i].as_ref()[j] - x_mean[j]);
    let b = DVector::from_iterator(n, targets.iter().map(|t| t - y_mean));
    let svd = a.svd(true, true);
    let s_max = svd.singular_values.max();
    let weights: Vec<f64> = if s_max == 0.0 {
        vec![0.0; d]
    } else {
        let eps = s_max * n.max(d) as f64 * f64::EPSILON;
        svd.solve(&b, eps)
            .map_err(|e| ModelError::Fit(e.to_string()))?
            .iter()
            .copied()
            .collect()
    };
    let bias = y_mean - weights.iter().zip(&x_mean).map(|(w, m)| w * m).sum::<f64>();
    LinearModel::new(weights, bias)
}
