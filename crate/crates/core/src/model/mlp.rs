use rand::Rng;

use super::ModelError;

/// Fully connected regressor: rectifier on every hidden layer, identity on
/// the single output.
///
/// Parameters live in one flat buffer, layer by layer, each layer's
/// `outputs × inputs` weight block (row-major) followed by its biases.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

/// Offsets of one layer inside the flat parameter buffer.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LayerSpan {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: usize,
    pub biases: usize,
}

pub(crate) fn layer_spans(sizes: &[usize]) -> Vec<LayerSpan> {
    let mut offset = 0;
    sizes
        .windows(2)
        .map(|w| {
            let span = LayerSpan {
                inputs: w[0],
                outputs: w[1],
                weights: offset,
                biases: offset + w[0] * w[1],
            };
            offset += w[0] * w[1] + w[1];
            span
        })
        .collect()
}

pub(crate) fn parameter_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

pub(crate) fn check_sizes(sizes: &[usize]) -> Result<(), ModelError> {
    if sizes.len() < 2 || sizes.iter().any(|&s| s == 0) || *sizes.last().unwrap() != 1 {
        return Err(ModelError::Argument(format!(
            "layer sizes {sizes:?} must be positive, at least two long, and end at 1"
        )));
    }
    Ok(())
}

#[inline]
pub(crate) fn relu(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        0.0
    }
}

impl MlpModel {
    pub fn from_flat(sizes: Vec<usize>, params: Vec<f64>) -> Result<Self, ModelError> {
        check_sizes(&sizes)?;
        if params.len() != parameter_count(&sizes) {
            return Err(ModelError::Argument(format!(
                "layer sizes {sizes:?} need {} parameters, got {}",
                parameter_count(&sizes),
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(ModelError::Argument("non-finite MLP parameter".into()));
        }
        Ok(Self { sizes, params })
    }

    /// Build from per-layer weight matrices (`outputs` rows of `inputs`
    /// entries) and bias vectors.
    pub fn from_layers(sizes: Vec<usize>, weights: &[Vec<Vec<f64>>], biases: &[Vec<f64>]) -> Result<Self, ModelError> {
        check_sizes(&sizes)?;
        let spans = layer_spans(&sizes);
        if weights.len() != spans.len() || biases.len() != spans.len() {
            return Err(ModelError::Argument("layer count does not match layer sizes".into()));
        }
        let mut params = Vec::with_capacity(parameter_count(&sizes));
        for ((span, w), b) in spans.iter().zip(weights).zip(biases) {
            if w.len() != span.outputs || w.iter().any(|r| r.len() != span.inputs) || b.len() != span.outputs {
                return Err(ModelError::Argument(format!(
                    "layer {}→{} has mismatched parameter shapes",
                    span.inputs, span.outputs
                )));
            }
            params.extend(w.iter().flatten());
            params.extend(b);
        }
        Self::from_flat(sizes, params)
    }

    pub fn zeros(sizes: Vec<usize>) -> Result<Self, ModelError> {
        check_sizes(&sizes)?;
        let n = parameter_count(&sizes);
        Self::from_flat(sizes, vec![0.0; n])
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot<R: Rng>(sizes: Vec<usize>, rng: &mut R) -> Result<Self, ModelError> {
        check_sizes(&sizes)?;
        let mut params = vec![0.0; parameter_count(&sizes)];
        for span in layer_spans(&sizes) {
            let limit = (6.0 / (span.inputs + span.outputs) as f64).sqrt();
            for w in &mut params[span.weights..span.biases] {
                *w = rng.random_range(-limit..limit);
            }
        }
        Ok(Self { sizes, params })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn hidden_sizes(&self) -> &[usize] {
        &self.sizes[1..self.sizes.len() - 1]
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub(crate) fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn parameter_count(&self) -> usize {
        self.params.len()
    }

    /// Weight matrix of `layer` as rows.
    pub fn layer_weights(&self, layer: usize) -> Vec<Vec<f64>> {
        let span = layer_spans(&self.sizes)[layer];
        self.params[span.weights..span.biases]
            .chunks(span.inputs)
            .map(<[f64]>::to_vec)
            .collect()
    }

    pub fn layer_biases(&self, layer: usize) -> Vec<f64> {
        let span = layer_spans(&self.sizes)[layer];
        self.params[span.biases..span.biases + span.outputs].to_vec()
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64, ModelError> {
        if x.len() != self.input_dim() {
            return Err(ModelError::Argument(format!(
                "input has dimension {}, network expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        Ok(self.forward_unchecked(x))
    }

    pub(crate) fn forward_unchecked(&self, x: &[f64]) -> f64 {
        let spans = layer_spans(&self.sizes);
        let last = spans.len() - 1;
        let mut current = x.to_vec();
        for (l, span) in spans.iter().enumerate() {
            let mut next = Vec::with_capacity(span.outputs);
            for o in 0..span.outputs {
                let row = &self.params[span.weights + o * span.inputs..span.weights + (o + 1) * span.inputs];
                let mut z = self.params[span.biases + o];
                for (w, a) in row.iter().zip(&current) {
                    z += w * a;
                }
                next.push(if l == last { z } else { relu(z) });
            }
            current = next;
        }
        current[0]
    }

    /// Gradient of the output with respect to the input. The rectifier's
    /// derivative at exactly zero is taken as zero.
    pub fn input_gradient(&self, x: &[f64]) -> Vec<f64> {
        let spans = layer_spans(&self.sizes);
        let last = spans.len() - 1;
        let mut activations = vec![x.to_vec()];
        let mut pre = Vec::with_capacity(spans.len());
        for (l, span) in spans.iter().enumerate() {
            let input = activations.last().unwrap();
            let mut z = vec![0.0; span.outputs];
            for (o, zo) in z.iter_mut().enumerate() {
                let row = &self.params[span.weights + o * span.inputs..span.weights + (o + 1) * span.inputs];
                *zo = self.params[span.biases + o] + row.iter().zip(input).map(|(w, a)| w * a).sum::<f64>();
            }
            let a = if l == last { z.clone() } else { z.iter().map(|&v| relu(v)).collect() };
            pre.push(z);
            activations.push(a);
        }
        let mut delta = vec![1.0];
        for l in (0..spans.len()).rev() {
            let span = spans[l];
            if l != last {
                for (d, z) in delta.iter_mut().zip(&pre[l]) {
                    if *z <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            let mut prev = vec![0.0; span.inputs];
            for (o, d) in delta.iter().enumerate() {
                let row = &self.params[span.weights + o * span.inputs..span.weights + (o + 1) * span.inputs];
                for (p, w) in prev.iter_mut().zip(row) {
                    *p += w * d;
                }
            }
            delta = prev;
        }
        delta
    }

    /// Product of the layers' spectral-norm upper bounds (Frobenius norms),
    /// a Lipschitz constant of the network.
    pub fn lipschitz_bound(&self) -> f64 {
        layer_spans(&self.sizes)
            .iter()
            .map(|s| self.params[s.weights..s.biases].iter().map(|w| w * w).sum::<f64>().sqrt())
            .product()
    }
}
