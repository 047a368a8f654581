//! Full-batch MLP training with Adam and seeded restarts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::mlp::{check_sizes, layer_spans, relu, LayerSpan, MlpModel};
use super::ModelError;
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub seed: u64,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub plateau_tolerance: f64,
    pub plateau_patience: usize,
    pub restarts: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            learning_rate: 1e-3,
            max_epochs: 2000,
            plateau_tolerance: 1e-6,
            plateau_patience: 50,
            restarts: 5,
        }
    }
}

impl TrainConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let ok = self.learning_rate.is_finite()
            && self.learning_rate > 0.0
            && self.max_epochs > 0
            && self.plateau_tolerance.is_finite()
            && self.plateau_tolerance > 0.0
            && self.plateau_patience > 0
            && self.restarts > 0;
        if ok {
            Ok(())
        } else {
            Err(ModelError::Argument(format!("training configuration must be positive: {self:?}")))
        }
    }
}

/// Result of [`mlp_train`].
#[derive(Debug, Clone, PartialEq)]
pub struct MlpFit {
    pub model: MlpModel,
    /// Mean squared error of `model` on the training set.
    pub final_loss: f64,
    /// Index of the restart that produced `model`.
    pub restart: usize,
    pub epochs: usize,
    /// Final loss of every restart, `None` where training diverged.
    pub restart_losses: Vec<Option<f64>>,
    /// Loss recorded at every epoch of the winning restart.
    pub loss_history: Vec<f64>,
}

/// Inputs stored feature-major (`cols[j * n + i]` is feature `j` of sample `i`)
/// so every per-unit operation runs over a contiguous sample column.
struct Batch {
    n: usize,
    cols: Vec<f64>,
    targets: Vec<f64>,
}

impl Batch {
    fn new<S: AsRef<[f64]>>(inputs: &[S], targets: &[f64], dim: usize) -> Result<Self, ModelError> {
        let n = inputs.len();
        if n < 2 {
            return Err(ModelError::Fit(format!("MLP training needs at least 2 samples, got {n}")));
        }
        if targets.len() != n {
            return Err(ModelError::Fit(format!("{n} inputs but {} targets", targets.len())));
        }
        let mut cols = vec![0.0; n * dim];
        for (i, x) in inputs.iter().enumerate() {
            let x = x.as_ref();
            if x.len() != dim || x.iter().any(|v| !v.is_finite()) {
                return Err(ModelError::Fit(format!("input {i} has wrong dimension or non-finite values")));
            }
            for (j, v) in x.iter().enumerate() {
                cols[j * n + i] = *v;
            }
        }
        if targets.iter().any(|t| !t.is_finite()) {
            return Err(ModelError::Fit("non-finite target".into()));
        }
        Ok(Self {
            n,
            cols,
            targets: targets.to_vec(),
        })
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let (ca, ra) = a.split_at(a.len() - a.len() % 4);
    let (cb, rb) = b.split_at(ca.len());
    for (x, y) in ca.chunks_exact(4).zip(cb.chunks_exact(4)) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
fn sum(a: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let (c, r) = a.split_at(a.len() - a.len() % 4);
    for x in c.chunks_exact(4) {
        acc[0] += x[0];
        acc[1] += x[1];
        acc[2] += x[2];
        acc[3] += x[3];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + r.iter().sum::<f64>()
}

/// Scratch buffers for one forward/backward pass over a batch.
struct Workspace {
    spans: Vec<LayerSpan>,
    /// Pre-activations per layer, `outputs × n`.
    pre: Vec<Vec<f64>>,
    /// Post-activations per hidden layer, `outputs × n`.
    post: Vec<Vec<f64>>,
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
}

impl Workspace {
    fn new(sizes: &[usize], n: usize) -> Self {
        let spans = layer_spans(sizes);
        let widest = sizes.iter().copied().max().unwrap_or(1);
        Self {
            pre: spans.iter().map(|s| vec![0.0; s.outputs * n]).collect(),
            post: spans.iter().map(|s| vec![0.0; s.outputs * n]).collect(),
            spans,
            delta: vec![0.0; widest * n],
            delta_prev: vec![0.0; widest * n],
        }
    }
}

/// Mean squared error over the batch; fills `grad` (same layout as the
/// parameters) when given.
fn loss_and_gradient(params: &[f64], batch: &Batch, ws: &mut Workspace, grad: Option<&mut [f64]>) -> f64 {
    let n = batch.n;
    let last = ws.spans.len() - 1;
    for l in 0..ws.spans.len() {
        let span = ws.spans[l];
        let (done, rest) = ws.post.split_at_mut(l);
        let input: &[f64] = if l == 0 { &batch.cols } else { &done[l - 1] };
        let z = &mut ws.pre[l];
        for o in 0..span.outputs {
            let zo = &mut z[o * n..(o + 1) * n];
            zo.fill(params[span.biases + o]);
            for j in 0..span.inputs {
                let w = params[span.weights + o * span.inputs + j];
                let col = &input[j * n..(j + 1) * n];
                for (zi, ci) in zo.iter_mut().zip(col) {
                    *zi += w * ci;
                }
            }
        }
        if l != last {
            for (a, zv) in rest[0].iter_mut().zip(z.iter()) {
                *a = relu(*zv);
            }
        }
    }

    let output = &ws.pre[last][..n];
    let scale = 2.0 / n as f64;
    let mut loss = 0.0;
    for (i, (o, t)) in output.iter().zip(&batch.targets).enumerate() {
        let e = o - t;
        loss += e * e;
        ws.delta[i] = scale * e;
    }
    loss /= n as f64;

    let Some(grad) = grad else {
        return loss;
    };
    for l in (0..ws.spans.len()).rev() {
        let span = ws.spans[l];
        let input: &[f64] = if l == 0 { &batch.cols } else { &ws.post[l - 1] };
        for o in 0..span.outputs {
            let d = &ws.delta[o * n..(o + 1) * n];
            for j in 0..span.inputs {
                grad[span.weights + o * span.inputs + j] = dot(d, &input[j * n..(j + 1) * n]);
            }
            grad[span.biases + o] = sum(d);
        }
        if l == 0 {
            break;
        }
        let prev_pre = &ws.pre[l - 1];
        let dp = &mut ws.delta_prev[..span.inputs * n];
        dp.fill(0.0);
        for o in 0..span.outputs {
            let d = &ws.delta[o * n..(o + 1) * n];
            for j in 0..span.inputs {
                let w = params[span.weights + o * span.inputs + j];
                for (p, di) in dp[j * n..(j + 1) * n].iter_mut().zip(d) {
                    *p += w * di;
                }
            }
        }
        for (p, z) in dp.iter_mut().zip(&prev_pre[..span.inputs * n]) {
            if *z <= 0.0 {
                *p = 0.0;
            }
        }
        std::mem::swap(&mut ws.delta, &mut ws.delta_prev);
    }
    loss
}

/// Training mean squared error of `model` on `(inputs, targets)`.
pub fn mse_loss<S: AsRef<[f64]>>(model: &MlpModel, inputs: &[S], targets: &[f64]) -> Result<f64, ModelError> {
    let batch = Batch::new(inputs, targets, model.input_dim())?;
    let mut ws = Workspace::new(model.layer_sizes(), batch.n);
    Ok(loss_and_gradient(model.params(), &batch, &mut ws, None))
}

/// Training loss and its gradient with respect to the flat parameters.
pub fn mse_gradient<S: AsRef<[f64]>>(
    model: &MlpModel,
    inputs: &[S],
    targets: &[f64],
) -> Result<(f64, Vec<f64>), ModelError> {
    let batch = Batch::new(inputs, targets, model.input_dim())?;
    let mut ws = Workspace::new(model.layer_sizes(), batch.n);
    let mut grad = vec![0.0; model.parameter_count()];
    let loss = loss_and_gradient(model.params(), &batch, &mut ws, Some(&mut grad));
    Ok((loss, grad))
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

struct RestartOutcome {
    model: MlpModel,
    final_loss: f64,
    epochs: usize,
    history: Vec<f64>,
}

fn train_once(sizes: &[usize], batch: &Batch, cfg: &TrainConfig, restart: usize) -> Result<RestartOutcome, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(cfg.seed, restart as u64));
    let mut model = MlpModel::glorot(sizes.to_vec(), &mut rng).map_err(|e| e.to_string())?;
    let count = model.parameter_count();
    let mut ws = Workspace::new(sizes, batch.n);
    let mut grad = vec![0.0; count];
    let mut m = vec![0.0; count];
    let mut v = vec![0.0; count];
    let mut history = Vec::with_capacity(cfg.max_epochs.min(4096));
    let mut b1t = 1.0;
    let mut b2t = 1.0;

    let mut plateaued = false;
    for epoch in 0..cfg.max_epochs {
        let loss = loss_and_gradient(model.params(), batch, &mut ws, Some(&mut grad));
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(format!("non-finite loss at epoch {epoch}"));
        }
        history.push(loss);
        if epoch >= cfg.plateau_patience && history[epoch - cfg.plateau_patience] - loss < cfg.plateau_tolerance {
            plateaued = true;
            break;
        }
        b1t *= BETA1;
        b2t *= BETA2;
        for (((p, g), mi), vi) in model.params_mut().iter_mut().zip(&grad).zip(&mut m).zip(&mut v) {
            *mi = BETA1 * *mi + (1.0 - BETA1) * g;
            *vi = BETA2 * *vi + (1.0 - BETA2) * g * g;
            let m_hat = *mi / (1.0 - b1t);
            let v_hat = *vi / (1.0 - b2t);
            *p -= cfg.learning_rate * m_hat / (v_hat.sqrt() + ADAM_EPS);
        }
    }
    let epochs = history.len();
    let final_loss = if plateaued {
        *history.last().unwrap()
    } else {
        loss_and_gradient(model.params(), batch, &mut ws, None)
    };
    if !final_loss.is_finite() || model.params().iter().any(|p| !p.is_finite()) {
        return Err("training diverged".into());
    }
    Ok(RestartOutcome {
        model,
        final_loss,
        epochs,
        history,
    })
}

/// Train an MLP with layer sizes `shape` (input dimension first, 1 last) by
/// minimizing mean squared error with full-batch Adam.
///
/// Each of `cfg.restarts` restarts draws its own Glorot initialization from a
/// stream derived from `cfg.seed` and the restart index, and stops after
/// `cfg.max_epochs` epochs or once the loss improved by less than
/// `cfg.plateau_tolerance` over the last `cfg.plateau_patience` epochs. The
/// restart with the lowest final loss wins; diverged restarts are skipped.
pub fn mlp_train<S: AsRef<[f64]>>(
    inputs: &[S],
    targets: &[f64],
    shape: &[usize],
    cfg: &TrainConfig,
) -> Result<MlpFit, ModelError> {
    check_sizes(shape)?;
    cfg.validate()?;
    let batch = Batch::new(inputs, targets, shape[0])?;

    let mut best: Option<(usize, RestartOutcome)> = None;
    let mut restart_losses = Vec::with_capacity(cfg.restarts);
    let mut failures = Vec::new();
    for r in 0..cfg.restarts {
        match train_once(shape, &batch, cfg, r) {
            Ok(outcome) => {
                restart_losses.push(Some(outcome.final_loss));
                if best.as_ref().is_none_or(|(_, b)| outcome.final_loss < b.final_loss) {
                    best = Some((r, outcome));
                }
            }
            Err(msg) => {
                restart_losses.push(None);
                failures.push(format!("restart {r}: {msg}"));
            }
        }
    }
    let (restart, outcome) =
        best.ok_or_else(|| ModelError::Training(format!("all restarts aborted ({})", failures.join("; "))))?;
    Ok(MlpFit {
        model: outcome.model,
        final_loss: outcome.final_loss,
        restart,
        epochs: outcome.epochs,
        restart_losses,
        loss_history: outcome.history,
    })
}
