//! Feed-forward binary classifiers: `(p, 1)` linear or `(p, n1, n2, 1)` with
//! tanh hidden layers and a sigmoid output.
//!
//! Dropout is inverted: during training each hidden activation survives with
//! probability `1 - rate` and survivors are scaled by `1 / (1 - rate)`, so
//! inference runs the plain network. Masks are a pure function of
//! `(seed, epoch, batch, row, layer, unit)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::linear::{shuffled_batches, EarlyStopping, EpochLoss, TrainConfig, TrainTrace};
use crate::math;
use crate::matrix::{dot, Matrix};
use crate::rng;

pub const MAX_DROPOUT_RATE: f64 = 0.30;
pub const DEFAULT_DROPOUT_RATE: f64 = 0.20;

/// Fully connected layer; `weights` is row-major `(outputs, inputs)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl DenseLayer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { inputs, outputs, weights: vec![0.0; inputs * outputs], biases: vec![0.0; outputs] }
    }

    #[inline]
    fn weight_row(&self, out: usize) -> &[f64] {
        &self.weights[out * self.inputs..(out + 1) * self.inputs]
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MlpParams {
    pub layer_sizes: Vec<usize>,
    pub layers: Vec<DenseLayer>,
    pub dropout_rate: f64,
    pub l2_alpha: f64,
}

fn check_architecture(layer_sizes: &[usize], dropout_rate: f64, l2_alpha: f64) -> Result<()> {
    if layer_sizes.len() < 2 || layer_sizes.len() > 4 {
        return Err(Error::InvalidArchitecture(format!(
            "expected (p, 1) or (p, n1, n2, 1) layer sizes, got {layer_sizes:?}"
        )));
    }
    if layer_sizes.contains(&0) || *layer_sizes.last().unwrap() != 1 {
        return Err(Error::InvalidArchitecture(format!("layer sizes {layer_sizes:?} must be positive and end in 1")));
    }
    if !(0.0..=MAX_DROPOUT_RATE).contains(&dropout_rate) {
        return Err(Error::InvalidConfig(format!("dropout rate {dropout_rate} outside [0, {MAX_DROPOUT_RATE}]")));
    }
    if !(l2_alpha >= 0.0) || !l2_alpha.is_finite() {
        return Err(Error::InvalidConfig(format!("l2 alpha {l2_alpha} must be nonnegative")));
    }
    Ok(())
}

impl MlpParams {
    pub fn zeros(layer_sizes: &[usize], dropout_rate: f64, l2_alpha: f64) -> Result<Self> {
        check_architecture(layer_sizes, dropout_rate, l2_alpha)?;
        let layers = layer_sizes.windows(2).map(|w| DenseLayer::zeros(w[0], w[1])).collect();
        Ok(Self { layer_sizes: layer_sizes.to_vec(), layers, dropout_rate, l2_alpha })
    }

    /// Weights uniform in `±sqrt(6 / (fan_in + fan_out))`, biases zero.
    pub fn glorot(layer_sizes: &[usize], dropout_rate: f64, l2_alpha: f64, seed: u64) -> Result<Self> {
        let mut params = Self::zeros(layer_sizes, dropout_rate, l2_alpha)?;
        let mut rng = rng::seeded(seed);
        for layer in &mut params.layers {
            let limit = math::sqrt(6.0 / (layer.inputs + layer.outputs) as f64);
            for w in &mut layer.weights {
                *w = rng.random_range(-limit..limit);
            }
        }
        Ok(params)
    }

    pub fn input_width(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn hidden_layers(&self) -> usize {
        self.layers.len() - 1
    }

    /// Sum of squared weights over all layers, biases excluded.
    fn weight_norm_sq(&self) -> f64 {
        self.layers.iter().map(|l| dot(&l.weights, &l.weights)).sum()
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.input_width() {
            return Err(Error::DimensionMismatch { what: "design matrix width", expected: self.input_width(), found: x.cols() });
        }
        Ok(())
    }
}

/// Per-hidden-layer multipliers, row-major `(rows, units)`: 0 for dropped
/// units, `1 / (1 - rate)` for survivors.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMasks {
    pub layers: Vec<Matrix>,
}

impl DropoutMasks {
    pub fn draw(params: &MlpParams, rows: usize, seed: u64, epoch: u64, batch: u64) -> Self {
        let rate = params.dropout_rate;
        let keep_scale = 1.0 / (1.0 - rate);
        let layers = params.layers[..params.hidden_layers()]
            .iter()
            .enumerate()
            .map(|(l, layer)| {
                let mut m = Matrix::zeros(rows, layer.outputs);
                for r in 0..rows {
                    for u in 0..layer.outputs {
                        let keep = rate == 0.0 || rng::keyed_uniform(&[seed, epoch, batch, r as u64, l as u64, u as u64]) >= rate;
                        m.set(r, u, if keep { keep_scale } else { 0.0 });
                    }
                }
                m
            })
            .collect();
        Self { layers }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForwardMode {
    Train { seed: u64, epoch: u64, batch: u64 },
    Infer,
}

/// Activations kept for backpropagation.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache {
    /// tanh outputs of each hidden layer, before dropout.
    pub hidden_tanh: Vec<Matrix>,
    /// Hidden outputs after dropout; equal to `hidden_tanh` without masks.
    pub hidden: Vec<Matrix>,
    pub masks: Option<DropoutMasks>,
    pub logits: Vec<f64>,
    pub probabilities: Vec<f64>,
}

pub fn mlp_forward(params: &MlpParams, x: &Matrix, mode: ForwardMode) -> Result<ForwardCache> {
    match mode {
        ForwardMode::Infer => forward_with_masks(params, x, None),
        ForwardMode::Train { seed, epoch, batch } => {
            let masks = DropoutMasks::draw(params, x.rows(), seed, epoch, batch);
            forward_with_masks(params, x, Some(masks))
        }
    }
}

/// Forward pass with explicit (or no) dropout masks.
pub fn forward_with_masks(params: &MlpParams, x: &Matrix, masks: Option<DropoutMasks>) -> Result<ForwardCache> {
    params.check_input(x)?;
    if let Some(m) = &masks {
        if m.layers.len() != params.hidden_layers() {
            return Err(Error::DimensionMismatch { what: "dropout masks", expected: params.hidden_layers(), found: m.layers.len() });
        }
    }
    let n = x.rows();
    let mut hidden_tanh = Vec::with_capacity(params.hidden_layers());
    let mut hidden: Vec<Matrix> = Vec::with_capacity(params.hidden_layers());
    for (l, layer) in params.layers[..params.hidden_layers()].iter().enumerate() {
        let input = if l == 0 { x } else { &hidden[l - 1] };
        let mut t = Matrix::zeros(n, layer.outputs);
        for i in 0..n {
            let row = input.row(i);
            for u in 0..layer.outputs {
                t.set(i, u, math::tanh(dot(layer.weight_row(u), row) + layer.biases[u]));
            }
        }
        let a = match &masks {
            Some(m) => {
                let mask = &m.layers[l];
                if mask.rows() != n || mask.cols() != layer.outputs {
                    return Err(Error::DimensionMismatch { what: "dropout mask", expected: n * layer.outputs, found: mask.rows() * mask.cols() });
                }
                let mut a = t.clone();
                for i in 0..n {
                    for (v, s) in a.row_mut(i).iter_mut().zip(mask.row(i)) {
                        *v *= s;
                    }
                }
                a
            }
            None => t.clone(),
        };
        hidden_tanh.push(t);
        hidden.push(a);
    }
    let out = params.layers.last().unwrap();
    let last_input = hidden.last().unwrap_or(x);
    let logits: Vec<f64> = (0..n).map(|i| dot(out.weight_row(0), last_input.row(i)) + out.biases[0]).collect();
    let probabilities = logits.iter().map(|&z| math::sigmoid(z)).collect();
    Ok(ForwardCache { hidden_tanh, hidden, masks, logits, probabilities })
}

/// Mask-free inference probabilities.
pub fn mlp_predict(params: &MlpParams, x: &Matrix) -> Result<Vec<f64>> {
    Ok(forward_with_masks(params, x, None)?.probabilities)
}

/// Gradient of one layer, same layout as [`DenseLayer`].
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradient {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradients {
    pub loss: f64,
    pub layers: Vec<LayerGradient>,
}

fn check_targets(x: &Matrix, y: &[u8], sample_weights: &[f64]) -> Result<f64> {
    if y.len() != x.rows() {
        return Err(Error::DimensionMismatch { what: "labels", expected: x.rows(), found: y.len() });
    }
    if sample_weights.len() != y.len() {
        return Err(Error::DimensionMismatch { what: "sample weights", expected: y.len(), found: sample_weights.len() });
    }
    if let Some(&bad) = y.iter().find(|&&l| l > 1) {
        return Err(Error::InvalidLabel(bad));
    }
    if sample_weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::NegativeWeight);
    }
    let total: f64 = sample_weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::NegativeWeight);
    }
    Ok(total)
}

fn data_loss(cache: &ForwardCache, y: &[u8], sw: &[f64], total: f64) -> f64 {
    cache
        .logits
        .iter()
        .zip(y)
        .zip(sw)
        .map(|((&z, &t), &w)| w * math::logit_cross_entropy(z, f64::from(t)))
        .sum::<f64>()
        / total
}

/// Weighted mean cross-entropy plus `l2_alpha / 2 * sum ||W||^2` for a forward pass.
pub fn mlp_loss(params: &MlpParams, x: &Matrix, y: &[u8], sample_weights: &[f64], masks: Option<DropoutMasks>) -> Result<f64> {
    let total = check_targets(x, y, sample_weights)?;
    let cache = forward_with_masks(params, x, masks)?;
    Ok(data_loss(&cache, y, sample_weights, total) + 0.5 * params.l2_alpha * params.weight_norm_sq())
}

/// Data-term gradients only.
fn backprop_data(params: &MlpParams, x: &Matrix, y: &[u8], sw: &[f64], total: f64, cache: &ForwardCache) -> Vec<LayerGradient> {
    let mut grads: Vec<LayerGradient> = params
        .layers
        .iter()
        .map(|l| LayerGradient { weights: vec![0.0; l.weights.len()], biases: vec![0.0; l.outputs] })
        .collect();
    let n_layers = params.layers.len();
    let mut delta: Vec<f64> = Vec::new();
    let mut upstream: Vec<f64> = Vec::new();
    for i in 0..x.rows() {
        let c = sw[i] / total;
        delta.clear();
        delta.push(c * (cache.probabilities[i] - f64::from(y[i])));
        for l in (0..n_layers).rev() {
            let layer = &params.layers[l];
            let input = if l == 0 { x.row(i) } else { cache.hidden[l - 1].row(i) };
            let g = &mut grads[l];
            for (o, &d) in delta.iter().enumerate() {
                g.biases[o] += d;
                let gw = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (gv, &a) in gw.iter_mut().zip(input) {
                    *gv += d * a;
                }
            }
            if l == 0 {
                break;
            }
            // Back through dropout (constant mask) and tanh of layer l-1.
            upstream.clear();
            upstream.resize(layer.inputs, 0.0);
            for (o, &d) in delta.iter().enumerate() {
                for (u, &w) in upstream.iter_mut().zip(layer.weight_row(o)) {
                    *u += w * d;
                }
            }
            let t = cache.hidden_tanh[l - 1].row(i);
            let mask = cache.masks.as_ref().map(|m| m.layers[l - 1].row(i));
            delta.clear();
            for (k, &u) in upstream.iter().enumerate() {
                let s = mask.map_or(1.0, |m| m[k]);
                delta.push(u * s * (1.0 - t[k] * t[k]));
            }
        }
    }
    grads
}

/// Gradients of [`mlp_loss`] for the pass recorded in `cache`, masks held fixed.
pub fn mlp_backprop(params: &MlpParams, x: &Matrix, y: &[u8], sample_weights: &[f64], cache: &ForwardCache) -> Result<MlpGradients> {
    params.check_input(x)?;
    let total = check_targets(x, y, sample_weights)?;
    if cache.logits.len() != x.rows() {
        return Err(Error::DimensionMismatch { what: "forward cache", expected: x.rows(), found: cache.logits.len() });
    }
    if !x.is_finite() || cache.logits.iter().any(|z| !z.is_finite()) {
        return Err(Error::NonFinite("forward pass"));
    }
    let mut layers = backprop_data(params, x, y, sample_weights, total, cache);
    for (g, layer) in layers.iter_mut().zip(&params.layers) {
        for (gv, &w) in g.weights.iter_mut().zip(&layer.weights) {
            *gv += params.l2_alpha * w;
        }
    }
    let loss = data_loss(cache, y, sample_weights, total) + 0.5 * params.l2_alpha * params.weight_norm_sq();
    Ok(MlpGradients { loss, layers })
}

/// Mini-batch backpropagation from a seeded Glorot initialization, early
/// stopping on the mask-free validation objective. `hidden` is `[]` for the
/// linear classifier or `[n1, n2]`.
#[allow(clippy::too_many_arguments)]
pub fn train_mlp(
    hidden: &[usize],
    dropout_rate: f64,
    l2_alpha: f64,
    x_train: &Matrix,
    y_train: &[u8],
    config: &TrainConfig,
    x_val: &Matrix,
    y_val: &[u8],
) -> Result<(MlpParams, TrainTrace)> {
    config.validate()?;
    let mut sizes = Vec::with_capacity(hidden.len() + 2);
    sizes.push(x_train.cols());
    sizes.extend_from_slice(hidden);
    sizes.push(1);
    let init_seed = rng::derive_seed(&[config.seed, rng::label_hash("mlp-init")]);
    let mut params = MlpParams::glorot(&sizes, dropout_rate, l2_alpha, init_seed)?;
    params.check_input(x_val)?;
    if !x_train.is_finite() || !x_val.is_finite() {
        return Err(Error::NonFinite("design matrix"));
    }
    let cw = config.weights_for(y_train)?;
    let sw_train = cw.sample_weights(y_train);
    let sw_val = cw.sample_weights(y_val);
    check_targets(x_val, y_val, &sw_val)?;

    let mut best = params.clone();
    let mut trace = TrainTrace::default();
    let mut stopper = EarlyStopping::new(config.patience, mlp_loss(&params, x_val, y_val, &sw_val, None)?);
    let mut rng = rng::seeded(config.seed);
    let lr = config.learning_rate;
    let shrink = 1.0 / (1.0 + lr * l2_alpha);
    let mask_seed = rng::derive_seed(&[config.seed, rng::label_hash("dropout")]);

    for epoch in 0..config.max_epochs {
        for (b, batch) in shuffled_batches(x_train.rows(), config.batch_size, &mut rng).into_iter().enumerate() {
            let xb = x_train.select_rows(&batch);
            let yb: Vec<u8> = batch.iter().map(|&i| y_train[i]).collect();
            let swb: Vec<f64> = batch.iter().map(|&i| sw_train[i]).collect();
            let total: f64 = swb.iter().sum();
            if total <= 0.0 {
                continue;
            }
            let cache = mlp_forward(&params, &xb, ForwardMode::Train { seed: mask_seed, epoch: epoch as u64, batch: b as u64 })?;
            let grads = backprop_data(&params, &xb, &yb, &swb, total, &cache);
            for (layer, g) in params.layers.iter_mut().zip(&grads) {
                for (w, gw) in layer.weights.iter_mut().zip(&g.weights) {
                    *w = (*w - lr * gw) * shrink;
                }
                for (bv, gb) in layer.biases.iter_mut().zip(&g.biases) {
                    *bv -= lr * gb;
                }
            }
        }
        let train_loss = mlp_loss(&params, x_train, y_train, &sw_train, None)?;
        let validation_loss = mlp_loss(&params, x_val, y_val, &sw_val, None)?;
        if !train_loss.is_finite() || !validation_loss.is_finite() {
            return Err(Error::Diverged { epoch, learning_rate: lr });
        }
        trace.epochs.push(EpochLoss { epoch, train_loss, validation_loss });
        let (improved, stop) = stopper.observe(validation_loss);
        if improved {
            best = params.clone();
            trace.best_epoch = Some(epoch);
        }
        if stop {
            break;
        }
    }
    Ok((best, trace))
}

/// The `n1 x n2` hidden-layer grid, `n1` outermost.
pub fn node_grid(n1: &[usize], n2: &[usize]) -> Vec<[usize; 2]> {
    n1.iter().flat_map(|&a| n2.iter().map(move |&b| [a, b])).collect()
}

pub const DEFAULT_N1: [usize; 5] = [5, 10, 15, 20, 30];
pub const DEFAULT_N2: [usize; 4] = [1, 3, 5, 10];
