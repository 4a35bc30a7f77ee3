//! Weighted logistic regression and linear hinge-loss SVM with an L1 or L2
//! penalty, trained by mini-batch (sub)gradient descent.
//!
//! Both objectives are the sample-weighted mean data loss plus
//! `alpha * penalty(w)`, where the penalty is `0.5 * ||w||^2` (L2) or `||w||_1` (L1).
//! The bias is never penalized.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::math;
use crate::matrix::{dot, Matrix};
use crate::preprocess::{class_weights, ClassWeights};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Penalty {
    L1,
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum LinearKind {
    Logistic,
    HingeSvm,
}

impl LinearKind {
    pub fn name(self) -> &'static str {
        match self {
            LinearKind::Logistic => "logistic",
            LinearKind::HingeSvm => "svm",
        }
    }

    /// Score boundary for class 1: probability 0.5 or margin 0.
    pub fn threshold(self) -> f64 {
        match self {
            LinearKind::Logistic => 0.5,
            LinearKind::HingeSvm => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LinearParams {
    pub kind: LinearKind,
    pub penalty: Penalty,
    pub alpha: f64,
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearParams {
    pub fn zeros(kind: LinearKind, penalty: Penalty, alpha: f64, width: usize) -> Self {
        Self { kind, penalty, alpha, weights: vec![0.0; width], bias: 0.0 }
    }

    fn margins(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.weights.len() {
            return Err(Error::DimensionMismatch { what: "design matrix width", expected: self.weights.len(), found: x.cols() });
        }
        Ok(x.iter_rows().map(|r| dot(&self.weights, r) + self.bias).collect())
    }

    /// Probabilities for logistic models, raw margins for SVMs.
    pub fn scores(&self, x: &Matrix) -> Result<Vec<f64>> {
        match self.kind {
            LinearKind::Logistic => logistic_predict(self, x),
            LinearKind::HingeSvm => svm_decision(self, x),
        }
    }

    fn penalty_value(&self) -> f64 {
        self.alpha
            * match self.penalty {
                Penalty::L2 => 0.5 * dot(&self.weights, &self.weights),
                Penalty::L1 => self.weights.iter().map(|w| math::abs(*w)).sum(),
            }
    }

    fn penalty_grad(&self, w: f64) -> f64 {
        self.alpha
            * match self.penalty {
                Penalty::L2 => w,
                Penalty::L1 => math::sign(w),
            }
    }
}

/// Loss value and gradient of a linear objective.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearGradient {
    pub loss: f64,
    pub weights: Vec<f64>,
    pub bias: f64,
}

pub fn logistic_predict(params: &LinearParams, x: &Matrix) -> Result<Vec<f64>> {
    if params.kind != LinearKind::Logistic {
        return Err(Error::WrongModelKind { expected: "logistic" });
    }
    Ok(params.margins(x)?.into_iter().map(math::sigmoid).collect())
}

/// Raw margins `w.x + b`; class 1 iff the margin is >= 0.
pub fn svm_decision(params: &LinearParams, x: &Matrix) -> Result<Vec<f64>> {
    if params.kind != LinearKind::HingeSvm {
        return Err(Error::WrongModelKind { expected: "svm" });
    }
    params.margins(x)
}

fn validate(params: &LinearParams, x: &Matrix, y: &[u8], sample_weights: &[f64]) -> Result<f64> {
    if x.rows() != y.len() {
        return Err(Error::DimensionMismatch { what: "labels", expected: x.rows(), found: y.len() });
    }
    if sample_weights.len() != y.len() {
        return Err(Error::DimensionMismatch { what: "sample weights", expected: y.len(), found: sample_weights.len() });
    }
    if x.cols() != params.weights.len() {
        return Err(Error::DimensionMismatch { what: "design matrix width", expected: params.weights.len(), found: x.cols() });
    }
    if !x.is_finite() {
        return Err(Error::NonFinite("design matrix"));
    }
    if !params.weights.iter().all(|w| w.is_finite()) || !params.bias.is_finite() || !params.alpha.is_finite() {
        return Err(Error::NonFinite("parameters"));
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

/// Weighted data loss and its gradient over `rows`, without the penalty.
/// Each row contributes `sw_i * (loss_i, dloss_i/dmargin)` normalized by the total weight.
fn data_loss_grad(params: &LinearParams, x: &Matrix, y: &[u8], sw: &[f64], rows: &[usize], grad_w: &mut [f64]) -> (f64, f64) {
    grad_w.iter_mut().for_each(|g| *g = 0.0);
    let total: f64 = rows.iter().map(|&i| sw[i]).sum();
    if total <= 0.0 {
        return (0.0, 0.0);
    }
    let mut loss = 0.0;
    let mut grad_b = 0.0;
    for &i in rows {
        let r = x.row(i);
        let m = dot(&params.weights, r) + params.bias;
        let (l, dm) = match params.kind {
            LinearKind::Logistic => {
                let t = f64::from(y[i]);
                (math::logit_cross_entropy(m, t), math::sigmoid(m) - t)
            }
            LinearKind::HingeSvm => {
                let t = if y[i] == 1 { 1.0 } else { -1.0 };
                let slack = 1.0 - t * m;
                if slack > 0.0 {
                    (slack, -t)
                } else {
                    (0.0, 0.0)
                }
            }
        };
        let w = sw[i] / total;
        loss += w * l;
        grad_b += w * dm;
        for (g, &v) in grad_w.iter_mut().zip(r) {
            *g += w * dm * v;
        }
    }
    (loss, grad_b)
}

fn loss_grad(params: &LinearParams, x: &Matrix, y: &[u8], sample_weights: &[f64]) -> Result<LinearGradient> {
    validate(params, x, y, sample_weights)?;
    let rows: Vec<usize> = (0..x.rows()).collect();
    let mut gw = vec![0.0; params.weights.len()];
    let (data_loss, gb) = data_loss_grad(params, x, y, sample_weights, &rows, &mut gw);
    for (g, &w) in gw.iter_mut().zip(&params.weights) {
        *g += params.penalty_grad(w);
    }
    Ok(LinearGradient { loss: data_loss + params.penalty_value(), weights: gw, bias: gb })
}

/// Weighted mean cross-entropy plus penalty, and its (sub)gradient.
pub fn logistic_loss_grad(params: &LinearParams, x: &Matrix, y: &[u8], sample_weights: &[f64]) -> Result<LinearGradient> {
    if params.kind != LinearKind::Logistic {
        return Err(Error::WrongModelKind { expected: "logistic" });
    }
    loss_grad(params, x, y, sample_weights)
}

/// Weighted mean hinge loss on labels mapped to {-1, +1}, plus penalty.
/// The subgradient at the hinge kink is taken as 0.
pub fn svm_loss_grad(params: &LinearParams, x: &Matrix, y: &[u8], sample_weights: &[f64]) -> Result<LinearGradient> {
    if params.kind != LinearKind::HingeSvm {
        return Err(Error::WrongModelKind { expected: "svm" });
    }
    loss_grad(params, x, y, sample_weights)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ClassWeighting {
    /// `N / (2 N_c)` per class, from the training labels.
    Balanced,
    None,
}

/// Optimizer settings shared by the linear and neural trainers.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Stop after this many epochs without validation improvement; 0 disables early stopping.
    pub patience: usize,
    pub seed: u64,
    pub class_weighting: ClassWeighting,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            batch_size: 256,
            max_epochs: 100,
            patience: 5,
            seed: 0,
            class_weighting: ClassWeighting::Balanced,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidConfig(alloc::format!("learning rate {} must be positive", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be positive".into()));
        }
        Ok(())
    }

    pub(crate) fn weights_for(&self, train_labels: &[u8]) -> Result<ClassWeights> {
        match self.class_weighting {
            ClassWeighting::Balanced => class_weights(train_labels),
            ClassWeighting::None => {
                class_weights(train_labels)?;
                Ok(ClassWeights::UNIT)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EpochLoss {
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_loss: f64,
}

/// Per-epoch objective values. `best_epoch` is `None` when the initialization
/// was never beaten on validation.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainTrace {
    pub epochs: Vec<EpochLoss>,
    pub best_epoch: Option<usize>,
}

/// Tracks the best validation loss and decides when to stop.
#[derive(Debug)]
pub(crate) struct EarlyStopping {
    patience: usize,
    best: f64,
    stale: usize,
}

impl EarlyStopping {
    pub(crate) fn new(patience: usize, initial_loss: f64) -> Self {
        Self { patience, best: initial_loss, stale: 0 }
    }

    /// Returns `(improved, stop)`.
    pub(crate) fn observe(&mut self, loss: f64) -> (bool, bool) {
        if loss < self.best {
            self.best = loss;
            self.stale = 0;
            (true, false)
        } else {
            self.stale += 1;
            (false, self.patience > 0 && self.stale >= self.patience)
        }
    }
}

pub(crate) fn shuffled_batches(n: usize, batch_size: usize, rng: &mut rng::Rng) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order.chunks(batch_size).map(<[usize]>::to_vec).collect()
}

fn objective(params: &LinearParams, x: &Matrix, y: &[u8], sw: &[f64], scratch: &mut [f64]) -> f64 {
    let rows: Vec<usize> = (0..x.rows()).collect();
    data_loss_grad(params, x, y, sw, &rows, scratch).0 + params.penalty_value()
}

/// Mini-batch descent from zero weights with per-epoch shuffling and early
/// stopping on the validation objective. Returns the parameters with the
/// lowest validation objective seen, the initialization included.
///
/// The L2 penalty is applied as an implicit step `w / (1 + lr * alpha)`,
/// which stays stable for any `alpha`; L1 uses the subgradient with `sign(0) = 0`.
#[allow(clippy::too_many_arguments)]
pub fn train_linear(
    kind: LinearKind,
    alpha: f64,
    penalty: Penalty,
    x_train: &Matrix,
    y_train: &[u8],
    config: &TrainConfig,
    x_val: &Matrix,
    y_val: &[u8],
) -> Result<(LinearParams, TrainTrace)> {
    config.validate()?;
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidConfig(alloc::format!("alpha {alpha} must be nonnegative")));
    }
    if x_val.cols() != x_train.cols() {
        return Err(Error::DimensionMismatch { what: "validation width", expected: x_train.cols(), found: x_val.cols() });
    }
    let cw = config.weights_for(y_train)?;
    let sw_train = cw.sample_weights(y_train);
    let sw_val = cw.sample_weights(y_val);
    let mut params = LinearParams::zeros(kind, penalty, alpha, x_train.cols());
    validate(&params, x_train, y_train, &sw_train)?;
    validate(&params, x_val, y_val, &sw_val)?;

    let mut scratch = vec![0.0; x_train.cols()];
    let mut grad = vec![0.0; x_train.cols()];
    let mut best = params.clone();
    let mut trace = TrainTrace::default();
    let mut stopper = EarlyStopping::new(config.patience, objective(&params, x_val, y_val, &sw_val, &mut scratch));
    let mut rng = rng::seeded(config.seed);
    let lr = config.learning_rate;
    let shrink = 1.0 / (1.0 + lr * alpha);

    for epoch in 0..config.max_epochs {
        for batch in shuffled_batches(x_train.rows(), config.batch_size, &mut rng) {
            let (_, gb) = data_loss_grad(&params, x_train, y_train, &sw_train, &batch, &mut grad);
            match penalty {
                Penalty::L2 => {
                    for (w, g) in params.weights.iter_mut().zip(&grad) {
                        *w = (*w - lr * g) * shrink;
                    }
                }
                Penalty::L1 => {
                    for (w, g) in params.weights.iter_mut().zip(&grad) {
                        *w -= lr * (g + alpha * math::sign(*w));
                    }
                }
            }
            params.bias -= lr * gb;
        }
        let train_loss = objective(&params, x_train, y_train, &sw_train, &mut scratch);
        let validation_loss = objective(&params, x_val, y_val, &sw_val, &mut scratch);
        let params_finite = params.bias.is_finite() && params.weights.iter().all(|w| w.is_finite());
        if !params_finite || !train_loss.is_finite() || !validation_loss.is_finite() {
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
