//! Training loop: Adam over mini-batches of node-centric graphs.
//!
//! Batches are shuffled with a seeded generator and per-sample gradients are
//! summed in a fixed order, so a given seed always produces bit-identical
//! parameters no matter how many worker threads run the forward passes.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::edit::OpLabel;
use crate::error::{Error, Result};
use crate::nn::model::{forward, loss_and_grad, predict, ModelInput};
use crate::nn::params::{ModelConfig, ScorerParams};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub seed: u64,
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    /// BFS depth; also the number of attention layers.
    pub n_d: usize,
    pub d_h: usize,
    /// Inverse-frequency class weights are capped at this value.
    pub class_weight_cap: f64,
    /// Ablation switch: when false the attention stack is skipped.
    pub use_gnn: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            seed: 0,
            epochs: 20,
            lr: 1e-3,
            batch_size: 32,
            n_d: 2,
            d_h: 128,
            class_weight_cap: 10.0,
            use_gnn: true,
        }
    }
}

/// One labeled center: an assembled graph plus its gold operation.
pub struct Sample {
    pub input: ModelInput,
    pub label: OpLabel,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_dev_macro_f1: f64,
    pub final_train_loss: f64,
    pub class_weights: [f64; 3],
    pub epoch_losses: Vec<f64>,
    pub dev_macro_f1: Vec<f64>,
}

/// Inverse-frequency weights over the training labels, mean-normalized and
/// capped. Absent classes get the cap (they contribute no loss anyway).
pub fn class_weights(labels: impl Iterator<Item = OpLabel>, cap: f64) -> [f64; 3] {
    let mut counts = [0usize; 3];
    let mut total = 0usize;
    for l in labels {
        counts[l.class_index()] += 1;
        total += 1;
    }
    let mut w = [0.0; 3];
    for c in 0..3 {
        w[c] = if counts[c] == 0 {
            cap
        } else {
            (total as f64 / (3.0 * counts[c] as f64)).min(cap)
        };
    }
    w
}

/// Macro-averaged F1 over the classes present in the gold labels.
pub fn macro_f1(pairs: &[(OpLabel, OpLabel)]) -> f64 {
    let mut tp = [0.0; 3];
    let mut fp = [0.0; 3];
    let mut fn_ = [0.0; 3];
    let mut present = [false; 3];
    for &(gold, pred) in pairs {
        present[gold.class_index()] = true;
        if gold == pred {
            tp[gold.class_index()] += 1.0;
        } else {
            fn_[gold.class_index()] += 1.0;
            fp[pred.class_index()] += 1.0;
        }
    }
    let mut sum = 0.0;
    let mut n = 0;
    for c in 0..3 {
        if !present[c] {
            continue;
        }
        let p = if tp[c] + fp[c] > 0.0 { tp[c] / (tp[c] + fp[c]) } else { 0.0 };
        let r = if tp[c] + fn_[c] > 0.0 { tp[c] / (tp[c] + fn_[c]) } else { 0.0 };
        sum += if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl Adam {
    fn new(n: usize) -> Adam {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let b1t = 1.0 - self.beta1.powi(self.t as i32);
        let b2t = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let mhat = self.m[i] / b1t;
            let vhat = self.v[i] / b2t;
            params[i] -= lr * mhat / (vhat.sqrt() + self.eps);
        }
    }
}

/// Evaluate dev macro-F1 for the current parameters.
fn dev_metric(params: &ScorerParams, dev: &[Sample]) -> f64 {
    let pairs: Vec<(OpLabel, OpLabel)> = dev
        .par_iter()
        .map(|s| {
            let fw = forward(params, &s.input).expect("dev forward");
            let (_, op) = predict(fw.scores);
            (s.label, op)
        })
        .collect();
    macro_f1(&pairs)
}

/// Compute one batch gradient: per-sample gradients evaluated in parallel,
/// reduced in sample order.
fn batch_gradient(
    params: &ScorerParams,
    samples: &[&Sample],
    weights: [f64; 3],
    batch_id: usize,
    grad: &mut [f64],
) -> Result<f64> {
    let inv_n = 1.0 / samples.len().max(1) as f64;
    let parts: Vec<Result<(f64, Vec<f64>)>> = samples
        .par_iter()
        .map(|s| {
            let mut g = vec![0.0; params.layout.total];
            let batch = [(&s.input, s.label)];
            // per-sample loss; scale below when reducing
            let l = loss_and_grad(params, &batch, weights, &mut g, batch_id)?;
            Ok((l, g))
        })
        .collect();
    grad.fill(0.0);
    let mut loss = 0.0;
    for part in parts {
        let (l, g) = part?;
        loss += l * inv_n;
        for (gi, pi) in grad.iter_mut().zip(&g) {
            *gi += pi * inv_n;
        }
    }
    Ok(loss)
}

/// Train a scorer; returns the parameters of the best epoch by dev macro-F1
/// together with a report. Deterministic given the seed.
pub fn train(
    train_set: &[Sample],
    dev_set: &[Sample],
    cfg: &TrainConfig,
    d_text: usize,
) -> Result<(ScorerParams, TrainReport)> {
    if train_set.is_empty() {
        return Err(Error::Training("empty training corpus".into()));
    }
    let mut mc = ModelConfig::new(d_text, cfg.d_h, cfg.n_d);
    mc.use_gnn = cfg.use_gnn;
    let mut params = ScorerParams::init(mc, cfg.seed)?;
    let weights = class_weights(train_set.iter().map(|s| s.label), cfg.class_weight_cap);

    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut adam = Adam::new(params.layout.total);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut grad = vec![0.0; params.layout.total];

    let mut best_params = params.clone();
    let mut best_f1 = f64::NEG_INFINITY;
    let mut best_epoch = 0;
    let mut epoch_losses = Vec::new();
    let mut dev_f1s = Vec::new();

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for (batch_id, chunk) in order.chunks(cfg.batch_size.max(1)).enumerate() {
            let samples: Vec<&Sample> = chunk.iter().map(|&i| &train_set[i]).collect();
            let loss = batch_gradient(&params, &samples, weights, batch_id, &mut grad)?;
            if !loss.is_finite() {
                return Err(Error::Training(format!(
                    "training diverged at epoch {epoch}, batch {batch_id}"
                )));
            }
            adam.step(&mut params.data, &grad, cfg.lr);
            epoch_loss += loss;
            batches += 1;
        }
        epoch_loss /= batches.max(1) as f64;
        epoch_losses.push(epoch_loss);

        let f1 = if dev_set.is_empty() {
            // without a dev set, prefer the latest parameters
            f64::NEG_INFINITY
        } else {
            dev_metric(&params, dev_set)
        };
        dev_f1s.push(f1.max(0.0));
        if f1 > best_f1 || dev_set.is_empty() {
            best_f1 = f1;
            best_epoch = epoch;
            best_params = params.clone();
        }
    }

    let report = TrainReport {
        epochs_run: cfg.epochs,
        best_epoch,
        best_dev_macro_f1: if best_f1.is_finite() { best_f1 } else { 0.0 },
        final_train_loss: epoch_losses.last().copied().unwrap_or(0.0),
        class_weights: weights,
        epoch_losses,
        dev_macro_f1: dev_f1s,
    };
    Ok((best_params, report))
}
