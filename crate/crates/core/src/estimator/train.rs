//! Regressor training.
//!
//! Inputs and labels are standardised on the training split. The default
//! optimiser is Levenberg–Marquardt on the squared residuals, where the
//! learning rate is the initial damping `μ`; Adam and plain mini-batch
//! gradient descent use it as their step size. Every epoch records train and
//! validation MSE (label units); the returned model is the one with the
//! lowest validation loss, and training stops after `patience` epochs
//! without improvement.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::LabeledDataset;
use super::features::FeatureEncoding;
use super::mlp::{gradient, Activation, Batch, Mlp, SparsityRegressor};
use crate::{seed, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Optimizer {
    LevenbergMarquardt,
    Adam,
    GradientDescent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingHyperparams {
    /// Initial damping for Levenberg–Marquardt, step size otherwise.
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
    pub optimizer: Optimizer,
    pub hidden_units: usize,
    /// Mini-batch size for the first-order optimisers.
    pub batch_size: usize,
}

impl Default for TrainingHyperparams {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            max_epochs: 200,
            patience: 6,
            seed: 0,
            optimizer: Optimizer::LevenbergMarquardt,
            hidden_units: 10,
            batch_size: 64,
        }
    }
}

impl TrainingHyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if self.max_epochs == 0 || self.hidden_units == 0 || self.batch_size == 0 {
            return Err(Error::InvalidConfig("max_epochs, hidden_units and batch_size must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// Metadata stored with a trained model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelMeta {
    pub encoding: FeatureEncoding,
    pub epsilon: f64,
    pub max_sparsity: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train_mse: f64,
    pub validation_mse: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxEpochs,
    /// Validation loss stopped improving.
    EarlyStopped,
    /// Damping overflowed or the training loss vanished.
    Converged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub model: SparsityRegressor,
    pub curve: Vec<EpochLoss>,
    pub best_epoch: usize,
    pub stop: StopReason,
}

const MU_INCREASE: f64 = 10.0;
const MU_DECREASE: f64 = 0.1;
const MU_MAX: f64 = 1e10;
const JACOBIAN_CHUNK: usize = 512;

fn column_stats(x: &DMatrix<f64>) -> (Vec<f64>, Vec<f64>) {
    let n = x.nrows().max(1) as f64;
    let mut mean = Vec::with_capacity(x.ncols());
    let mut scale = Vec::with_capacity(x.ncols());
    for c in x.column_iter() {
        let m = c.sum() / n;
        let v = c.iter().map(|z| (z - m) * (z - m)).sum::<f64>() / n;
        mean.push(m);
        scale.push(if v.sqrt() > 1e-12 { v.sqrt() } else { 1.0 });
    }
    (mean, scale)
}

fn standardize(x: &mut DMatrix<f64>, mean: &[f64], scale: &[f64]) {
    for (c, mut col) in x.column_iter_mut().enumerate() {
        for v in col.iter_mut() {
            *v = (*v - mean[c]) / scale[c];
        }
    }
}

fn targets(labels: &[usize], mean: f64, std: f64) -> DMatrix<f64> {
    DMatrix::from_fn(labels.len(), 1, |r, _| (labels[r] as f64 - mean) / std)
}

/// `(JᵀJ, Jᵀe, ‖e‖²)` accumulated over fixed-size row chunks in a fixed order.
fn normal_equations(net: &Mlp, batch: &Batch) -> (DMatrix<f64>, DVector<f64>, f64) {
    let n = batch.len();
    let p = net.param_count();
    let chunks: Vec<usize> = (0..n).step_by(JACOBIAN_CHUNK).collect();
    let parts: Vec<(DMatrix<f64>, DVector<f64>, f64)> = chunks
        .par_iter()
        .map(|&start| {
            let rows = JACOBIAN_CHUNK.min(n - start);
            let j = net.output_jacobian(&batch.inputs, start, rows);
            let xs = batch.inputs.rows(start, rows).into_owned();
            let out = net.forward_batch(&xs);
            let e: DVector<f64> = (out.column(0) - batch.targets.rows(start, rows).column(0)).into_owned();
            (j.tr_mul(&j), j.tr_mul(&e), e.norm_squared())
        })
        .collect();
    let mut a = DMatrix::zeros(p, p);
    let mut g = DVector::zeros(p);
    let mut sse = 0.0;
    for (pa, pg, ps) in parts {
        a += pa;
        g += pg;
        sse += ps;
    }
    (a, g, sse)
}

fn finite_or_fail(loss: f64, epoch: usize, last: f64) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(Error::Numerical(format!(
            "training diverged at epoch {epoch}: loss {loss} (last finite training MSE {last:.6e}); \
             try a smaller learning rate or another optimizer"
        )))
    }
}

/// Trains a regressor on `ds.split.train`, selecting on `ds.split.validation`.
pub fn train(ds: &LabeledDataset, hp: &TrainingHyperparams, meta: &ModelMeta) -> Result<TrainReport> {
    hp.validate()?;
    if ds.split.train.is_empty() {
        return Err(Error::InvalidInput("training split is empty".into()));
    }
    let mut xtr = ds.rows(&ds.split.train);
    let (input_mean, input_scale) = column_stats(&xtr);
    standardize(&mut xtr, &input_mean, &input_scale);
    let ltr = ds.labels(&ds.split.train);
    let t_mean = ltr.iter().sum::<usize>() as f64 / ltr.len() as f64;
    let t_var = ltr.iter().map(|&l| (l as f64 - t_mean).powi(2)).sum::<f64>() / ltr.len() as f64;
    let t_std = if t_var.sqrt() > 1e-12 { t_var.sqrt() } else { 1.0 };
    let train_batch = Batch::new(xtr, targets(&ltr, t_mean, t_std))?;
    let val_batch = if ds.split.validation.is_empty() {
        None
    } else {
        let mut xv = ds.rows(&ds.split.validation);
        standardize(&mut xv, &input_mean, &input_scale);
        Some(Batch::new(xv, targets(&ds.labels(&ds.split.validation), t_mean, t_std))?)
    };
    let label_units = t_std * t_std;

    let mut net = Mlp::random(ds.input_dim(), hp.hidden_units, 1, seed::derive(hp.seed, "mlp-init", 0));
    let mut best = net.clone();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0;
    let mut since_best = 0;
    let mut curve = Vec::new();
    let mut stop = StopReason::MaxEpochs;
    let mut last_train = net.loss(&train_batch);
    finite_or_fail(last_train, 0, f64::NAN)?;

    let mut mu = hp.learning_rate;
    let mut adam = AdamState::new(net.param_count());
    let mut shuffle_rng = seed::rng(seed::derive(hp.seed, "mlp-shuffle", 0));
    let mut order: Vec<usize> = (0..train_batch.len()).collect();

    for epoch in 1..=hp.max_epochs {
        let mut converged = false;
        match hp.optimizer {
            Optimizer::LevenbergMarquardt => {
                let (a, g, sse) = normal_equations(&net, &train_batch);
                let loss = sse / train_batch.len() as f64;
                finite_or_fail(loss, epoch, last_train)?;
                let theta = DVector::from_vec(net.params());
                loop {
                    let mut damped = a.clone();
                    for i in 0..damped.nrows() {
                        damped[(i, i)] += mu;
                    }
                    let step = damped.cholesky().map(|c| c.solve(&(-&g)));
                    if let Some(step) = step {
                        let mut trial = net.clone();
                        trial.set_params((&theta + step).as_slice());
                        let tl = trial.loss(&train_batch);
                        if tl.is_finite() && tl < loss {
                            net = trial;
                            mu = (mu * MU_DECREASE).max(1e-20);
                            break;
                        }
                    }
                    mu *= MU_INCREASE;
                    if mu > MU_MAX {
                        converged = true;
                        break;
                    }
                }
            }
            Optimizer::Adam | Optimizer::GradientDescent => {
                order.shuffle(&mut shuffle_rng);
                for chunk in order.chunks(hp.batch_size) {
                    let b = Batch {
                        inputs: DMatrix::from_fn(chunk.len(), train_batch.inputs.ncols(), |r, c| {
                            train_batch.inputs[(chunk[r], c)]
                        }),
                        targets: DMatrix::from_fn(chunk.len(), 1, |r, _| train_batch.targets[(chunk[r], 0)]),
                    };
                    let grad = gradient(&net, &b);
                    let mut theta = net.params();
                    if hp.optimizer == Optimizer::Adam {
                        adam.step(&mut theta, &grad, hp.learning_rate);
                    } else {
                        for (t, g) in theta.iter_mut().zip(&grad) {
                            *t -= hp.learning_rate * g;
                        }
                    }
                    net.set_params(&theta);
                }
            }
        }
        let train_mse = net.loss(&train_batch);
        finite_or_fail(train_mse, epoch, last_train)?;
        last_train = train_mse;
        let val_mse = val_batch.as_ref().map(|b| net.loss(b)).unwrap_or(train_mse);
        finite_or_fail(val_mse, epoch, last_train)?;
        curve.push(EpochLoss { epoch, train_mse: train_mse * label_units, validation_mse: val_mse * label_units });
        if val_mse < best_val {
            best_val = val_mse;
            best = net.clone();
            best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
        }
        if converged || train_mse < 1e-20 {
            stop = StopReason::Converged;
            break;
        }
        if since_best >= hp.patience {
            stop = StopReason::EarlyStopped;
            break;
        }
    }
    log::debug!("training stopped after {} epochs ({stop:?}); best epoch {best_epoch}", curve.len());

    let model = SparsityRegressor {
        net: best,
        hidden_activation: Activation::Tanh,
        output_activation: Activation::Linear,
        encoding: meta.encoding,
        epsilon: meta.epsilon,
        input_mean,
        input_scale,
        target_mean: t_mean,
        target_std: t_std,
        max_sparsity: meta.max_sparsity,
    };
    Ok(TrainReport { model, curve, best_epoch, stop })
}

struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl AdamState {
    fn new(p: usize) -> Self {
        Self { m: vec![0.0; p], v: vec![0.0; p], t: 0 }
    }

    fn step(&mut self, theta: &mut [f64], grad: &[f64], lr: f64) {
        const B1: f64 = 0.9;
        const B2: f64 = 0.999;
        self.t += 1;
        let c1 = 1.0 - B1.powi(self.t);
        let c2 = 1.0 - B2.powi(self.t);
        for i in 0..theta.len() {
            self.m[i] = B1 * self.m[i] + (1.0 - B1) * grad[i];
            self.v[i] = B2 * self.v[i] + (1.0 - B2) * grad[i] * grad[i];
            theta[i] -= lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + 1e-8);
        }
    }
}
