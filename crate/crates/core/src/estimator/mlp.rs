use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::features::{FeatureEncoding, FeatureVector};
use crate::{seed, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    /// Hyperbolic tangent (the "tan-sigmoid" transfer function).
    Tanh,
    Linear,
}

impl Activation {
    pub(crate) fn tag(self) -> u64 {
        match self {
            Activation::Tanh => 1,
            Activation::Linear => 2,
        }
    }

    pub(crate) fn from_tag(t: u64) -> Result<Self> {
        match t {
            1 => Ok(Activation::Tanh),
            2 => Ok(Activation::Linear),
            _ => Err(Error::Format(format!("unknown activation tag {t}"))),
        }
    }
}

/// Inputs (one sample per row) and targets (one sample per row).
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub inputs: DMatrix<f64>,
    pub targets: DMatrix<f64>,
}

impl Batch {
    pub fn new(inputs: DMatrix<f64>, targets: DMatrix<f64>) -> Result<Self> {
        if inputs.nrows() != targets.nrows() {
            return Err(Error::DimensionMismatch { context: "batch samples", expected: inputs.nrows(), got: targets.nrows() });
        }
        Ok(Self { inputs, targets })
    }

    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.nrows() == 0
    }
}

/// Two-layer perceptron: `out = W₂ [tanh(W₁ [x; 1]); 1]`.
///
/// `w1` is `hidden × (inputs + 1)` and `w2` is `outputs × (hidden + 1)`; the
/// last column of each holds the biases. The flat parameter vector lists
/// `w1` row by row, then `w2` row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub w1: DMatrix<f64>,
    pub w2: DMatrix<f64>,
}

impl Mlp {
    pub fn zeros(inputs: usize, hidden: usize, outputs: usize) -> Self {
        Self { w1: DMatrix::zeros(hidden, inputs + 1), w2: DMatrix::zeros(outputs, hidden + 1) }
    }

    /// Uniform initialisation in `±1/√fan_in` per layer.
    pub fn random(inputs: usize, hidden: usize, outputs: usize, seed: u64) -> Self {
        let mut rng = seed::rng(seed);
        let a1 = 1.0 / ((inputs + 1) as f64).sqrt();
        let a2 = 1.0 / ((hidden + 1) as f64).sqrt();
        let w1 = DMatrix::from_fn(hidden, inputs + 1, |_, _| rng.random_range(-a1..a1));
        let w2 = DMatrix::from_fn(outputs, hidden + 1, |_, _| rng.random_range(-a2..a2));
        Self { w1, w2 }
    }

    pub fn inputs(&self) -> usize {
        self.w1.ncols() - 1
    }

    pub fn hidden(&self) -> usize {
        self.w1.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.w2.nrows()
    }

    /// `u (p_in + 1) + o (u + 1)`.
    pub fn param_count(&self) -> usize {
        self.w1.len() + self.w2.len()
    }

    pub fn params(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.param_count());
        for r in 0..self.w1.nrows() {
            v.extend(self.w1.row(r).iter());
        }
        for r in 0..self.w2.nrows() {
            v.extend(self.w2.row(r).iter());
        }
        v
    }

    pub fn set_params(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.param_count(), "parameter vector length");
        let c1 = self.w1.ncols();
        for r in 0..self.w1.nrows() {
            for c in 0..c1 {
                self.w1[(r, c)] = p[r * c1 + c];
            }
        }
        let off = self.w1.len();
        let c2 = self.w2.ncols();
        for r in 0..self.w2.nrows() {
            for c in 0..c2 {
                self.w2[(r, c)] = p[off + r * c2 + c];
            }
        }
    }

    /// Hidden activations (samples × hidden) for a batch of inputs.
    fn hidden_batch(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let p = self.inputs();
        let wx = self.w1.columns(0, p);
        let mut z = x * wx.transpose();
        let bias = self.w1.column(p);
        for mut row in z.row_iter_mut() {
            for (h, b) in row.iter_mut().zip(bias.iter()) {
                *h = (*h + b).tanh();
            }
        }
        z
    }

    fn output_from_hidden(&self, h: &DMatrix<f64>) -> DMatrix<f64> {
        let u = self.hidden();
        let mut out = h * self.w2.columns(0, u).transpose();
        let bias = self.w2.column(u);
        for mut row in out.row_iter_mut() {
            for (o, b) in row.iter_mut().zip(bias.iter()) {
                *o += b;
            }
        }
        out
    }

    /// Outputs (samples × outputs) for a batch of inputs (samples × inputs).
    pub fn forward_batch(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.output_from_hidden(&self.hidden_batch(x))
    }

    /// Output for one input vector.
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let p = self.inputs();
        assert_eq!(x.len(), p, "input length");
        let u = self.hidden();
        let mut h = vec![0.0; u];
        for (i, hi) in h.iter_mut().enumerate() {
            let mut acc = self.w1[(i, p)];
            for (j, xj) in x.iter().enumerate() {
                acc += self.w1[(i, j)] * xj;
            }
            *hi = acc.tanh();
        }
        (0..self.outputs())
            .map(|o| {
                let mut acc = self.w2[(o, u)];
                for (i, hi) in h.iter().enumerate() {
                    acc += self.w2[(o, i)] * hi;
                }
                acc
            })
            .collect()
    }

    /// Mean squared error over all samples and outputs.
    pub fn loss(&self, batch: &Batch) -> f64 {
        if batch.is_empty() {
            return 0.0;
        }
        let out = self.forward_batch(&batch.inputs);
        (out - &batch.targets).norm_squared() / batch.targets.len() as f64
    }

    /// Jacobian of the (single) output with respect to the flat parameters,
    /// one row per sample, for rows `start..start + rows` of `x`.
    pub(crate) fn output_jacobian(&self, x: &DMatrix<f64>, start: usize, rows: usize) -> DMatrix<f64> {
        debug_assert_eq!(self.outputs(), 1);
        let p = self.inputs();
        let u = self.hidden();
        let xs = x.rows(start, rows).into_owned();
        let h = self.hidden_batch(&xs);
        let mut j = DMatrix::zeros(rows, self.param_count());
        let off = self.w1.len();
        for n in 0..rows {
            for i in 0..u {
                let g = self.w2[(0, i)] * (1.0 - h[(n, i)] * h[(n, i)]);
                let base = i * (p + 1);
                for c in 0..p {
                    j[(n, base + c)] = g * xs[(n, c)];
                }
                j[(n, base + p)] = g;
                j[(n, off + i)] = h[(n, i)];
            }
            j[(n, off + u)] = 1.0;
        }
        j
    }
}

/// Exact gradient of `batch` MSE with respect to the flat parameters.
pub fn gradient(model: &Mlp, batch: &Batch) -> Vec<f64> {
    let n = batch.len();
    if n == 0 {
        return vec![0.0; model.param_count()];
    }
    let p = model.inputs();
    let u = model.hidden();
    let h = model.hidden_batch(&batch.inputs);
    let out = model.output_from_hidden(&h);
    // dL/dout
    let scale = 2.0 / batch.targets.len() as f64;
    let d_out: DMatrix<f64> = (out - &batch.targets) * scale; // samples × o
    // Output layer.
    let mut g2 = DMatrix::zeros(model.outputs(), u + 1);
    g2.columns_mut(0, u).copy_from(&(d_out.transpose() * &h));
    for o in 0..model.outputs() {
        g2[(o, u)] = d_out.column(o).sum();
    }
    // Back through tanh.
    let mut d_h = &d_out * model.w2.columns(0, u); // samples × u
    for (dh, hv) in d_h.iter_mut().zip(h.iter()) {
        *dh *= 1.0 - hv * hv;
    }
    let mut g1 = DMatrix::zeros(u, p + 1);
    g1.columns_mut(0, p).copy_from(&(d_h.transpose() * &batch.inputs));
    for i in 0..u {
        g1[(i, p)] = d_h.column(i).sum();
    }
    Mlp { w1: g1, w2: g2 }.params()
}

/// Rounds half away from zero and clamps to `[0, max]`.
pub fn round_and_clamp(raw: f64, max: usize) -> usize {
    if !raw.is_finite() {
        return if raw == f64::INFINITY { max } else { 0 };
    }
    let r = raw.round();
    if r <= 0.0 {
        0
    } else if r >= max as f64 {
        max
    } else {
        r as usize
    }
}

/// Trained sparsity regressor: input standardisation, network and label
/// statistics, plus the metadata needed to reproduce its features.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsityRegressor {
    pub net: Mlp,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
    pub encoding: FeatureEncoding,
    /// Relative OMP tolerance the training labels were produced with.
    pub epsilon: f64,
    pub input_mean: Vec<f64>,
    pub input_scale: Vec<f64>,
    pub target_mean: f64,
    pub target_std: f64,
    /// Predictions are clamped to `[0, max_sparsity]`.
    pub max_sparsity: usize,
}

impl SparsityRegressor {
    pub fn input_dim(&self) -> usize {
        self.net.inputs()
    }

    /// Standardised copy of a feature vector.
    pub fn standardize(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .zip(self.input_mean.iter().zip(&self.input_scale))
            .map(|(x, (m, s))| (x - m) / s)
            .collect()
    }

    /// Network output in label units, before rounding.
    pub fn raw_output(&self, v: &FeatureVector) -> Result<f64> {
        crate::error::ensure_dim("model input dimension", self.input_dim(), v.len())?;
        let z = self.net.forward(&self.standardize(&v.0));
        Ok(z[0] * self.target_std + self.target_mean)
    }

    pub fn raw_outputs(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        crate::error::ensure_dim("model input dimension", self.input_dim(), x.ncols())?;
        let mut xs = x.clone();
        for mut row in xs.row_iter_mut() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = (*v - self.input_mean[c]) / self.input_scale[c];
            }
        }
        let out = self.net.forward_batch(&xs);
        Ok(out.column(0).map(|z| z * self.target_std + self.target_mean))
    }
}

/// Rounded, clamped sparsity prediction.
pub fn predict_sparsity(model: &SparsityRegressor, v: &FeatureVector) -> Result<usize> {
    Ok(round_and_clamp(model.raw_output(v)?, model.max_sparsity))
}
