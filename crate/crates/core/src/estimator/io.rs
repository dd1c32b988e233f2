//! Model files.
//!
//! Binary layout (integers `u64`, floats `f64`, little-endian):
//!
//! ```text
//! magic              8 bytes "SCSMODL1"
//! p_in, u, o         layer sizes
//! hidden, output     activation tags (1 tanh, 2 linear)
//! transform, order, raw   feature-encoding tags
//!                    (1 DFT / 2 dictionary; 1 natural / 2 descending;
//!                     1 interleaved / 2 omitted)
//! epsilon            labelling tolerance
//! target_mean, target_std, max_sparsity
//! input_mean[p_in], input_scale[p_in]
//! w1                 u × (p_in + 1), row-major, bias last
//! w2                 o × (u + 1), row-major, bias last
//! ```
//!
//! Every float is stored bit-for-bit, so a reloaded model predicts exactly
//! what the saved one did.

use std::io::{Read, Write};

use nalgebra::DMatrix;

use super::features::FeatureEncoding;
use super::mlp::{Activation, Mlp, SparsityRegressor};
use crate::binio::*;
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"SCSMODL1";

pub fn write_model<W: Write>(w: &mut W, m: &SparsityRegressor) -> Result<()> {
    w.write_all(MAGIC)?;
    put_u64(w, m.net.inputs() as u64)?;
    put_u64(w, m.net.hidden() as u64)?;
    put_u64(w, m.net.outputs() as u64)?;
    put_u64(w, m.hidden_activation.tag())?;
    put_u64(w, m.output_activation.tag())?;
    for t in m.encoding.tags() {
        put_u64(w, t)?;
    }
    put_f64(w, m.epsilon)?;
    put_f64(w, m.target_mean)?;
    put_f64(w, m.target_std)?;
    put_u64(w, m.max_sparsity as u64)?;
    for v in m.input_mean.iter().chain(&m.input_scale) {
        put_f64(w, *v)?;
    }
    for v in m.net.params() {
        put_f64(w, v)?;
    }
    Ok(())
}

pub fn read_model<R: Read>(r: &mut R) -> Result<SparsityRegressor> {
    expect_magic(r, MAGIC)?;
    let p = get_usize(r)?;
    let u = get_usize(r)?;
    let o = get_usize(r)?;
    checked_len(p + 1, u.max(1), 1 << 26)?;
    checked_len(u + 1, o.max(1), 1 << 26)?;
    if u == 0 || o == 0 {
        return Err(Error::Format("model has an empty layer".into()));
    }
    let hidden_activation = Activation::from_tag(get_u64(r)?)?;
    let output_activation = Activation::from_tag(get_u64(r)?)?;
    if hidden_activation != Activation::Tanh || output_activation != Activation::Linear {
        return Err(Error::Format("only tanh hidden / linear output networks are supported".into()));
    }
    let encoding = FeatureEncoding::from_tags([get_u64(r)?, get_u64(r)?, get_u64(r)?])?;
    let epsilon = get_f64(r)?;
    let target_mean = get_f64(r)?;
    let target_std = get_f64(r)?;
    let max_sparsity = get_usize(r)?;
    let mut input_mean = Vec::with_capacity(p);
    for _ in 0..p {
        input_mean.push(get_f64(r)?);
    }
    let mut input_scale = Vec::with_capacity(p);
    for _ in 0..p {
        input_scale.push(get_f64(r)?);
    }
    let mut net = Mlp { w1: DMatrix::zeros(u, p + 1), w2: DMatrix::zeros(o, u + 1) };
    let mut params = Vec::with_capacity(net.param_count());
    for _ in 0..net.param_count() {
        params.push(get_f64(r)?);
    }
    net.set_params(&params);
    Ok(SparsityRegressor {
        net,
        hidden_activation,
        output_activation,
        encoding,
        epsilon,
        input_mean,
        input_scale,
        target_mean,
        target_std,
        max_sparsity,
    })
}
