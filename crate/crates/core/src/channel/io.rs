//! Channel realization files.
//!
//! Binary layout (all integers `u64`, all floats `f64`, little-endian):
//!
//! ```text
//! magic       8 bytes  "SCSCHAN1"
//! count       number of realizations
//! rows, cols  grid dimensions shared by all realizations
//! config_hash digest of the generating configuration
//! then per realization:
//!   seed, true_sparsity, delay_spread_samples
//!   cir  rows·cols complex values, row-major, interleaved (re, im)
//!   cfr  same layout
//! ```
//!
//! A companion CSV (`index,seed,config_id,true_sparsity`) carries the
//! per-realization metadata in human-readable form.

use std::io::{Read, Write};

use super::ChannelRealization;
use crate::binio::*;
use crate::{CMat, Error, Result};

const MAGIC: &[u8; 8] = b"SCSCHAN1";
const MAX_VALUES: usize = 1 << 28;

/// A realization together with the seed that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SeededRealization {
    pub seed: u64,
    pub realization: ChannelRealization,
}

fn put_grid<W: Write>(w: &mut W, m: &CMat) -> Result<()> {
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            put_c64(w, m[(r, c)])?;
        }
    }
    Ok(())
}

fn get_grid<R: Read>(r: &mut R, rows: usize, cols: usize) -> Result<CMat> {
    let mut m = CMat::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = get_c64(r)?;
        }
    }
    Ok(m)
}

/// Writes realizations sharing one grid shape. `rows`/`cols` are taken from
/// the first realization, or from `shape` when the list is empty.
pub fn write_realizations<W: Write>(
    w: &mut W,
    items: &[SeededRealization],
    shape: (usize, usize),
    config_hash: u64,
) -> Result<()> {
    let (rows, cols) = items.first().map(|s| s.realization.cfr.shape()).unwrap_or(shape);
    w.write_all(MAGIC)?;
    put_u64(w, items.len() as u64)?;
    put_u64(w, rows as u64)?;
    put_u64(w, cols as u64)?;
    put_u64(w, config_hash)?;
    for it in items {
        let r = &it.realization;
        if r.cfr.shape() != (rows, cols) || r.cir.shape() != (rows, cols) {
            return Err(Error::InvalidInput("realizations in one file must share a grid shape".into()));
        }
        put_u64(w, it.seed)?;
        put_u64(w, r.true_sparsity as u64)?;
        put_u64(w, r.delay_spread_samples as u64)?;
        put_grid(w, &r.cir)?;
        put_grid(w, &r.cfr)?;
    }
    Ok(())
}

/// Reads a file written by [`write_realizations`]; returns the realizations
/// and the stored configuration hash.
pub fn read_realizations<R: Read>(r: &mut R) -> Result<(Vec<SeededRealization>, u64)> {
    expect_magic(r, MAGIC)?;
    let count = get_usize(r)?;
    let rows = get_usize(r)?;
    let cols = get_usize(r)?;
    checked_len(rows, cols, MAX_VALUES)?;
    let hash = get_u64(r)?;
    let mut out = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let seed = get_u64(r)?;
        let true_sparsity = get_usize(r)?;
        let delay_spread_samples = get_usize(r)?;
        let cir = get_grid(r, rows, cols)?;
        let cfr = get_grid(r, rows, cols)?;
        out.push(SeededRealization {
            seed,
            realization: ChannelRealization { cir, cfr, true_sparsity, delay_spread_samples },
        });
    }
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(Error::Format("trailing bytes after the last realization".into()));
    }
    Ok((out, hash))
}

/// Per-realization metadata CSV.
pub fn write_metadata_csv<W: Write>(w: W, items: &[SeededRealization], config_id: &str) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    wr.write_record(["index", "seed", "config_id", "true_sparsity"]).map_err(io)?;
    for (i, it) in items.iter().enumerate() {
        wr.write_record([
            i.to_string(),
            it.seed.to_string(),
            config_id.to_string(),
            it.realization.true_sparsity.to_string(),
        ])
        .map_err(io)?;
    }
    wr.flush()?;
    Ok(())
}
