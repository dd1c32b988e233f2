//! Dictionary files.
//!
//! Binary layout (integers `u64`, floats `f64`, little-endian):
//!
//! ```text
//! magic            8 bytes "SCSDICT1"
//! n, k             atom length and atom count
//! init             1 multi-domain, 2 data columns, 3 DFT, 4 custom
//! iterations       K-SVD iterations
//! target_sparsity
//! training_set     length-prefixed UTF-8
//! atoms            column-major, each entry (re, im)
//! ```
//!
//! Values are stored bit-for-bit, so a load reproduces the saved dictionary
//! exactly.

use std::io::{Read, Write};

use super::{Dictionary, InitScheme, Provenance};
use crate::binio::*;
use crate::{CMat, Result};

const MAGIC: &[u8; 8] = b"SCSDICT1";

pub fn write_dictionary<W: Write>(w: &mut W, d: &Dictionary) -> Result<()> {
    w.write_all(MAGIC)?;
    put_u64(w, d.rows() as u64)?;
    put_u64(w, d.len() as u64)?;
    put_u64(w, d.provenance.init.tag())?;
    put_u64(w, d.provenance.iterations as u64)?;
    put_u64(w, d.provenance.target_sparsity as u64)?;
    put_str(w, &d.provenance.training_set)?;
    for v in d.atoms().as_slice() {
        put_c64(w, *v)?;
    }
    Ok(())
}

pub fn read_dictionary<R: Read>(r: &mut R) -> Result<Dictionary> {
    expect_magic(r, MAGIC)?;
    let n = get_usize(r)?;
    let k = get_usize(r)?;
    let len = checked_len(n, k, 1 << 26)?;
    let init = InitScheme::from_tag(get_u64(r)?)?;
    let iterations = get_usize(r)?;
    let target_sparsity = get_usize(r)?;
    let training_set = get_str(r, 1 << 16)?;
    let mut data = Vec::with_capacity(len);
    for _ in 0..len {
        data.push(get_c64(r)?);
    }
    let atoms = CMat::from_vec(n, k, data);
    Dictionary::new(atoms, Provenance { init, iterations, target_sparsity, training_set })
}
