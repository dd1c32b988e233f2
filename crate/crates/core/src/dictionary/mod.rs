//! Redundant complex dictionaries and their learning.

mod init;
pub mod io;
mod ksvd;

pub use init::{multidomain_init, TrainingCorpus};
pub use ksvd::{ksvd, KsvdOutcome, KsvdParams};

use serde::{Deserialize, Serialize};

use crate::recovery::{basis_sparsity, dft_sparsity};
use crate::{dft, CMat, Error, Result, C64};

/// Atoms whose norm deviates from 1 by more than this are rejected.
pub const NORM_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitScheme {
    /// Balanced columns of angle-, delay- and Doppler-sparse training sets.
    MultiDomain,
    /// Columns of the general training set.
    DataColumns,
    /// The unitary DFT basis.
    Dft,
    /// Supplied by the caller.
    Custom,
}

impl InitScheme {
    pub(crate) fn tag(self) -> u64 {
        match self {
            InitScheme::MultiDomain => 1,
            InitScheme::DataColumns => 2,
            InitScheme::Dft => 3,
            InitScheme::Custom => 4,
        }
    }

    pub(crate) fn from_tag(t: u64) -> Result<Self> {
        Ok(match t {
            1 => InitScheme::MultiDomain,
            2 => InitScheme::DataColumns,
            3 => InitScheme::Dft,
            4 => InitScheme::Custom,
            _ => return Err(Error::Format(format!("unknown dictionary init tag {t}"))),
        })
    }
}

/// Where a dictionary came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub init: InitScheme,
    /// K-SVD iterations run (0 for an initial dictionary).
    pub iterations: usize,
    /// Sparsity used while learning (0 when not learned).
    pub target_sparsity: usize,
    /// Free-form identifier of the training data.
    pub training_set: String,
}

impl Provenance {
    pub fn custom() -> Self {
        Self { init: InitScheme::Custom, iterations: 0, target_sparsity: 0, training_set: String::new() }
    }
}

/// `n × k` complex dictionary (`k ≥ n`) with unit-norm atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    atoms: CMat,
    pub provenance: Provenance,
}

impl Dictionary {
    /// Wraps `atoms`, checking shape, finiteness and unit norms.
    pub fn new(atoms: CMat, provenance: Provenance) -> Result<Self> {
        let (n, k) = atoms.shape();
        if n == 0 || k < n {
            return Err(Error::InvalidInput(format!("dictionary must be n × k with k ≥ n ≥ 1, got {n} × {k}")));
        }
        for (j, col) in atoms.column_iter().enumerate() {
            if col.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::InvalidInput(format!("atom {j} has non-finite entries")));
            }
            let nrm = col.norm();
            if (nrm - 1.0).abs() > NORM_TOLERANCE {
                return Err(Error::InvalidInput(format!("atom {j} has norm {nrm}, expected 1")));
            }
        }
        Ok(Self { atoms, provenance })
    }

    /// Normalises the columns of `columns` and wraps them.
    pub fn from_columns(mut columns: CMat, provenance: Provenance) -> Result<Self> {
        let norms = crate::linalg::normalize_columns(&mut columns);
        if let Some(j) = norms.iter().position(|&v| v == 0.0) {
            return Err(Error::InvalidInput(format!("column {j} is zero and cannot be normalised")));
        }
        Self::new(columns, provenance)
    }

    /// The `n`-point DFT basis (atoms are the columns of `Fᴴ`).
    pub fn dft(n: usize) -> Self {
        let provenance = Provenance { init: InitScheme::Dft, iterations: 0, target_sparsity: 0, training_set: String::new() };
        Self { atoms: dft::dft_basis(n), provenance }
    }

    pub fn atoms(&self) -> &CMat {
        &self.atoms
    }

    pub fn into_atoms(self) -> CMat {
        self.atoms
    }

    /// Signal dimension `n`.
    pub fn rows(&self) -> usize {
        self.atoms.nrows()
    }

    /// Number of atoms `k`.
    pub fn len(&self) -> usize {
        self.atoms.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.ncols() == 0
    }

    /// Index pairs `(i, j)`, `i < j`, whose atoms have `|⟨d_i, d_j⟩| > threshold`.
    pub fn coherent_pairs(&self, threshold: f64) -> Vec<(usize, usize)> {
        coherent_pairs(&self.atoms, threshold)
    }
}

pub(crate) fn coherent_pairs(atoms: &CMat, threshold: f64) -> Vec<(usize, usize)> {
    let g = atoms.ad_mul(atoms);
    let k = atoms.ncols();
    let mut out = Vec::new();
    for j in 0..k {
        for i in 0..j {
            if g[(i, j)].norm() > threshold {
                out.push((i, j));
            }
        }
    }
    out
}

/// Mutual coherence `max_{i≠j} |⟨d_i, d_j⟩|`.
pub fn coherence(d: &Dictionary) -> f64 {
    let g = d.atoms.ad_mul(&d.atoms);
    let k = d.len();
    let mut best = 0.0_f64;
    for j in 0..k {
        for i in 0..j {
            best = best.max(g[(i, j)].norm());
        }
    }
    best
}

/// DFT sparsity (at energy fraction `eta`) of every atom.
pub fn atom_dft_profile(d: &Dictionary, eta: f64) -> Result<Vec<usize>> {
    d.atoms
        .column_iter()
        .map(|c| {
            let v: Vec<C64> = c.iter().cloned().collect();
            dft_sparsity(&v, eta)
        })
        .collect()
}

/// Sparsity of every atom over an orthonormal `basis` at energy fraction `eta`.
pub fn atom_basis_profile(d: &Dictionary, basis: &CMat, eta: f64) -> Result<Vec<usize>> {
    d.atoms
        .column_iter()
        .map(|c| {
            let v: Vec<C64> = c.iter().cloned().collect();
            basis_sparsity(&v, basis, eta)
        })
        .collect()
}
