//! Sparse coding over dictionaries and fixed bases.

mod compressive;
mod omp;
mod sparsity;

pub use compressive::{
    compressive_recover, recommended_measurements, MeasurementMatrix, MeasurementScheme,
};
pub use omp::{omp, omp_traced, SparseCode, StopRule};
pub use sparsity::{basis_sparsity, dft_sparsity, energy_count};

use crate::{CMat, CVec, C64};

/// `ŷ = Σ_i D[:, λ(i)] · a_i`.
///
/// # Panics
/// If a support index is outside the dictionary.
pub fn reconstruct(atoms: &CMat, code: &SparseCode) -> CVec {
    let mut y = CVec::zeros(atoms.nrows());
    for (&j, &a) in code.support.iter().zip(&code.coefficients) {
        assert!(j < atoms.ncols(), "support index {j} outside {} atoms", atoms.ncols());
        y.axpy(a, &atoms.column(j), C64::new(1.0, 0.0));
    }
    y
}
