//! Unitary discrete Fourier transform.
//!
//! Forward: `X[k] = n^{-1/2} Σ_j x[j] e^{-j2πjk/n}`; inverse uses the
//! conjugate kernel. Both preserve the Euclidean norm. FFT plans are cached
//! per thread.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::{CMat, C64};

thread_local! {
    static PLANS: RefCell<(FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|p| {
        let mut p = p.borrow_mut();
        let (planner, cache) = &mut *p;
        cache
            .entry((n, inverse))
            .or_insert_with(|| {
                if inverse {
                    planner.plan_fft_inverse(n)
                } else {
                    planner.plan_fft_forward(n)
                }
            })
            .clone()
    })
}

fn transform_in_place(x: &mut [C64], inverse: bool) {
    let n = x.len();
    if n == 0 {
        return;
    }
    plan(n, inverse).process(x);
    let scale = 1.0 / (n as f64).sqrt();
    for v in x.iter_mut() {
        *v *= scale;
    }
}

/// Unitary forward DFT, in place.
pub fn forward_in_place(x: &mut [C64]) {
    transform_in_place(x, false)
}

/// Unitary inverse DFT, in place.
pub fn inverse_in_place(x: &mut [C64]) {
    transform_in_place(x, true)
}

/// Unitary forward DFT.
pub fn forward(x: &[C64]) -> Vec<C64> {
    let mut v = x.to_vec();
    forward_in_place(&mut v);
    v
}

/// Unitary inverse DFT.
pub fn inverse(x: &[C64]) -> Vec<C64> {
    let mut v = x.to_vec();
    inverse_in_place(&mut v);
    v
}

/// Applies the unitary forward DFT to every column of `m`.
pub fn forward_columns(m: &CMat) -> CMat {
    let mut out = m.clone();
    for mut col in out.column_iter_mut() {
        forward_in_place(col.as_mut_slice());
    }
    out
}

/// Applies the unitary inverse DFT to every column of `m`.
pub fn inverse_columns(m: &CMat) -> CMat {
    let mut out = m.clone();
    for mut col in out.column_iter_mut() {
        inverse_in_place(col.as_mut_slice());
    }
    out
}

/// The unitary DFT matrix `F` with `F[j,k] = e^{-j2πjk/n}/√n`.
pub fn dft_matrix(n: usize) -> CMat {
    let s = 1.0 / (n as f64).sqrt();
    CMat::from_fn(n, n, |j, k| {
        let ph = -2.0 * PI * ((j * k) % n.max(1)) as f64 / n as f64;
        C64::from_polar(s, ph)
    })
}

/// The DFT basis as a set of atoms: columns of `Fᴴ`, so that
/// `⟨y, atom_k⟩ = (F y)_k` and `y = Fᴴ (F y)`.
pub fn dft_basis(n: usize) -> CMat {
    dft_matrix(n).adjoint()
}

/// DFT basis acting along the rows of an `rows × cols` grid flattened column
/// by column (entry `(r, c)` at index `c·rows + r`): each column is
/// transformed on its own, nothing is transformed across columns.
/// Unitary, `rows·cols` atoms.
pub fn dft_basis_columnwise(rows: usize, cols: usize) -> CMat {
    CMat::identity(cols, cols).kronecker(&dft_basis(rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_matrix_definition() {
        let x: Vec<C64> = (0..6).map(|i| C64::new(i as f64, (i * i) as f64 * 0.1)).collect();
        let f = dft_matrix(6);
        let direct = &f * crate::CVec::from_vec(x.clone());
        let fast = forward(&x);
        for (a, b) in direct.iter().zip(&fast) {
            assert!((a - b).norm() < 1e-12);
        }
        let back = inverse(&fast);
        for (a, b) in back.iter().zip(&x) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn basis_columns_are_unit_tones() {
        let b = dft_basis(8);
        let col: Vec<C64> = b.column(3).iter().cloned().collect();
        let spec = forward(&col);
        for (k, v) in spec.iter().enumerate() {
            let want = if k == 3 { 1.0 } else { 0.0 };
            assert!((v.norm() - want).abs() < 1e-12);
        }
    }
}
