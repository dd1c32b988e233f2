use crate::{dft, CMat, Error, Result, C64};

/// Relative slack on the cumulative-energy comparison, so that floating-point
/// leakage into otherwise empty bins does not inflate the count.
const ENERGY_SLACK: f64 = 1e-12;

/// Smallest number of the largest entries of `energies` whose sum reaches
/// `eta` of the total. Returns 0 when the total is 0.
pub fn energy_count<I: IntoIterator<Item = f64>>(energies: I, eta: f64) -> usize {
    let mut e: Vec<f64> = energies.into_iter().collect();
    let total: f64 = e.iter().sum();
    if !(total > 0.0) {
        return 0;
    }
    e.sort_by(|a, b| b.total_cmp(a));
    let target = eta * total * (1.0 - ENERGY_SLACK);
    let mut acc = 0.0;
    for (i, v) in e.iter().enumerate() {
        acc += v;
        if acc >= target {
            return i + 1;
        }
    }
    e.len()
}

/// Number of largest-magnitude unitary-DFT coefficients holding a fraction
/// `eta ∈ (0, 1]` of the energy of `y`; 0 for the zero vector.
pub fn dft_sparsity(y: &[C64], eta: f64) -> Result<usize> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidInput(format!("energy fraction must lie in (0, 1], got {eta}")));
    }
    let spec = dft::forward(y);
    Ok(energy_count(spec.iter().map(|c| c.norm_sqr()), eta))
}

/// Like [`dft_sparsity`] but over the orthonormal `basis` (atoms as columns):
/// counts the largest `|⟨y, atom⟩|²` holding a fraction `eta` of the energy.
pub fn basis_sparsity(y: &[C64], basis: &CMat, eta: f64) -> Result<usize> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidInput(format!("energy fraction must lie in (0, 1], got {eta}")));
    }
    crate::error::ensure_dim("basis sparsity", basis.nrows(), y.len())?;
    Ok(energy_count(
        basis.column_iter().map(|a| a.iter().zip(y).map(|(u, v)| u.conj() * v).sum::<C64>().norm_sqr()),
        eta,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn tone(n: usize, bin: usize) -> Vec<C64> {
        (0..n).map(|j| C64::from_polar(1.0, 2.0 * PI * (bin * j) as f64 / n as f64)).collect()
    }

    #[test]
    fn single_tone_is_one() {
        for eta in [0.1, 0.5, 0.99, 1.0] {
            assert_eq!(dft_sparsity(&tone(32, 5), eta).unwrap(), 1);
        }
    }

    #[test]
    fn zero_is_zero() {
        assert_eq!(dft_sparsity(&[C64::new(0., 0.); 8], 0.99).unwrap(), 0);
    }

    #[test]
    fn eta_is_validated() {
        assert!(dft_sparsity(&tone(8, 1), 0.0).is_err());
        assert!(dft_sparsity(&tone(8, 1), 1.5).is_err());
    }
}
