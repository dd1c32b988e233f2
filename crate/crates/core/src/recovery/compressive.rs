use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::omp::{omp, SparseCode, StopRule};
use crate::error::ensure_dim;
use crate::{seed, CMat, CVec, Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasurementScheme {
    /// i.i.d. CN(0, 1/m) entries.
    Gaussian,
    /// The first `m` rows of the identity.
    RowSelector,
}

/// Sensing matrix `Φ` (m × n, m < n) with its generation scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementMatrix {
    pub phi: CMat,
    pub scheme: MeasurementScheme,
}

impl MeasurementMatrix {
    /// Complex Gaussian sensing matrix scaled so every column has unit
    /// expected norm.
    pub fn gaussian(m: usize, n: usize, seed: u64) -> Result<Self> {
        check_shape(m, n)?;
        let mut rng = seed::rng(seed);
        let s = (0.5 / m as f64).sqrt();
        let phi = CMat::from_fn(m, n, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(re * s, im * s)
        });
        Ok(Self { phi, scheme: MeasurementScheme::Gaussian })
    }

    /// Keeps the first `m` of `n` samples.
    pub fn row_selector(m: usize, n: usize) -> Result<Self> {
        check_shape(m, n)?;
        let phi = CMat::from_fn(m, n, |r, c| if r == c { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
        Ok(Self { phi, scheme: MeasurementScheme::RowSelector })
    }

    pub fn measurements(&self) -> usize {
        self.phi.nrows()
    }

    pub fn signal_len(&self) -> usize {
        self.phi.ncols()
    }

    /// `y_c = Φ y`.
    pub fn measure(&self, y: &[C64]) -> Result<CVec> {
        ensure_dim("measured signal length", self.signal_len(), y.len())?;
        Ok(&self.phi * CVec::from_column_slice(y))
    }
}

fn check_shape(m: usize, n: usize) -> Result<()> {
    if m == 0 || m >= n {
        return Err(Error::InvalidInput(format!("measurement matrix needs 0 < m < n, got m={m}, n={n}")));
    }
    Ok(())
}

/// Smallest `m` with `m ≥ c · s · ln(n/m)` — the usual measurement-count
/// guideline for recovering an `s`-sparse length-`n` signal. Advisory only.
pub fn recommended_measurements(s: usize, n: usize, c: f64) -> usize {
    (1..n)
        .find(|&m| m as f64 >= c * s as f64 * (n as f64 / m as f64).ln())
        .unwrap_or(n)
}

/// Recovers an `s`-sparse code `w` (in `Ψ` coordinates) from `y_c = Φ Ψ w`.
///
/// OMP runs over `Φ Ψ` with columns renormalised; coefficients are scaled back
/// so that `ŷ = Ψ w`. The reported residual is that of the measurements.
pub fn compressive_recover(y_c: &[C64], phi: &MeasurementMatrix, psi: &CMat, s: usize) -> Result<SparseCode> {
    let m = phi.measurements();
    ensure_dim("measurement count", m, y_c.len())?;
    ensure_dim("dictionary rows", phi.signal_len(), psi.nrows())?;
    if s > m {
        return Err(Error::Underdetermined { s, m });
    }
    if s == 0 {
        let r = y_c.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        return Ok(SparseCode { residual_norm: r, ..SparseCode::default() });
    }
    let mut a = &phi.phi * psi;
    let norms = crate::linalg::normalize_columns(&mut a);
    let mut code = omp(y_c, &a, StopRule::sparsity(s))?;
    for (c, &j) in code.coefficients.iter_mut().zip(&code.support) {
        if norms[j] > 0.0 {
            *c /= norms[j];
        }
    }
    Ok(code)
}
