use serde::{Deserialize, Serialize};

use crate::error::ensure_dim;
use crate::linalg::{least_squares, select_columns};
use crate::{CMat, CVec, Error, Result, C64};

/// Support indices and coefficients of a sparse representation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseCode {
    /// Atom indices in selection order.
    pub support: Vec<usize>,
    /// Coefficients aligned with `support`.
    pub coefficients: Vec<C64>,
    /// `‖y − D w‖₂` of the representation.
    pub residual_norm: f64,
}

impl SparseCode {
    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    /// Dense coefficient vector of length `k`.
    pub fn to_dense(&self, k: usize) -> CVec {
        let mut w = CVec::zeros(k);
        for (&j, &a) in self.support.iter().zip(&self.coefficients) {
            w[j] = a;
        }
        w
    }
}

/// When OMP stops: after `max_sparsity` atoms, once the residual norm is at or
/// below `tolerance`, or whichever comes first when both are set.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StopRule {
    pub max_sparsity: Option<usize>,
    pub tolerance: Option<f64>,
}

impl StopRule {
    pub fn sparsity(s: usize) -> Self {
        Self { max_sparsity: Some(s), tolerance: None }
    }

    pub fn tolerance(eps: f64) -> Self {
        Self { max_sparsity: None, tolerance: Some(eps) }
    }

    pub fn both(s: usize, eps: f64) -> Self {
        Self { max_sparsity: Some(s), tolerance: Some(eps) }
    }
}

/// Orthogonal matching pursuit.
///
/// Each iteration picks the atom with the largest `|⟨r, d_j⟩|` (lowest index on
/// exact ties), then re-solves the coefficients by least squares over the
/// whole accumulated support. `atoms` is expected to have unit-norm columns.
///
/// Stops when the stop rule is met, when every atom has been used, or when the
/// residual is orthogonal to every remaining atom (nothing left to explain).
pub fn omp(y: &[C64], atoms: &CMat, stop: StopRule) -> Result<SparseCode> {
    omp_traced(y, atoms, stop).map(|(code, _)| code)
}

/// Like [`omp`], additionally returning the residual norm before the first
/// and after every iteration.
pub fn omp_traced(y: &[C64], atoms: &CMat, stop: StopRule) -> Result<(SparseCode, Vec<f64>)> {
    let (n, k) = atoms.shape();
    ensure_dim("omp signal length", n, y.len())?;
    if stop.max_sparsity.is_none() && stop.tolerance.is_none() {
        return Err(Error::InvalidInput("omp needs a sparsity bound, a tolerance, or both".into()));
    }
    if let Some(s) = stop.max_sparsity {
        if s > k {
            return Err(Error::InvalidInput(format!("sparsity {s} exceeds the {k} available atoms")));
        }
    }
    if let Some(eps) = stop.tolerance {
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::InvalidInput(format!("tolerance must be finite and ≥ 0, got {eps}")));
        }
    }

    let y = CVec::from_column_slice(y);
    let y_norm = y.norm();
    let mut history = vec![y_norm];
    if y_norm == 0.0 {
        return Ok((SparseCode::default(), history));
    }

    let cap = stop.max_sparsity.unwrap_or(k).min(k);
    let floor = 1e-14 * y_norm;
    let mut support: Vec<usize> = Vec::with_capacity(cap);
    let mut selected = vec![false; k];
    let mut coef = CVec::zeros(0);
    let mut residual = y.clone();
    let mut r_norm = y_norm;

    while support.len() < cap {
        if matches!(stop.tolerance, Some(eps) if r_norm <= eps) {
            break;
        }
        let corr = atoms.ad_mul(&residual);
        let mut best = usize::MAX;
        let mut best_mag = -1.0;
        for (j, c) in corr.iter().enumerate() {
            if selected[j] {
                continue;
            }
            let mag = c.norm();
            if mag > best_mag {
                best_mag = mag;
                best = j;
            }
        }
        if best == usize::MAX || best_mag <= floor {
            break;
        }
        selected[best] = true;
        support.push(best);
        let sub = select_columns(atoms, &support);
        coef = least_squares(&sub, &y);
        residual = &y - &sub * &coef;
        r_norm = residual.norm();
        history.push(r_norm);
    }

    let code = SparseCode {
        support,
        coefficients: coef.iter().cloned().collect(),
        residual_norm: r_norm,
    };
    Ok((code, history))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_single_atom() {
        let d = CMat::identity(4, 4);
        let y = [C64::new(0., 0.), C64::new(3., 0.), C64::new(0., 0.), C64::new(0., 0.)];
        let code = omp(&y, &d, StopRule::sparsity(1)).unwrap();
        assert_eq!(code.support, vec![1]);
        assert!((code.coefficients[0] - C64::new(3.0, 0.0)).norm() < 1e-15);
        assert_eq!(code.residual_norm, 0.0);
    }

    #[test]
    fn ties_pick_lowest_index() {
        let d = CMat::identity(3, 3);
        let y = [C64::new(1., 0.), C64::new(0., 1.), C64::new(-1., 0.)];
        let code = omp(&y, &d, StopRule::sparsity(1)).unwrap();
        assert_eq!(code.support, vec![0]);
    }

    #[test]
    fn zero_signal_gives_empty_code() {
        let d = CMat::identity(3, 3);
        let code = omp(&[C64::new(0., 0.); 3], &d, StopRule::tolerance(0.1)).unwrap();
        assert!(code.support.is_empty());
        assert_eq!(code.residual_norm, 0.0);
    }

    #[test]
    fn rejects_bad_arguments() {
        let d = CMat::identity(3, 3);
        let y = [C64::new(1., 0.); 3];
        assert!(omp(&y, &d, StopRule::default()).is_err());
        assert!(omp(&y, &d, StopRule::sparsity(4)).is_err());
        assert!(omp(&y[..2], &d, StopRule::sparsity(1)).is_err());
        assert!(omp(&y, &d, StopRule::tolerance(-1.0)).is_err());
    }
}
