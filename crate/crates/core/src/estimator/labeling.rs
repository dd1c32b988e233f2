use crate::recovery::{omp, StopRule};
use crate::{CMat, Error, Result, C64};

/// Sparsity label of `y` over `atoms`: the number of atoms tolerance-stopped
/// OMP selects before `‖residual‖ ≤ ε·‖y‖`.
///
/// The tolerance is relative so that labels do not depend on signal power.
/// When OMP runs out of atoms without reaching the tolerance the label is
/// the atom count `k` and a warning is logged.
pub fn label_sparsity(y: &[C64], atoms: &CMat, epsilon: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidInput(format!("labelling tolerance must be positive, got {epsilon}")));
    }
    let y_norm = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if y_norm == 0.0 {
        return Ok(0);
    }
    let tol = epsilon * y_norm;
    let code = omp(y, atoms, StopRule::tolerance(tol))?;
    if code.residual_norm > tol {
        log::warn!(
            "labelling did not reach tolerance {tol:.3e} (residual {:.3e}); using k = {}",
            code.residual_norm,
            atoms.ncols()
        );
        return Ok(atoms.ncols());
    }
    Ok(code.sparsity())
}

/// Agreement between labels and construction sparsity per candidate ε.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    /// Chosen tolerance: the largest candidate reaching `target` agreement,
    /// otherwise the candidate with the highest agreement.
    pub epsilon: f64,
    pub agreement: f64,
    /// `(ε, agreement)` for every candidate, in the order given.
    pub table: Vec<(f64, f64)>,
}

/// Evaluates candidate tolerances on signals with known construction sparsity.
pub fn calibrate_epsilon(
    signals: &[Vec<C64>],
    truth: &[usize],
    atoms: &CMat,
    candidates: &[f64],
    target: f64,
) -> Result<Calibration> {
    if signals.len() != truth.len() || signals.is_empty() || candidates.is_empty() {
        return Err(Error::InvalidInput("calibration needs matching, non-empty signals and candidates".into()));
    }
    let mut table = Vec::with_capacity(candidates.len());
    for &eps in candidates {
        let mut hits = 0usize;
        for (y, &t) in signals.iter().zip(truth) {
            if label_sparsity(y, atoms, eps)? == t {
                hits += 1;
            }
        }
        table.push((eps, hits as f64 / signals.len() as f64));
    }
    let pick = table
        .iter()
        .filter(|(_, a)| *a >= target)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .or_else(|| table.iter().max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.total_cmp(&a.0))))
        .copied()
        .expect("non-empty table");
    Ok(Calibration { epsilon: pick.0, agreement: pick.1, table })
}
