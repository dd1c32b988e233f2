//! Complex K-SVD.
//!
//! Alternates sparse coding of every training column (OMP, at most `s`
//! atoms) with a sequential update of each atom: the residual restricted to
//! the columns that use the atom is replaced by its best rank-1
//! approximation, computed by power iteration started from the current atom.
//!
//! The objective `‖Y − D W‖²_F` is recorded after every atom-update stage and
//! never increases:
//!
//! * a column keeps its previous code when fresh OMP does worse under the
//!   current dictionary;
//! * the power iteration starts from the current atom, so the rank-1 fit can
//!   only improve on it;
//! * atoms used by no column are replaced by the worst-represented training
//!   column, which leaves `D W` untouched;
//! * near-duplicate atoms are replaced the same way only when re-coding with
//!   the replacement does not raise the objective.

use rayon::prelude::*;

use super::{coherent_pairs, Dictionary, Provenance};
use crate::linalg::dominant_left_singular;
use crate::recovery::{omp, SparseCode, StopRule};
use crate::{CMat, CVec, Error, Result, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct KsvdParams {
    /// Maximum atoms per training column while learning.
    pub target_sparsity: usize,
    /// Number of coding / update rounds (`Num`).
    pub iterations: usize,
    /// Convergence tolerance of the rank-1 power iteration.
    pub power_tolerance: f64,
    pub power_max_iterations: usize,
    /// Atom pairs more coherent than this are de-duplicated (when it helps).
    /// `None` disables the check.
    pub replace_coherence: Option<f64>,
    /// Recorded in the learned dictionary's provenance.
    pub training_set: String,
}

impl Default for KsvdParams {
    fn default() -> Self {
        Self {
            target_sparsity: 5,
            iterations: 20,
            power_tolerance: 1e-10,
            power_max_iterations: 500,
            replace_coherence: Some(0.99),
            training_set: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KsvdOutcome {
    pub dictionary: Dictionary,
    /// `‖Y − D⁰ W⁰‖²_F` with `W⁰` the OMP codes over the initial dictionary.
    pub initial_objective: f64,
    /// Objective after each iteration's atom-update stage.
    pub objective: Vec<f64>,
    /// Atoms replaced (unused or duplicate) over the whole run.
    pub replacements: usize,
}

fn column(y: &CMat, c: usize) -> &[C64] {
    let n = y.nrows();
    &y.as_slice()[c * n..(c + 1) * n]
}

fn code_error(atoms: &CMat, y: &[C64], code: &SparseCode) -> f64 {
    let mut r = CVec::from_column_slice(y);
    for (&j, &a) in code.support.iter().zip(&code.coefficients) {
        r.axpy(-a, &atoms.column(j), C64::new(1.0, 0.0));
    }
    r.norm_squared()
}

/// Codes every column; with `previous`, keeps the old code when it is better.
/// Returns codes and per-column squared errors.
fn code_all(atoms: &CMat, y: &CMat, s: usize, previous: Option<&[SparseCode]>) -> Result<(Vec<SparseCode>, Vec<f64>)> {
    let out: Result<Vec<(SparseCode, f64)>> = (0..y.ncols())
        .into_par_iter()
        .map(|c| {
            let yc = column(y, c);
            let fresh = omp(yc, atoms, StopRule::sparsity(s))?;
            let fresh_err = code_error(atoms, yc, &fresh);
            if let Some(prev) = previous {
                let old_err = code_error(atoms, yc, &prev[c]);
                if old_err < fresh_err {
                    return Ok((prev[c].clone(), old_err));
                }
            }
            Ok((fresh, fresh_err))
        })
        .collect();
    Ok(out?.into_iter().unzip())
}

/// Indices of columns sorted by decreasing error (stable on ties).
fn worst_columns(errors: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..errors.len()).collect();
    idx.sort_by(|&a, &b| errors[b].total_cmp(&errors[a]).then(a.cmp(&b)));
    idx
}

fn unit_column(y: &CMat, c: usize) -> Option<CVec> {
    let v = CVec::from_column_slice(column(y, c));
    let n = v.norm();
    (n > 0.0).then(|| v / C64::new(n, 0.0))
}

/// Learns a dictionary for the columns of `y` starting from `init`.
pub fn ksvd(y: &CMat, init: &Dictionary, params: &KsvdParams) -> Result<KsvdOutcome> {
    let (n, l) = y.shape();
    if init.rows() != n {
        return Err(Error::DimensionMismatch { context: "K-SVD training rows", expected: init.rows(), got: n });
    }
    let s = params.target_sparsity;
    if s == 0 || s > init.len() {
        return Err(Error::InvalidInput(format!("target sparsity must lie in [1, {}], got {s}", init.len())));
    }
    if y.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidInput("training signals contain non-finite values".into()));
    }
    let k = init.len();
    let mut atoms = init.atoms().clone();
    let (mut codes, mut errors) = code_all(&atoms, y, s, None)?;
    let initial_objective: f64 = errors.iter().sum();
    let mut objective = Vec::with_capacity(params.iterations);
    let mut replacements = 0;

    for it in 0..params.iterations {
        if it > 0 {
            let (c, e) = code_all(&atoms, y, s, Some(&codes))?;
            codes = c;
            errors = e;
        }

        // De-duplicate coherent atoms when that does not hurt the fit.
        if let Some(thr) = params.replace_coherence {
            let pairs = coherent_pairs(&atoms, thr);
            if !pairs.is_empty() {
                let mut usage = vec![0usize; k];
                for c in &codes {
                    for &j in &c.support {
                        usage[j] += 1;
                    }
                }
                let mut trial = atoms.clone();
                let mut victims: Vec<usize> = Vec::new();
                for (i, j) in pairs {
                    let v = if usage[i] < usage[j] { i } else { j };
                    let other = if v == i { j } else { i };
                    if !victims.contains(&v) && !victims.contains(&other) {
                        victims.push(v);
                    }
                }
                let worst = worst_columns(&errors);
                let mut w = worst.iter();
                let mut replaced = 0;
                for &v in &victims {
                    if let Some(u) = w.by_ref().find_map(|&c| unit_column(y, c)) {
                        trial.set_column(v, &u);
                        replaced += 1;
                    }
                }
                // Old codes that used a victim are stale; re-code them fresh.
                let cleaned: Vec<SparseCode> = codes
                    .iter()
                    .map(|c| if c.support.iter().any(|j| victims.contains(j)) { SparseCode::default() } else { c.clone() })
                    .collect();
                let (tc, te) = code_all(&trial, y, s, Some(&cleaned))?;
                let before: f64 = errors.iter().sum();
                let after: f64 = te.iter().sum();
                if after <= before {
                    log::debug!("K-SVD iteration {it}: replaced {replaced} near-duplicate atoms");
                    atoms = trial;
                    codes = tc;
                    errors = te;
                    replacements += replaced;
                }
            }
        }

        // Atom users: (column, position in that column's code).
        let mut users: Vec<Vec<(usize, usize)>> = vec![Vec::new(); k];
        for (c, code) in codes.iter().enumerate() {
            for (pos, &j) in code.support.iter().enumerate() {
                users[j].push((c, pos));
            }
        }
        let worst = worst_columns(&errors);
        let mut spare = worst.iter();

        for j in 0..k {
            if users[j].is_empty() {
                if let Some(u) = spare.by_ref().find_map(|&c| unit_column(y, c)) {
                    log::debug!("K-SVD iteration {it}: atom {j} unused, replaced by a training column");
                    atoms.set_column(j, &u);
                    replacements += 1;
                }
                continue;
            }
            // Residual restricted to the users, with atom j's contribution added back.
            let cols: Vec<CVec> = users[j]
                .iter()
                .map(|&(c, _)| {
                    let mut r = CVec::from_column_slice(column(y, c));
                    for (&t, &a) in codes[c].support.iter().zip(&codes[c].coefficients) {
                        if t != j {
                            r.axpy(-a, &atoms.column(t), C64::new(1.0, 0.0));
                        }
                    }
                    r
                })
                .collect();
            let e = CMat::from_columns(&cols);
            let start: CVec = atoms.column(j).into_owned();
            let (u, _) = dominant_left_singular(&e, &start, params.power_tolerance, params.power_max_iterations);
            let u = u.normalize();
            let x = e.ad_mul(&u); // σ v = Eᴴ u  →  row coefficients are conj
            for (idx, &(c, pos)) in users[j].iter().enumerate() {
                codes[c].coefficients[pos] = x[idx].conj();
            }
            atoms.set_column(j, &u);
        }

        let obj: f64 = (0..l)
            .into_par_iter()
            .map(|c| code_error(&atoms, column(y, c), &codes[c]))
            .collect::<Vec<_>>()
            .into_iter()
            .sum();
        for (c, code) in codes.iter_mut().enumerate() {
            code.residual_norm = code_error(&atoms, column(y, c), code).sqrt();
        }
        errors = codes.iter().map(|c| c.residual_norm * c.residual_norm).collect();
        if !obj.is_finite() {
            return Err(Error::Numerical(format!("K-SVD objective became {obj} at iteration {it}")));
        }
        objective.push(obj);
    }

    let provenance = Provenance {
        init: init.provenance.init,
        iterations: params.iterations,
        target_sparsity: s,
        training_set: params.training_set.clone(),
    };
    Ok(KsvdOutcome { dictionary: Dictionary::new(atoms, provenance)?, initial_objective, objective, replacements })
}
