//! Small dense complex linear-algebra helpers.
//!
//! Least squares goes through the normal equations with a Cholesky
//! factorisation; a pivot below [`PIVOT_TOLERANCE`] (relative to the largest
//! Gram diagonal) marks the columns as numerically dependent and the solve
//! falls back to an SVD pseudoinverse truncated at the same relative level.

use crate::{CMat, CVec, C64};

/// Relative pivot tolerance of the normal-equation solve.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// Cholesky solve of the Hermitian system `g x = b`.
///
/// Returns `None` when a pivot falls below `PIVOT_TOLERANCE · max diag(g)`.
pub fn cholesky_solve(g: &CMat, b: &CVec) -> Option<CVec> {
    let n = g.nrows();
    debug_assert_eq!(n, g.ncols());
    debug_assert_eq!(n, b.len());
    if n == 0 {
        return Some(CVec::zeros(0));
    }
    let max_diag = (0..n).map(|i| g[(i, i)].re).fold(0.0_f64, f64::max);
    if !(max_diag > 0.0) || !max_diag.is_finite() {
        return None;
    }
    let tol = PIVOT_TOLERANCE * max_diag;
    let mut l = CMat::zeros(n, n);
    for j in 0..n {
        let mut d = g[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > tol) {
            return None;
        }
        let d = d.sqrt();
        l[(j, j)] = C64::new(d, 0.0);
        for i in (j + 1)..n {
            let mut acc = g[(i, j)];
            for k in 0..j {
                acc -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = acc / d;
        }
    }
    // forward: l z = b
    let mut z = b.clone();
    for i in 0..n {
        let mut acc = z[i];
        for k in 0..i {
            acc -= l[(i, k)] * z[k];
        }
        z[i] = acc / l[(i, i)];
    }
    // backward: l^H x = z
    let mut x = z;
    for i in (0..n).rev() {
        let mut acc = x[i];
        for k in (i + 1)..n {
            acc -= l[(k, i)].conj() * x[k];
        }
        x[i] = acc / l[(i, i)];
    }
    Some(x)
}

/// Minimum-norm least-squares solution through a truncated SVD.
pub fn pinv_solve(a: &CMat, b: &CVec) -> CVec {
    if a.ncols() == 0 {
        return CVec::zeros(0);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let cutoff = PIVOT_TOLERANCE.sqrt() * smax;
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let mut x = CVec::zeros(a.ncols());
    for (i, &sv) in svd.singular_values.iter().enumerate() {
        if sv > cutoff && sv > 0.0 {
            let coef = u.column(i).dotc(b) / sv;
            for j in 0..a.ncols() {
                x[j] += vt[(i, j)].conj() * coef;
            }
        }
    }
    x
}

/// Least-squares coefficients `argmin_x ‖a x − b‖₂`.
///
/// Normal equations with Cholesky; numerically dependent columns trigger the
/// pseudoinverse fallback (logged at debug level).
pub fn least_squares(a: &CMat, b: &CVec) -> CVec {
    let g = a.ad_mul(a);
    let rhs = a.ad_mul(b);
    match cholesky_solve(&g, &rhs) {
        Some(x) => x,
        None => {
            log::debug!(
                "normal equations rank-deficient ({} columns); using pseudoinverse",
                a.ncols()
            );
            pinv_solve(a, b)
        }
    }
}

/// Columns of `m` selected by `idx`.
pub fn select_columns(m: &CMat, idx: &[usize]) -> CMat {
    CMat::from_fn(m.nrows(), idx.len(), |r, c| m[(r, idx[c])])
}

/// Scales every column to unit Euclidean norm and returns the original norms.
/// Zero columns are left untouched (their returned norm is 0).
pub fn normalize_columns(m: &mut CMat) -> Vec<f64> {
    let mut norms = Vec::with_capacity(m.ncols());
    for mut col in m.column_iter_mut() {
        let nrm = col.norm();
        if nrm > 0.0 {
            col /= C64::new(nrm, 0.0);
        }
        norms.push(nrm);
    }
    norms
}

/// Dominant singular triplet `(u, σ)` of `e` by power iteration on `e eᴴ`,
/// started from `init` (which must be nonzero).
///
/// The Rayleigh quotient of a power iteration never decreases, so the
/// returned `u` captures at least as much of `e` as the starting vector.
/// The right factor is `σ vᴴ = uᴴ e`, which callers compute directly.
pub fn dominant_left_singular(e: &CMat, init: &CVec, tol: f64, max_iter: usize) -> (CVec, f64) {
    let mut u = init.normalize();
    let mut sigma = e.ad_mul(&u).norm();
    for _ in 0..max_iter {
        let v = e.ad_mul(&u);
        let w = e * &v;
        let nrm = w.norm();
        if nrm == 0.0 {
            break;
        }
        let next = w / C64::new(nrm, 0.0);
        // Compare up to the (irrelevant) global phase.
        let overlap = next.dotc(&u).norm();
        u = next;
        let s_new = e.ad_mul(&u).norm();
        let converged = (1.0 - overlap).abs() < tol;
        sigma = s_new;
        if converged {
            break;
        }
    }
    (u, sigma)
}

/// Normalised squared error `‖reference − estimate‖² / ‖reference‖²`.
/// Returns the plain squared error when the reference is zero.
pub fn nmse(reference: &[C64], estimate: &[C64]) -> f64 {
    debug_assert_eq!(reference.len(), estimate.len());
    let mut num = 0.0;
    let mut den = 0.0;
    for (r, e) in reference.iter().zip(estimate) {
        num += (r - e).norm_sqr();
        den += r.norm_sqr();
    }
    if den > 0.0 {
        num / den
    } else {
        num
    }
}
