use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use sparsecs_core::linalg::normalize_columns;
use sparsecs_core::recovery::{
    compressive_recover, dft_sparsity, omp, omp_traced, reconstruct, recommended_measurements, MeasurementMatrix, SparseCode,
    StopRule,
};
use sparsecs_core::{dft, seed, CMat, CVec, Error, C64};

fn cn<R: Rng>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

fn gaussian_atoms(n: usize, k: usize, seed_value: u64) -> CMat {
    let mut rng = seed::rng(seed_value);
    let mut d = CMat::from_fn(n, k, |_, _| cn(&mut rng));
    normalize_columns(&mut d);
    d
}

fn combine(d: &CMat, support: &[usize], coef: &[C64]) -> Vec<C64> {
    let mut y = vec![C64::new(0.0, 0.0); d.nrows()];
    for (&j, &c) in support.iter().zip(coef) {
        for (yi, a) in y.iter_mut().zip(d.column(j).iter()) {
            *yi += c * a;
        }
    }
    y
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Least squares on a fixed support via the normal equations, solved with
/// nalgebra's LU — independent of the crate's own solver.
fn projection_oracle(d: &CMat, support: &[usize], y: &[C64]) -> (Vec<C64>, f64) {
    let a = CMat::from_fn(d.nrows(), support.len(), |r, c| d[(r, support[c])]);
    let g = a.adjoint() * &a;
    let b = a.adjoint() * CVec::from_column_slice(y);
    let x = g.lu().solve(&b).expect("full-rank support");
    let r = CVec::from_column_slice(y) - &a * &x;
    (x.iter().cloned().collect(), r.norm())
}

#[test]
fn identity_dictionary_picks_the_single_entry() {
    let d = CMat::identity(4, 4);
    let y = [C64::new(0.0, 0.0), C64::new(3.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
    let code = omp(&y, &d, StopRule::sparsity(1)).unwrap();
    assert_eq!(code.support, vec![1]);
    assert!((code.coefficients[0] - C64::new(3.0, 0.0)).norm() < 1e-15);
    assert!(code.residual_norm < 1e-15);
}

#[test]
fn two_sparse_gaussian_recovery() {
    let d = gaussian_atoms(64, 128, 7);
    let mut rng = seed::rng(8);
    for _ in 0..50 {
        let support: Vec<usize> = index::sample(&mut rng, 128, 2).into_vec();
        let coef = [cn(&mut rng), cn(&mut rng)];
        let y = combine(&d, &support, &coef);
        let code = omp(&y, &d, StopRule::sparsity(2)).unwrap();
        let mut got = code.support.clone();
        got.sort_unstable();
        let mut want = support.clone();
        want.sort_unstable();
        assert_eq!(got, want);
        assert!(code.residual_norm < 1e-10);
    }
}

#[test]
fn complete_basis_gives_exact_representation() {
    let d = gaussian_atoms(12, 12, 3);
    let mut rng = seed::rng(4);
    let y: Vec<C64> = (0..12).map(|_| cn(&mut rng)).collect();
    let code = omp(&y, &d, StopRule::sparsity(12)).unwrap();
    assert!(code.residual_norm < 1e-9 * norm(&y));
}

#[test]
fn zero_signal_gives_empty_code() {
    let d = gaussian_atoms(8, 16, 1);
    let code = omp(&[C64::new(0.0, 0.0); 8], &d, StopRule::both(3, 0.1)).unwrap();
    assert!(code.support.is_empty());
    assert_eq!(code.residual_norm, 0.0);
}

#[test]
fn invalid_stop_rules_are_rejected() {
    let d = gaussian_atoms(8, 16, 1);
    let y = vec![C64::new(1.0, 0.0); 8];
    assert!(omp(&y, &d, StopRule { max_sparsity: None, tolerance: None }).is_err());
    assert!(omp(&y, &d, StopRule::sparsity(17)).is_err());
    assert!(matches!(omp(&y[..7], &d, StopRule::sparsity(2)), Err(Error::DimensionMismatch { .. })));
}

#[test]
fn exact_ties_pick_the_lowest_index() {
    let mut d = CMat::zeros(2, 3);
    d[(0, 0)] = C64::new(1.0, 0.0);
    d[(1, 1)] = C64::new(1.0, 0.0);
    d[(0, 2)] = C64::new(1.0, 0.0);
    let y = [C64::new(1.0, 0.0), C64::new(1.0, 0.0)];
    let code = omp(&y, &d, StopRule::sparsity(1)).unwrap();
    assert_eq!(code.support, vec![0]);
}

#[test]
fn residual_is_orthogonal_and_non_increasing() {
    let d = gaussian_atoms(32, 80, 11);
    let mut rng = seed::rng(12);
    for _ in 0..40 {
        let y: Vec<C64> = (0..32).map(|_| cn(&mut rng)).collect();
        let (code, history) = omp_traced(&y, &d, StopRule::sparsity(10)).unwrap();
        assert!(history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        let r = CVec::from_column_slice(&y) - reconstruct(&d, &code);
        for &j in &code.support {
            let ip = d.column(j).dotc(&r);
            assert!(ip.norm() <= 1e-8 * norm(&y));
        }
        assert!((r.norm() - code.residual_norm).abs() < 1e-10);
    }
}

#[test]
fn coefficients_match_the_projection_oracle() {
    let d = gaussian_atoms(24, 40, 21);
    let mut rng = seed::rng(22);
    for _ in 0..20 {
        let y: Vec<C64> = (0..24).map(|_| cn(&mut rng)).collect();
        let code = omp(&y, &d, StopRule::sparsity(6)).unwrap();
        let (want, res) = projection_oracle(&d, &code.support, &y);
        for (a, b) in code.coefficients.iter().zip(&want) {
            assert!((a - b).norm() < 1e-9);
        }
        assert!((code.residual_norm - res).abs() < 1e-9);
    }
}

#[test]
fn tolerance_stop_meets_its_bound() {
    let d = gaussian_atoms(16, 40, 5);
    let mut rng = seed::rng(6);
    for eps in [1e-6, 0.1, 0.5, 1.5] {
        let y: Vec<C64> = (0..16).map(|_| cn(&mut rng)).collect();
        let code = omp(&y, &d, StopRule::tolerance(eps)).unwrap();
        let yhat = reconstruct(&d, &code);
        let r = (CVec::from_column_slice(&y) - yhat).norm();
        assert!(r <= eps + 1e-12, "ε = {eps}, residual {r}");
    }
}

#[test]
fn single_atom_choice_matches_exhaustive_search() {
    let mut rng = seed::rng(30);
    for t in 0..200 {
        let n = 2 + t % 7;
        let k = n + t % 3;
        let d = gaussian_atoms(n, k, 1000 + t as u64);
        let y: Vec<C64> = (0..n).map(|_| cn(&mut rng)).collect();
        let code = omp(&y, &d, StopRule::sparsity(1)).unwrap();
        let yv = CVec::from_column_slice(&y);
        let mut best = (0, f64::INFINITY);
        for j in 0..k {
            let c = d.column(j).dotc(&yv);
            let r = (&yv - d.column(j) * c).norm();
            if r < best.1 - 1e-15 {
                best = (j, r);
            }
        }
        assert_eq!(code.support[0], best.0);
    }
}

#[test]
fn two_atom_quality_against_exhaustive_support_search() {
    let mut rng = seed::rng(31);
    let trials = 200;
    let mut within = 0;
    for t in 0..trials {
        let (n, k) = (8, 10);
        let d = gaussian_atoms(n, k, 2000 + t as u64);
        let y: Vec<C64> = (0..n).map(|_| cn(&mut rng)).collect();
        let code = omp(&y, &d, StopRule::sparsity(2)).unwrap();
        let mut best = f64::INFINITY;
        for a in 0..k {
            for b in a + 1..k {
                best = best.min(projection_oracle(&d, &[a, b], &y).1);
            }
        }
        if code.residual_norm <= 1.5 * best {
            within += 1;
        }
    }
    let rate = within as f64 / trials as f64;
    println!("OMP within 1.5× of the best 2-atom residual in {:.1}% of trials", 100.0 * rate);
    assert!(rate >= 0.95, "rate {rate}");
}

fn tone(n: usize, bin: usize) -> Vec<C64> {
    (0..n).map(|j| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * (bin * j) as f64 / n as f64)).collect()
}

#[test]
fn dft_sparsity_examples() {
    for eta in [0.1, 0.5, 0.99, 1.0] {
        assert_eq!(dft_sparsity(&tone(32, 5), eta).unwrap(), 1);
    }
    let mut y = tone(64, 3);
    for (a, (b, c)) in y.iter_mut().zip(tone(64, 17).into_iter().zip(tone(64, 40))) {
        *a += b + c;
    }
    assert_eq!(dft_sparsity(&y, 0.99).unwrap(), 3);
    // Oracle: sort the DFT energies directly.
    let mut e: Vec<f64> = dft::forward(&y).iter().map(|c| c.norm_sqr()).collect();
    e.sort_by(|a, b| b.total_cmp(a));
    assert!(e[3] < 1e-20 && e[2] > 1.0);

    let mut rng = seed::rng(2);
    let dense: Vec<C64> = (0..50).map(|_| cn(&mut rng)).collect();
    assert_eq!(dft_sparsity(&dense, 1.0).unwrap(), 50);
    assert_eq!(dft_sparsity(&[C64::new(0.0, 0.0); 9], 0.99).unwrap(), 0);
    assert!(dft_sparsity(&dense, 0.0).is_err());
    assert!(dft_sparsity(&dense, 1.1).is_err());
}

#[test]
fn impulse_has_a_flat_spectrum() {
    let mut y = vec![C64::new(0.0, 0.0); 40];
    y[0] = C64::new(1.0, 0.0);
    // Each bin holds 1/40 of the energy.
    assert_eq!(dft_sparsity(&y, 0.5).unwrap(), 20);
    assert_eq!(dft_sparsity(&y, 0.99).unwrap(), 40);
}

#[test]
fn row_selector_with_identity_recovers_sampled_spike() {
    let phi = MeasurementMatrix::row_selector(8, 20).unwrap();
    let psi = CMat::identity(20, 20);
    let mut y = vec![C64::new(0.0, 0.0); 20];
    y[5] = C64::new(2.0, -1.0);
    let yc = phi.measure(&y).unwrap();
    let code = compressive_recover(yc.as_slice(), &phi, &psi, 1).unwrap();
    assert_eq!(code.support, vec![5]);
    let yhat = reconstruct(&psi, &code);
    assert!((yhat - CVec::from_column_slice(&y)).norm() < 1e-12);
}

#[test]
fn gaussian_measurements_recover_three_sparse_signals() {
    let (m, n, s) = (32, 128, 3);
    let psi = CMat::identity(n, n);
    let mut rng = seed::rng(40);
    let trials = 500;
    let mut hits = 0;
    for t in 0..trials {
        let phi = MeasurementMatrix::gaussian(m, n, seed::derive(41, "phi", t)).unwrap();
        let support: Vec<usize> = index::sample(&mut rng, n, s).into_vec();
        let coef: Vec<C64> = (0..s).map(|_| cn(&mut rng)).collect();
        let y = combine(&psi, &support, &coef);
        let code = compressive_recover(phi.measure(&y).unwrap().as_slice(), &phi, &psi, s).unwrap();
        let mut got = code.support.clone();
        got.sort_unstable();
        let mut want = support;
        want.sort_unstable();
        if got == want {
            hits += 1;
        }
    }
    let rate = hits as f64 / trials as f64;
    assert!(rate >= 0.95, "support recovery rate {rate}");
}

#[test]
fn compressive_edge_cases() {
    let phi = MeasurementMatrix::gaussian(4, 10, 1).unwrap();
    let psi = CMat::identity(10, 10);
    let yc = vec![C64::new(1.0, 0.0); 4];
    let code = compressive_recover(&yc, &phi, &psi, 0).unwrap();
    assert!(code.support.is_empty());
    assert_eq!(reconstruct(&psi, &code).norm(), 0.0);
    assert!(matches!(compressive_recover(&yc, &phi, &psi, 5), Err(Error::Underdetermined { s: 5, m: 4 })));
    assert!(MeasurementMatrix::gaussian(10, 10, 0).is_err());
    assert!(recommended_measurements(3, 128, 2.0) >= 2 * 3);
}

#[test]
fn reconstruct_examples() {
    let d = gaussian_atoms(6, 9, 3);
    assert_eq!(reconstruct(&d, &SparseCode::default()).norm(), 0.0);
    let one = SparseCode { support: vec![4], coefficients: vec![C64::new(1.0, 0.0)], residual_norm: 0.0 };
    assert_eq!(reconstruct(&d, &one), d.column(4).into_owned());
}
