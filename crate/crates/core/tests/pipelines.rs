use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use sparsecs_core::channel::{ofdm_roundtrip, ChannelRealization, FrameSpec, OfdmFrame};
use sparsecs_core::dictionary::{Dictionary, Provenance};
use sparsecs_core::estimator::{Activation, FeatureEncoding, Mlp, RawPart, SparsityRegressor};
use sparsecs_core::pipelines::channel_est::{extend, pilot_ls};
use sparsecs_core::pipelines::{
    count_bands, estimate_dft_known_s, estimate_ls, estimate_oracle, estimate_proposed, estimate_spectrum_sparsity,
    estimate_with_sparsity, read_psd_csv, synthesize_spectrum, write_psd_csv, CodingLayout, EstimateStatus,
    EstimationConfig, Hypothesis, Interpolation, Method, SpectrumConfig,
};
use sparsecs_core::recovery::{omp, StopRule};
use sparsecs_core::{dft, seed, CMat, CVec, C64};

const K: usize = 128;
const BLOCKS: usize = 9;

fn flat() -> ChannelRealization {
    ChannelRealization::from_cfr(CMat::from_element(K, BLOCKS, C64::new(0.8, -0.6)), 1, 0)
}

/// A few delay taps per block with a block-dependent phase ramp.
fn multitap(seed_value: u64) -> ChannelRealization {
    let mut rng = seed::rng(seed_value);
    let taps: Vec<(usize, C64)> =
        [0usize, 2, 5].iter().map(|&t| (t, C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))).collect();
    let cir = CMat::from_fn(K, BLOCKS, |r, c| {
        taps.iter()
            .filter(|(t, _)| *t == r)
            .map(|(t, g)| g * C64::from_polar(1.0, 0.3 * (*t as f64 + 1.0) * c as f64))
            .sum::<C64>()
    });
    ChannelRealization::from_cir(cir, 3, 5)
}

fn frame(ch: &ChannelRealization, snr_db: f64, seed_value: u64) -> OfdmFrame {
    ofdm_roundtrip(ch, &FrameSpec::default(), snr_db, seed_value).unwrap()
}

fn column() -> EstimationConfig {
    EstimationConfig { interpolation: Interpolation::Linear, layout: CodingLayout::Column }
}

/// A regressor that always outputs `s`: zero network, label mean `s`.
fn constant_model(inputs: usize, s: usize, encoding: FeatureEncoding) -> SparsityRegressor {
    SparsityRegressor {
        net: Mlp::zeros(inputs, 2, 1),
        hidden_activation: Activation::Tanh,
        output_activation: Activation::Linear,
        encoding,
        epsilon: 0.1,
        input_mean: vec![0.0; inputs],
        input_scale: vec![1.0; inputs],
        target_mean: s as f64,
        target_std: 1.0,
        max_sparsity: 50,
    }
}

#[test]
fn noiseless_ls_is_exact_at_the_pilots() {
    let ch = multitap(1);
    let f = frame(&ch, f64::INFINITY, 2);
    let ls = pilot_ls(&f);
    for (m, &loc) in f.pilot_locations.iter().enumerate() {
        for i in 0..BLOCKS {
            assert!((ls[(m, i)] - ch.cfr[(loc, i)]).norm() < 1e-12);
        }
    }
    let zf = extend(&f, &ls, Interpolation::ZeroFill);
    assert!(zf.row(f.used.start + 1).iter().all(|z| z.norm() == 0.0));
}

#[test]
fn flat_channel_is_recovered_exactly_by_every_interpolation() {
    let f = frame(&flat(), f64::INFINITY, 3);
    for interpolation in [Interpolation::Linear, Interpolation::DelayDomain] {
        for layout in [CodingLayout::Column, CodingLayout::PilotGrid] {
            let est = estimate_ls(&f, &EstimationConfig { interpolation, layout });
            assert!(est.mse < 1e-24, "{interpolation:?}/{layout:?}: {}", est.mse);
            assert_eq!(est.method, Method::Ls);
        }
    }
}

#[test]
fn ls_matches_an_independent_interpolation() {
    let ch = multitap(4);
    let f = frame(&ch, 0.0, 5);
    let est = estimate_ls(&f, &column());
    let locs = &f.pilot_locations;
    let p = FrameSpec::default().pilot_value;
    let mut se = 0.0;
    let mut power = 0.0;
    for i in 0..BLOCKS {
        let at = |m: usize| f.received[(locs[m], i)] / p;
        for j in f.used.clone() {
            // Segment containing j; the last segment extends past the final pilot.
            let m = locs.iter().rposition(|&l| l <= j).unwrap_or(0).min(locs.len() - 2);
            let t = (j as f64 - locs[m] as f64) / (locs[m + 1] - locs[m]) as f64;
            let want = at(m) * (1.0 - t) + at(m + 1) * t;
            assert!((est.h_freq[(j, i)] - want).norm() < 1e-12, "({j}, {i})");
            se += (want - ch.cfr[(j, i)]).norm_sqr();
            power += ch.cfr[(j, i)].norm_sqr();
        }
    }
    assert!((est.mse - se / power).abs() < 1e-12);
    assert!(est.mse > 0.1, "noise at 0 dB should show: {}", est.mse);
}

#[test]
fn dft_baseline_on_a_flat_channel() {
    let cfg = column();
    let clean = frame(&flat(), f64::INFINITY, 6);
    assert!(estimate_dft_known_s(&clean, 1, &cfg).unwrap().mse < 1e-24);

    let noisy = frame(&flat(), 10.0, 7);
    let ls = estimate_ls(&noisy, &cfg);
    let dft1 = estimate_dft_known_s(&noisy, 1, &cfg).unwrap();
    assert!(dft1.mse < 0.1 * ls.mse, "{} vs {}", dft1.mse, ls.mse);
    // With every atom the baseline reproduces LS.
    let all = estimate_dft_known_s(&noisy, noisy.used.len(), &cfg).unwrap();
    assert!((&all.h_freq - &ls.h_freq).norm() < 1e-9 * ls.h_freq.norm());
    assert!(estimate_dft_known_s(&noisy, 0, &cfg).is_err());
}

#[test]
fn dft_baseline_on_the_pilot_grid_transforms_each_block() {
    let cfg = EstimationConfig::pilot_grid();
    let f = frame(&flat(), f64::INFINITY, 8);
    // One DC coefficient per block.
    assert!(estimate_dft_known_s(&f, BLOCKS, &cfg).unwrap().mse < 1e-24);
    assert!(estimate_dft_known_s(&f, BLOCKS - 1, &cfg).unwrap().mse > 1e-2);
}

fn ones_dictionary(n: usize, extra: usize, seed_value: u64) -> Dictionary {
    let mut rng = seed::rng(seed_value);
    let mut cols = CMat::from_fn(n, n + extra, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    cols.set_column(0, &CVec::from_element(n, C64::new(1.0, 0.0)));
    Dictionary::from_columns(cols, Provenance::custom()).unwrap()
}

#[test]
fn proposed_with_a_one_atom_channel() {
    let cfg = EstimationConfig::pilot_grid();
    let f = frame(&flat(), f64::INFINITY, 9);
    let n = cfg.vector_len(&f);
    assert_eq!(n, 29 * BLOCKS);
    let d = ones_dictionary(n, 10, 10);
    let enc = FeatureEncoding { raw: RawPart::Omitted, ..FeatureEncoding::default() };
    let model = constant_model(n, 1, enc);
    let est = estimate_proposed(&f, &d, &model, &cfg).unwrap();
    assert_eq!(est.method, Method::Proposed);
    assert_eq!(est.estimated_sparsity, Some(1));
    assert!(est.mse < 1e-10, "{}", est.mse);
}

#[test]
fn proposed_equals_the_known_sparsity_variant() {
    let cfg = EstimationConfig::pilot_grid();
    let f = frame(&multitap(11), 5.0, 12);
    let n = cfg.vector_len(&f);
    let d = ones_dictionary(n, 40, 13);
    let enc = FeatureEncoding { raw: RawPart::Omitted, ..FeatureEncoding::default() };
    for s in [2, 4, 7] {
        let a = estimate_proposed(&f, &d, &constant_model(n, s, enc), &cfg).unwrap();
        let b = estimate_with_sparsity(&f, &d, s, &cfg).unwrap();
        assert_eq!(a, b);
    }
    let zero = estimate_proposed(&f, &d, &constant_model(n, 0, enc), &cfg).unwrap();
    assert_eq!(zero.status, EstimateStatus::Degenerate);
    assert!((zero.mse - 1.0).abs() < 1e-12);
    assert!(zero.h_freq.iter().all(|z| z.norm() == 0.0));
    // A dictionary of the wrong height is rejected.
    assert!(estimate_with_sparsity(&f, &ones_dictionary(n - 1, 3, 1), 2, &cfg).is_err());
}

#[test]
fn oracle_is_the_projection_onto_the_true_support() {
    let cfg = EstimationConfig::pilot_grid();
    let f = frame(&multitap(14), 3.0, 15);
    let n = cfg.vector_len(&f);
    let d = ones_dictionary(n, 30, 16);
    let y = cfg.observation_vectors(&f).remove(0);
    let support = vec![0usize, 17, 200];
    let code = omp(&y, d.atoms(), StopRule::sparsity(1)).map(|mut c| {
        c.support = support.clone();
        c
    });
    let est = estimate_oracle(&f, &d, &[code.unwrap()], &cfg).unwrap();
    assert_eq!(est.method, Method::Oracle);
    assert_eq!(est.estimated_sparsity, Some(3));

    // Independent projection: A (AᴴA)⁻¹ Aᴴ y with a dense LU solve.
    let a = CMat::from_fn(n, 3, |r, c| d.atoms()[(r, support[c])]);
    let yv = CVec::from_column_slice(&y);
    let gram: DMatrix<C64> = a.adjoint() * &a;
    let coef = gram.lu().solve(&(a.adjoint() * &yv)).unwrap();
    let proj = &a * coef;
    let want = cfg.assemble(&f, &[proj.as_slice().to_vec()]);
    assert!((&est.h_freq - &want).norm() < 1e-10 * want.norm());

    let mut bad = omp(&y, d.atoms(), StopRule::sparsity(1)).unwrap();
    bad.support = vec![d.len()];
    assert!(estimate_oracle(&f, &d, &[bad], &cfg).is_err());
}

#[test]
fn estimates_are_consistent_across_domains() {
    let f = frame(&multitap(17), 10.0, 18);
    let est = estimate_ls(&f, &EstimationConfig::pilot_grid());
    assert!((dft::forward_columns(&est.h_time) - &est.h_freq).norm() < 1e-10 * est.h_freq.norm());
}

#[test]
fn synthetic_spectra_carry_their_band_count() {
    let cfg = SpectrumConfig::default();
    let empty = synthesize_spectrum(0, 10.0, &cfg, 1).unwrap();
    assert!(empty.hypotheses.as_ref().unwrap().iter().all(|h| *h == Hypothesis::H0));
    assert_eq!(empty.occupied_band_count, Some(0));
    for bands in [1, 3, 8] {
        let o = synthesize_spectrum(bands, 10.0, &cfg, bands as u64).unwrap();
        assert_eq!(count_bands(o.hypotheses.as_ref().unwrap()), bands);
        assert_eq!(o.psd_db.len(), 200);
    }
    assert!(synthesize_spectrum(cfg.max_bands() + 1, 10.0, &cfg, 1).is_err());
    assert_eq!(count_bands(&[Hypothesis::H1, Hypothesis::H0, Hypothesis::H1, Hypothesis::H1]), 2);
}

#[test]
fn occupied_bins_carry_the_requested_snr() {
    let cfg = SpectrumConfig::default();
    for snr_db in [0.0, 6.0, 15.0] {
        let (mut on, mut n_on, mut off, mut n_off) = (0.0, 0usize, 0.0, 0usize);
        for s in 0..20 {
            let o = synthesize_spectrum(5, snr_db, &cfg, seed::derive(9, "psd", s)).unwrap();
            for (p, h) in o.psd_db.iter().zip(o.hypotheses.unwrap()) {
                let lin = 10f64.powf(p / 10.0);
                match h {
                    Hypothesis::H1 => {
                        on += lin;
                        n_on += 1;
                    }
                    Hypothesis::H0 => {
                        off += lin;
                        n_off += 1;
                    }
                }
            }
        }
        let ratio_db = 10.0 * ((on / n_on as f64) / (off / n_off as f64)).log10();
        let want = 10.0 * (1.0 + 10f64.powf(snr_db / 10.0)).log10();
        assert!((ratio_db - want).abs() <= 0.3, "{snr_db} dB: measured {ratio_db}, expected {want}");
    }
}

#[test]
fn psd_csv_round_trips() {
    let cfg = SpectrumConfig::default();
    let obs: Vec<_> = (0..10).map(|i| synthesize_spectrum(i % 4, 8.0, &cfg, i as u64).unwrap()).collect();
    let mut buf = Vec::new();
    write_psd_csv(&mut buf, &cfg.geometry, &obs).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert_eq!(text.lines().count(), 12);
    assert!(text.starts_with("bin_hz_start,bin_width_hz,n_bins,labeled\n"));
    let back = read_psd_csv(buf.as_slice()).unwrap();
    assert_eq!(back.len(), 10);
    for (a, b) in obs.iter().zip(&back) {
        assert_eq!(a.psd_db, b.psd_db);
        assert_eq!(a.occupied_band_count, b.occupied_band_count);
        assert_eq!(a.frequencies(), b.frequencies());
    }
}

#[test]
fn malformed_psd_rows_are_rejected_with_a_line_number() {
    let text = "bin_hz_start,bin_width_hz,n_bins\n0,1,3\n1.0,2.0,3.0\n1.0,2.0\n";
    match read_psd_csv(text.as_bytes()) {
        Err(sparsecs_core::Error::Parse { line, .. }) => assert_eq!(line, 4),
        other => panic!("expected a parse error, got {other:?}"),
    }
    assert!(read_psd_csv("freq,power\n".as_bytes()).is_err());
    assert!(read_psd_csv("bin_hz_start,bin_width_hz,n_bins\n0,1,2\n1.0,x\n".as_bytes()).is_err());
    let unlabeled = read_psd_csv("bin_hz_start,bin_width_hz,n_bins\n0,1,2\n1.0,2.0\n".as_bytes()).unwrap();
    assert_eq!(unlabeled[0].occupied_band_count, None);
}

#[test]
fn spectrum_estimate_follows_the_model() {
    let cfg = SpectrumConfig::default();
    let o = synthesize_spectrum(0, 10.0, &cfg, 3).unwrap();
    let enc = FeatureEncoding::default();
    let model = constant_model(3 * 200, 0, enc);
    assert_eq!(estimate_spectrum_sparsity(&o, None, &model).unwrap(), 0);
    let model = constant_model(3 * 200, 4, enc);
    assert_eq!(estimate_spectrum_sparsity(&o, None, &model).unwrap(), 4);
    let dict_model = constant_model(200, 1, FeatureEncoding { transform: sparsecs_core::estimator::TransformKind::Dictionary, ..enc });
    assert!(estimate_spectrum_sparsity(&o, None, &dict_model).is_err());
}
