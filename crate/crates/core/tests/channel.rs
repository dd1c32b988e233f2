use std::f64::consts::PI;

use approx::assert_relative_eq;
use sparsecs_core::channel::vcm::{Aggregation, PhysicalPath, Placement, SparsityRange, VcmConfig, VirtualCoefficients};
use sparsecs_core::channel::{
    aggregate_physical_paths, dirichlet_kernel, draw_virtual_coefficients, gscm_channel, gscm_response, ofdm_roundtrip,
    sinc2d, ula_response, ula_steering, vcm_cfr, vcm_cfr_pair, ChannelRealization, FrameSpec, GscmConfig, GscmPath,
};
use sparsecs_core::{dft, seed, CMat, C64, Error};

fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[test]
fn dirichlet_values() {
    for n in [1, 2, 7, 50] {
        assert_relative_eq!(dirichlet_kernel(n, 0.0).re, 1.0, epsilon = 1e-14);
        assert!(dirichlet_kernel(n, 0.0).im.abs() < 1e-14);
    }
    // (1/4)(1 − j − 1 + j)
    assert!(dirichlet_kernel(4, 0.25).norm() < 1e-14);
    // Direct summation at an arbitrary point.
    let (n, th) = (9, 0.137);
    let direct: C64 = (0..n).map(|a| C64::from_polar(1.0, -2.0 * PI * a as f64 * th)).sum::<C64>() / n as f64;
    assert!((dirichlet_kernel(n, th) - direct).norm() < 1e-13);
}

#[test]
fn sinc2d_values() {
    assert!((sinc2d(0.0, 0.0) - C64::new(1.0, 0.0)).norm() < 1e-14);
    assert!(sinc2d(1.0, 0.0).norm() < 1e-14);
    let expected = C64::from_polar((2.0 / PI).powi(2), -PI / 2.0);
    assert!((sinc2d(0.5, 0.5) - expected).norm() < 1e-14);
}

#[test]
fn kernels_are_bounded_on_a_grid() {
    for i in 0..1000 {
        let t = -3.0 + 6.0 * i as f64 / 999.0;
        for n in [1, 3, 16] {
            assert!(dirichlet_kernel(n, t).norm() <= 1.0 + 1e-12);
        }
        assert!(sinc2d(t, 0.7 * t - 0.3).norm() <= 1.0 + 1e-12);
    }
}

#[test]
fn single_path_gscm_is_the_broadside_steering_vector() {
    let h = gscm_response(8, &[GscmPath { gain: C64::new(1.0, 0.0), angle: 0.0 }]);
    let a = ula_steering(8, 0.0);
    assert!((&h - &a).norm() < 1e-15);
    assert_relative_eq!(a.norm(), 1.0, epsilon = 1e-14);
    for m in 0..8 {
        assert_relative_eq!(h[m].re, 1.0 / 8f64.sqrt(), epsilon = 1e-14);
    }
}

#[test]
fn gscm_sum_matches_direct_summation() {
    let paths: Vec<GscmPath> = (0..6)
        .map(|i| GscmPath { gain: C64::new(0.3 * i as f64 - 0.7, 0.2 + 0.1 * i as f64), angle: -1.2 + 0.45 * i as f64 })
        .collect();
    let n = 12;
    let h = gscm_response(n, &paths);
    for m in 0..n {
        let mut direct = C64::new(0.0, 0.0);
        for p in &paths {
            let phase = -2.0 * PI * m as f64 * 0.5 * p.angle.sin();
            direct += p.gain * C64::from_polar(1.0 / (n as f64).sqrt(), phase);
        }
        assert!((h[m] - direct).norm() < 1e-13);
    }
    assert_relative_eq!(ula_response(n, 0.4).norm(), 1.0, epsilon = 1e-13);
}

#[test]
fn gscm_is_deterministic_and_counts_paths() {
    let cfg = GscmConfig { num_clusters: 2, subpaths_per_cluster: 3, antenna_count: 16, ..GscmConfig::default() };
    let a = gscm_channel(&cfg, 42).unwrap();
    let b = gscm_channel(&cfg, 42).unwrap();
    let c = gscm_channel(&cfg, 43).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.cir, c.cir);
    assert_eq!(a.true_sparsity, 6);
    assert_eq!(a.cir.shape(), (16, 1));
}

#[test]
fn gscm_rejects_empty_configs() {
    let cfg = GscmConfig { num_clusters: 0, ..GscmConfig::default() };
    assert!(matches!(gscm_channel(&cfg, 1), Err(Error::InvalidConfig(_))));
}

fn fixed_sparsity(s_ang: usize, s_dd: usize, placement: Placement) -> VcmConfig {
    VcmConfig {
        angular_sparsity: SparsityRange::new(s_ang, s_ang),
        delay_doppler_sparsity: SparsityRange::new(s_dd, s_dd),
        placement,
        ..VcmConfig::default()
    }
}

#[test]
fn virtual_coefficient_counts() {
    let hv = draw_virtual_coefficients(&fixed_sparsity(1, 1, Placement::Product), 3).unwrap();
    assert_eq!(hv.nnz(), 1);
    let hv = draw_virtual_coefficients(&fixed_sparsity(2, 3, Placement::Product), 3).unwrap();
    assert_eq!(hv.nnz(), 6);
    let hv = draw_virtual_coefficients(&fixed_sparsity(2, 3, Placement::Union), 3).unwrap();
    assert_eq!(hv.nnz(), 4);
}

#[test]
fn paper_scale_tensor_shape() {
    let cfg = VcmConfig::paper_scale();
    let hv = VirtualCoefficients::zeros(&cfg);
    assert_eq!(hv.shape, [50, 50, 9, 9]);
    assert_eq!(cfg.subcarriers, 128);
    assert_eq!(cfg.guard_band, 32);
}

#[test]
fn excessive_sparsity_is_a_config_error() {
    let cfg = fixed_sparsity(1, 200, Placement::Product);
    assert!(matches!(draw_virtual_coefficients(&cfg, 0), Err(Error::InvalidConfig(_))));
}

#[test]
fn recorded_sparsity_matches_nonzeros() {
    let cfg = VcmConfig::default();
    for s in 0..50 {
        let hv = draw_virtual_coefficients(&cfg, s).unwrap();
        let ch = vcm_cfr(&hv, &cfg).unwrap();
        assert_eq!(ch.true_sparsity, hv.nnz());
        assert!(hv.nnz() >= 1);
    }
}

#[test]
fn single_coefficient_gives_separable_ramps() {
    let cfg = VcmConfig { normalize_power: false, ..VcmConfig::default() };
    let mut hv = VirtualCoefficients::zeros(&cfg);
    let (a, b, c, d) = (3usize, 5usize, 2usize, -1i64);
    let g = C64::new(0.6, -0.8);
    hv.set(a, b, c, d, g);
    let (rx, tx) = (1, 2);
    let ch = vcm_cfr_pair(&hv, &cfg, rx, tx).unwrap();
    let ar = ula_steering(cfg.max_aoas, a as f64 / cfg.max_aoas as f64)[rx];
    let at = ula_steering(cfg.max_aods, b as f64 / cfg.max_aods as f64)[tx];
    let j0 = cfg.first_used();
    for i in 0..cfg.blocks {
        for j in j0..j0 + cfg.used_subcarriers() {
            let t = C64::from_polar(1.0, 2.0 * PI * (d * i as i64) as f64 / cfg.blocks as f64);
            let f = C64::from_polar(1.0, -2.0 * PI * c as f64 * (j - j0) as f64 * cfg.subcarrier_spacing() / cfg.bandwidth);
            let want = g * ar * at.conj() * t * f;
            assert!((ch.cfr[(j, i)] - want).norm() < 1e-12, "({j}, {i})");
        }
    }
    // Rank one: every 2×2 minor of the used grid vanishes.
    let h = &ch.cfr;
    for i in 1..cfg.blocks {
        for j in j0 + 1..j0 + cfg.used_subcarriers() {
            let minor = h[(j, i)] * h[(j0, 0)] - h[(j, 0)] * h[(j0, i)];
            assert!(minor.norm() < 1e-12);
        }
    }
}

#[test]
fn zero_tensor_gives_zero_channel() {
    let cfg = VcmConfig::default();
    let ch = vcm_cfr(&VirtualCoefficients::zeros(&cfg), &cfg).unwrap();
    assert!(ch.cfr.iter().all(|z| *z == C64::new(0.0, 0.0)));
    assert_eq!(ch.true_sparsity, 0);
}

#[test]
fn guard_band_is_zero_and_grid_has_k_rows() {
    let cfg = VcmConfig { subcarriers: 128, guard_band: 32, bandwidth: 96.0 / 1e-4, ..VcmConfig::default() };
    let hv = draw_virtual_coefficients(&cfg, 11).unwrap();
    let ch = vcm_cfr(&hv, &cfg).unwrap();
    assert_eq!(ch.cfr.nrows(), 128);
    let used = cfg.first_used()..cfg.first_used() + cfg.used_subcarriers();
    assert_eq!(used.len(), 96);
    let zero_rows = (0..128).filter(|j| !used.contains(j)).count();
    assert_eq!(zero_rows, 32);
    for j in (0..128).filter(|j| !used.contains(j)) {
        assert!(ch.cfr.row(j).iter().all(|z| z.norm() == 0.0));
    }
}

#[test]
fn cir_and_cfr_are_a_unitary_pair() {
    let cfg = VcmConfig::default();
    for s in 0..10 {
        let ch = vcm_cfr(&draw_virtual_coefficients(&cfg, s).unwrap(), &cfg).unwrap();
        let back = dft::forward_columns(&ch.cir);
        assert!(frobenius(&(&back - &ch.cfr)) <= 1e-10 * frobenius(&ch.cfr));
        assert_relative_eq!(frobenius(&ch.cir), frobenius(&ch.cfr), max_relative = 1e-9);
    }
}

#[test]
fn vcm_is_deterministic() {
    let cfg = VcmConfig::default();
    let a = vcm_cfr(&draw_virtual_coefficients(&cfg, 9).unwrap(), &cfg).unwrap();
    let b = vcm_cfr(&draw_virtual_coefficients(&cfg, 9).unwrap(), &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn on_grid_path_concentrates_in_its_bin() {
    let cfg = VcmConfig::default();
    let frame = cfg.blocks as f64 * cfg.symbol_duration;
    let (a, b, c, d) = (4usize, 7usize, 3usize, 2i64);
    let path = PhysicalPath {
        gain: C64::new(1.0, 0.0),
        aoa: a as f64 / cfg.max_aoas as f64,
        aod: b as f64 / cfg.max_aods as f64,
        delay: c as f64 / cfg.bandwidth,
        doppler: d as f64 / frame,
    };
    let hv = aggregate_physical_paths(&[path], &cfg, Aggregation::Smoothed).unwrap();
    assert!((hv.get(a, b, c, d) - C64::new(1.0, 0.0)).norm() < 1e-9);
    // Every other bin sits on a kernel zero.
    let off: f64 = hv.iter().filter(|(k, _)| *k != (a, b, c, d)).map(|(_, v)| v.norm()).fold(0.0, f64::max);
    assert!(off < 1e-9, "largest off-bin magnitude {off}");

    // Off-grid delay: neighbouring delay bins follow the sinc sidelobes.
    let shifted = PhysicalPath { delay: (c as f64 + 0.3) / cfg.bandwidth, ..path };
    let hv = aggregate_physical_paths(&[shifted], &cfg, Aggregation::Smoothed).unwrap();
    for cc in 0..cfg.max_delays {
        let want = sinc2d(0.0, cc as f64 - c as f64 - 0.3);
        assert!((hv.get(a, b, cc, d) - want).norm() < 1e-9);
    }
}

#[test]
fn four_subpaths_in_a_bin_add_up() {
    let cfg = VcmConfig::default();
    let frame = cfg.blocks as f64 * cfg.symbol_duration;
    let (a, b, c, d) = (2usize, 2usize, 1usize, 0i64);
    let paths: Vec<PhysicalPath> = (0..4)
        .map(|i| PhysicalPath {
            gain: C64::new(0.5 + 0.1 * i as f64, -0.2 * i as f64),
            aoa: (a as f64 + 0.05 * i as f64) / cfg.max_aoas as f64,
            aod: (b as f64 - 0.04 * i as f64) / cfg.max_aods as f64,
            delay: (c as f64 + 0.1 * i as f64) / cfg.bandwidth,
            doppler: (d as f64 - 0.07 * i as f64) / frame,
        })
        .collect();
    let hv = aggregate_physical_paths(&paths, &cfg, Aggregation::Partitioned).unwrap();
    let want: C64 = paths
        .iter()
        .map(|p| {
            p.gain
                * dirichlet_kernel(cfg.max_aoas, a as f64 / cfg.max_aoas as f64 - p.aoa)
                * dirichlet_kernel(cfg.max_aods, b as f64 / cfg.max_aods as f64 - p.aod).conj()
                * sinc2d(d as f64 - frame * p.doppler, c as f64 - cfg.bandwidth * p.delay)
        })
        .sum();
    assert!((hv.get(a, b, c, d) - want).norm() < 1e-12);
    assert_eq!(hv.nnz(), 1);
}

#[test]
fn zero_gain_paths_give_zero_tensor() {
    let cfg = VcmConfig::default();
    let p = PhysicalPath { gain: C64::new(0.0, 0.0), aoa: 0.1, aod: 0.2, delay: 0.0, doppler: 0.0 };
    let hv = aggregate_physical_paths(&[p, p], &cfg, Aggregation::Smoothed).unwrap();
    assert_eq!(hv.nnz(), 0);
    assert_eq!(aggregate_physical_paths(&[], &cfg, Aggregation::Smoothed).unwrap().nnz(), 0);
}

fn flat_channel(k: usize, blocks: usize) -> ChannelRealization {
    ChannelRealization::from_cfr(CMat::from_element(k, blocks, C64::new(1.0, 0.0)), 1, 0)
}

#[test]
fn noiseless_unit_channel_receives_the_transmitted_grid() {
    let spec = FrameSpec { guard_band: 0, ..FrameSpec::default() };
    let frame = ofdm_roundtrip(&flat_channel(64, 4), &spec, f64::INFINITY, 5).unwrap();
    assert_eq!(frame.received, frame.data_symbols);
    assert_eq!(frame.noise_variance, 0.0);
}

#[test]
fn pilot_comb_on_128_subcarriers() {
    let spec = FrameSpec { guard_band: 0, ..FrameSpec::default() };
    let frame = ofdm_roundtrip(&flat_channel(128, 2), &spec, 10.0, 1).unwrap();
    assert_eq!(frame.pilot_locations.len(), 32);
    for &p in &frame.pilot_locations {
        assert_eq!(frame.data_symbols[(p, 0)], spec.pilot_value);
    }
}

#[test]
fn empirical_snr_matches_request() {
    let spec = FrameSpec { guard_band: 0, ..FrameSpec::default() };
    let ch = flat_channel(128, 100);
    for snr in [-10.0, 0.0, 7.5] {
        let frame = ofdm_roundtrip(&ch, &spec, snr, seed::derive(3, "snr", 0)).unwrap();
        let clean = frame.data_symbols.component_mul(&ch.cfr);
        let noise = &frame.received - &clean;
        let ps: f64 = clean.iter().map(|z| z.norm_sqr()).sum();
        let pn: f64 = noise.iter().map(|z| z.norm_sqr()).sum();
        let measured = 10.0 * (ps / pn).log10();
        assert!((measured - snr).abs() <= 0.2, "requested {snr}, measured {measured}");
    }
}

#[test]
fn short_cyclic_prefix_is_rejected() {
    let ch = ChannelRealization::from_cfr(CMat::from_element(64, 2, C64::new(1.0, 0.0)), 1, 20);
    let spec = FrameSpec { guard_band: 0, cp_length: 8, ..FrameSpec::default() };
    assert!(matches!(ofdm_roundtrip(&ch, &spec, 0.0, 0), Err(Error::CyclicPrefixTooShort { .. })));
}
