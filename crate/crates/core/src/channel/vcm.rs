//! Virtual channel model.
//!
//! The channel between a receive ULA of `N_R` and a transmit ULA of `N_T`
//! elements is represented on a fixed grid of resolvable angles of arrival
//! `a/N_R`, angles of departure `b/N_T`, delays `c/W` (`c ∈ [0, L)`) and
//! Doppler shifts `d/(B·T)` (`d ∈ [−M, M]`, `B` OFDM blocks of duration `T`
//! per frame):
//!
//! ```text
//! H(t, f) = Σ_{a,b,c,d} H_v(a,b,c,d) a_R(a/N_R) a_Tᴴ(b/N_T) e^{j2π d t/(B T)} e^{−j2π c f/W}
//! ```
//!
//! The Doppler resolution is the inverse of the frame duration: sampling at
//! `t = iT` against a resolution of `1/T` would alias every Doppler bin to
//! zero. Frequencies are measured from the first used subcarrier.

use std::collections::BTreeMap;

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::array::ula_steering;
use super::kernels::{dirichlet_kernel, sinc2d};
use super::ChannelRealization;
use crate::{seed, CMat, Error, Result, C64};

/// How angular and delay-Doppler supports combine into 4-index nonzeros.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    /// Every angular bin crossed with every delay-Doppler bin: `s_ang · s_dd`.
    Product,
    /// Angular bins at the first delay-Doppler bin plus delay-Doppler bins at
    /// the first angular bin: `s_ang + s_dd − 1`.
    Union,
}

/// Inclusive integer interval sparsity levels are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparsityRange {
    pub min: usize,
    pub max: usize,
}

impl SparsityRange {
    pub const fn new(min: usize, max: usize) -> Self {
        Self { min, max }
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> usize {
        rng.random_range(self.min..=self.max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VcmConfig {
    /// `N_R`: receive elements = resolvable angles of arrival.
    pub max_aoas: usize,
    /// `N_T`: transmit elements = resolvable angles of departure.
    pub max_aods: usize,
    /// `L`: resolvable delays.
    pub max_delays: usize,
    /// `M`: Doppler bins are indexed by `d ∈ [−M, M]`.
    pub max_doppler: usize,
    /// `T`: useful OFDM symbol duration in seconds (subcarrier spacing 1/T).
    pub symbol_duration: f64,
    /// `W`: signalling bandwidth in hertz (delay resolution 1/W).
    pub bandwidth: f64,
    /// `K`: FFT size.
    pub subcarriers: usize,
    /// Unused subcarriers, split between the two band edges (extra one on top).
    pub guard_band: usize,
    /// `B`: OFDM blocks per frame.
    pub blocks: usize,
    /// Physical subpaths drawn per occupied virtual bin.
    pub subpaths_per_bin: usize,
    pub angular_sparsity: SparsityRange,
    pub delay_doppler_sparsity: SparsityRange,
    /// Delay bins actually populated: `c ∈ [0, delay_spread)`.
    pub delay_spread: usize,
    /// Doppler bins actually populated: `|d| ≤ doppler_spread`.
    pub doppler_spread: usize,
    pub placement: Placement,
    /// Scale every realization to unit mean power over the used subcarriers.
    pub normalize_power: bool,
}

impl Default for VcmConfig {
    /// Desk-scale grid: 48-point FFT with 36 used subcarriers, 9 blocks, 9 × 9
    /// delay-Doppler bins and 16 × 16 antennas.
    fn default() -> Self {
        let symbol_duration = 1e-4;
        Self {
            max_aoas: 16,
            max_aods: 16,
            max_delays: 9,
            max_doppler: 4,
            symbol_duration,
            bandwidth: 36.0 / symbol_duration,
            subcarriers: 48,
            guard_band: 12,
            blocks: 9,
            subpaths_per_bin: 4,
            angular_sparsity: SparsityRange::new(1, 10),
            delay_doppler_sparsity: SparsityRange::new(1, 10),
            delay_spread: 9,
            doppler_spread: 4,
            placement: Placement::Product,
            normalize_power: true,
        }
    }
}

impl VcmConfig {
    /// Grid sizes of the simulation-parameter table: 50 × 50 antennas,
    /// 128 subcarriers with a 32-subcarrier guard band, 9 delays, 9 Doppler
    /// shifts, 4 subpaths per bin.
    pub fn paper_scale() -> Self {
        let symbol_duration = 1e-4;
        Self {
            max_aoas: 50,
            max_aods: 50,
            subcarriers: 128,
            guard_band: 32,
            bandwidth: 96.0 / symbol_duration,
            ..Self::default()
        }
    }

    pub fn subcarrier_spacing(&self) -> f64 {
        1.0 / self.symbol_duration
    }

    pub fn doppler_bins(&self) -> usize {
        2 * self.max_doppler + 1
    }

    pub fn used_subcarriers(&self) -> usize {
        self.subcarriers - self.guard_band
    }

    /// First used subcarrier index.
    pub fn first_used(&self) -> usize {
        self.guard_band / 2
    }

    pub fn angular_bins(&self) -> usize {
        self.max_aoas * self.max_aods
    }

    /// Populated delay-Doppler bins.
    pub fn delay_doppler_bins(&self) -> usize {
        self.delay_spread * (2 * self.doppler_spread + 1)
    }

    /// Largest delay in samples of the `K/T` sampling clock.
    pub fn delay_spread_samples(&self) -> usize {
        let tau_max = self.delay_spread.saturating_sub(1) as f64 / self.bandwidth;
        let fs = self.subcarriers as f64 / self.symbol_duration;
        (tau_max * fs - 1e-9).ceil().max(0.0) as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.max_aoas == 0 || self.max_aods == 0 || self.max_delays == 0 {
            return bad("VCM needs N_R, N_T, L ≥ 1".into());
        }
        if self.subcarriers == 0 || self.guard_band >= self.subcarriers {
            return bad(format!(
                "guard band {} leaves no used subcarriers out of {}",
                self.guard_band, self.subcarriers
            ));
        }
        if !(self.symbol_duration > 0.0 && self.bandwidth > 0.0) {
            return bad("symbol duration and bandwidth must be positive".into());
        }
        if self.blocks == 0 || self.subpaths_per_bin == 0 {
            return bad("blocks and subpaths per bin must be ≥ 1".into());
        }
        // Resolvable delays must fit in the useful symbol: L/W ≤ T.
        if self.max_delays as f64 > self.bandwidth * self.symbol_duration * (1.0 + 1e-12) {
            return bad(format!(
                "L = {} delays exceed W·T = {:.3}",
                self.max_delays,
                self.bandwidth * self.symbol_duration
            ));
        }
        if self.delay_spread == 0 || self.delay_spread > self.max_delays {
            return bad(format!("delay spread must lie in [1, L = {}]", self.max_delays));
        }
        if self.doppler_spread > self.max_doppler {
            return bad(format!("Doppler spread must lie in [0, M = {}]", self.max_doppler));
        }
        for (name, r, bins) in [
            ("angular", self.angular_sparsity, self.angular_bins()),
            ("delay-Doppler", self.delay_doppler_sparsity, self.delay_doppler_bins()),
        ] {
            if r.min == 0 || r.min > r.max {
                return bad(format!("{name} sparsity range [{}, {}] is empty or contains 0", r.min, r.max));
            }
            if r.max > bins {
                return bad(format!("{name} sparsity up to {} exceeds the {bins} available bins", r.max));
            }
        }
        Ok(())
    }
}

/// Sparse 4-index tensor `H_v(a, b, c, d)` of shape `(N_R, N_T, L, 2M+1)`.
/// Doppler indices are signed, `d ∈ [−M, M]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VirtualCoefficients {
    pub shape: [usize; 4],
    entries: BTreeMap<(usize, usize, usize, i64), C64>,
}

impl VirtualCoefficients {
    pub fn zeros(config: &VcmConfig) -> Self {
        Self {
            shape: [config.max_aoas, config.max_aods, config.max_delays, config.doppler_bins()],
            entries: BTreeMap::new(),
        }
    }

    pub fn max_doppler(&self) -> i64 {
        (self.shape[3] as i64 - 1) / 2
    }

    fn check(&self, a: usize, b: usize, c: usize, d: i64) {
        assert!(
            a < self.shape[0] && b < self.shape[1] && c < self.shape[2] && d.abs() <= self.max_doppler(),
            "virtual index ({a},{b},{c},{d}) outside shape {:?}",
            self.shape
        );
    }

    pub fn get(&self, a: usize, b: usize, c: usize, d: i64) -> C64 {
        self.entries.get(&(a, b, c, d)).copied().unwrap_or_default()
    }

    pub fn set(&mut self, a: usize, b: usize, c: usize, d: i64, v: C64) {
        self.check(a, b, c, d);
        if v == C64::new(0.0, 0.0) {
            self.entries.remove(&(a, b, c, d));
        } else {
            self.entries.insert((a, b, c, d), v);
        }
    }

    pub fn add(&mut self, a: usize, b: usize, c: usize, d: i64, v: C64) {
        let cur = self.get(a, b, c, d);
        self.set(a, b, c, d, cur + v);
    }

    /// Number of nonzero entries.
    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Nonzero entries in lexicographic index order.
    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize, usize, i64), C64)> + '_ {
        self.entries.iter().map(|(k, v)| (*k, *v))
    }

    /// Occupied delay-Doppler bins `(c, d)` in order.
    pub fn delay_doppler_support(&self) -> Vec<(usize, i64)> {
        let mut s: Vec<(usize, i64)> = self.entries.keys().map(|&(_, _, c, d)| (c, d)).collect();
        s.sort_unstable();
        s.dedup();
        s
    }
}

/// Which domain a draw is made strongly sparse in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainFocus {
    /// Independent angular and delay-Doppler sparsity from the configured ranges.
    Mixed,
    /// One angular bin and one delay-Doppler bin.
    Angle,
    /// Any number of Doppler bins, all at one delay.
    Delay,
    /// Any number of delays, all at one Doppler shift.
    Doppler,
}

fn cn<R: Rng>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn dd_bin(config: &VcmConfig, flat: usize) -> (usize, i64) {
    let nd = 2 * config.doppler_spread + 1;
    (flat / nd, (flat % nd) as i64 - config.doppler_spread as i64)
}

fn draw_supports<R: Rng>(config: &VcmConfig, focus: DomainFocus, rng: &mut R) -> (Vec<(usize, usize)>, Vec<(usize, i64)>) {
    let nr = config.max_aoas;
    let s_ang = match focus {
        DomainFocus::Angle => 1,
        _ => config.angular_sparsity.draw(rng),
    };
    let ang: Vec<(usize, usize)> = index::sample(rng, config.angular_bins(), s_ang)
        .into_iter()
        .map(|i| (i % nr, i / nr))
        .collect();
    let nd = 2 * config.doppler_spread + 1;
    let dd: Vec<(usize, i64)> = match focus {
        DomainFocus::Mixed => {
            let s_dd = config.delay_doppler_sparsity.draw(rng);
            index::sample(rng, config.delay_doppler_bins(), s_dd)
                .into_iter()
                .map(|i| dd_bin(config, i))
                .collect()
        }
        DomainFocus::Angle => vec![dd_bin(config, rng.random_range(0..config.delay_doppler_bins()))],
        DomainFocus::Delay => {
            let c = rng.random_range(0..config.delay_spread);
            let count = rng.random_range(1..=nd);
            index::sample(rng, nd, count)
                .into_iter()
                .map(|i| (c, i as i64 - config.doppler_spread as i64))
                .collect()
        }
        DomainFocus::Doppler => {
            let d = rng.random_range(0..nd) as i64 - config.doppler_spread as i64;
            let count = rng.random_range(1..=config.delay_spread);
            index::sample(rng, config.delay_spread, count)
                .into_iter()
                .map(|c| (c, d))
                .collect()
        }
    };
    (ang, dd)
}

fn placed_bins(config: &VcmConfig, ang: &[(usize, usize)], dd: &[(usize, i64)]) -> Vec<(usize, usize, usize, i64)> {
    let mut out = Vec::new();
    match config.placement {
        Placement::Product => {
            for &(a, b) in ang {
                for &(c, d) in dd {
                    out.push((a, b, c, d));
                }
            }
        }
        Placement::Union => {
            let (c0, d0) = dd[0];
            let (a0, b0) = ang[0];
            for &(a, b) in ang {
                out.push((a, b, c0, d0));
            }
            for &(c, d) in &dd[1..] {
                out.push((a0, b0, c, d));
            }
        }
    }
    out
}

/// Draws a sparse virtual tensor with i.i.d. CN(0, 1) gains on the drawn
/// support. The realized nonzero count is the recorded sparsity label.
pub fn draw_virtual_coefficients(config: &VcmConfig, seed: u64) -> Result<VirtualCoefficients> {
    let mut rng = seed::rng(seed);
    draw_virtual_coefficients_with(config, DomainFocus::Mixed, &mut rng)
}

/// [`draw_virtual_coefficients`] with an explicit RNG and domain focus.
pub fn draw_virtual_coefficients_with<R: Rng>(
    config: &VcmConfig,
    focus: DomainFocus,
    rng: &mut R,
) -> Result<VirtualCoefficients> {
    config.validate()?;
    let (ang, dd) = draw_supports(config, focus, rng);
    let mut hv = VirtualCoefficients::zeros(config);
    for (a, b, c, d) in placed_bins(config, &ang, &dd) {
        let mut g = cn(rng);
        while g == C64::new(0.0, 0.0) {
            g = cn(rng);
        }
        hv.set(a, b, c, d, g);
    }
    Ok(hv)
}

/// A physical propagation path. Angles are normalised spatial frequencies in
/// `[0, 1)`; delay in seconds, Doppler in hertz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalPath {
    pub gain: C64,
    pub aoa: f64,
    pub aod: f64,
    pub delay: f64,
    pub doppler: f64,
}

/// How path gains are spread over virtual bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// Each path contributes only to the bin whose resolution cell contains it.
    Partitioned,
    /// Each path contributes to every bin through the kernel sidelobes.
    Smoothed,
}

fn kernel_weight(config: &VcmConfig, p: &PhysicalPath, a: usize, b: usize, c: usize, d: i64) -> C64 {
    let nr = config.max_aoas as f64;
    let nt = config.max_aods as f64;
    let frame = config.blocks as f64 * config.symbol_duration;
    dirichlet_kernel(config.max_aoas, a as f64 / nr - p.aoa)
        * dirichlet_kernel(config.max_aods, b as f64 / nt - p.aod).conj()
        * sinc2d(d as f64 - frame * p.doppler, c as f64 - config.bandwidth * p.delay)
}

/// Virtual coefficients induced by a set of physical paths:
/// `H_v(a,b,c,d) = Σ_n β_n f_{N_R}(a/N_R − θ_R,n) f*_{N_T}(b/N_T − θ_T,n) sinc2d(d − BTν_n, c − Wτ_n)`.
pub fn aggregate_physical_paths(
    paths: &[PhysicalPath],
    config: &VcmConfig,
    mode: Aggregation,
) -> Result<VirtualCoefficients> {
    config.validate()?;
    let mut hv = VirtualCoefficients::zeros(config);
    let m = config.max_doppler as i64;
    let frame = config.blocks as f64 * config.symbol_duration;
    match mode {
        Aggregation::Partitioned => {
            for p in paths {
                let a = ((p.aoa * config.max_aoas as f64).round() as i64).rem_euclid(config.max_aoas as i64) as usize;
                let b = ((p.aod * config.max_aods as f64).round() as i64).rem_euclid(config.max_aods as i64) as usize;
                let c = (p.delay * config.bandwidth).round() as i64;
                let d = (p.doppler * frame).round() as i64;
                if c < 0 || c >= config.max_delays as i64 || d.abs() > m {
                    return Err(Error::InvalidInput(format!(
                        "path with delay {:.3e} s / Doppler {:.3} Hz lies outside the resolvable grid",
                        p.delay, p.doppler
                    )));
                }
                let w = kernel_weight(config, p, a, b, c as usize, d);
                hv.add(a, b, c as usize, d, p.gain * w);
            }
        }
        Aggregation::Smoothed => {
            for a in 0..config.max_aoas {
                for b in 0..config.max_aods {
                    for c in 0..config.max_delays {
                        for d in -m..=m {
                            let v: C64 = paths.iter().map(|p| p.gain * kernel_weight(config, p, a, b, c, d)).sum();
                            if v.norm() > 1e-14 {
                                hv.set(a, b, c, d, v);
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(hv)
}

/// Draws a virtual support as in [`draw_virtual_coefficients`] and populates
/// every occupied bin with `subpaths_per_bin` physical subpaths, each
/// uniformly placed inside the bin's resolution cell with CN(0, 1/N) gain.
pub fn draw_physical_paths(config: &VcmConfig, seed: u64) -> Result<Vec<PhysicalPath>> {
    config.validate()?;
    let mut rng = seed::rng(seed);
    let (ang, dd) = draw_supports(config, DomainFocus::Mixed, &mut rng);
    let n = config.subpaths_per_bin;
    let sd = 1.0 / (n as f64).sqrt();
    let frame = config.blocks as f64 * config.symbol_duration;
    let mut paths = Vec::new();
    for (a, b, c, d) in placed_bins(config, &ang, &dd) {
        for _ in 0..n {
            let j = |r: &mut rand_chacha::ChaCha8Rng| r.random::<f64>() - 0.5;
            let aoa = (a as f64 + j(&mut rng)) / config.max_aoas as f64;
            let aod = (b as f64 + j(&mut rng)) / config.max_aods as f64;
            // Keep delays causal and inside the last cell.
            let delay = ((c as f64 + j(&mut rng)).max(0.0)) / config.bandwidth;
            let doppler = (d as f64 + j(&mut rng) * 0.999) / frame;
            paths.push(PhysicalPath {
                gain: cn(&mut rng) * sd,
                aoa: aoa.rem_euclid(1.0),
                aod: aod.rem_euclid(1.0),
                delay,
                doppler,
            });
        }
    }
    Ok(paths)
}

/// Time-frequency response seen between receive element `rx` and transmit
/// element `tx`. Guard subcarriers are zero.
pub fn vcm_cfr_pair(hv: &VirtualCoefficients, config: &VcmConfig, rx: usize, tx: usize) -> Result<ChannelRealization> {
    config.validate()?;
    if hv.shape != [config.max_aoas, config.max_aods, config.max_delays, config.doppler_bins()] {
        return Err(Error::InvalidInput(format!("virtual tensor shape {:?} does not match the configuration", hv.shape)));
    }
    if rx >= config.max_aoas || tx >= config.max_aods {
        return Err(Error::InvalidInput(format!("antenna pair ({rx}, {tx}) out of range")));
    }
    let nr = config.max_aoas;
    let nt = config.max_aods;
    // Collapse the angular sums for the chosen antenna pair.
    let mut g: BTreeMap<(usize, i64), C64> = BTreeMap::new();
    for ((a, b, c, d), v) in hv.iter() {
        let ar = ula_steering(nr, a as f64 / nr as f64)[rx];
        let at = ula_steering(nt, b as f64 / nt as f64)[tx];
        *g.entry((c, d)).or_default() += v * ar * at.conj();
    }
    let k = config.subcarriers;
    let nb = config.blocks;
    let j0 = config.first_used();
    let used = config.used_subcarriers();
    let df = config.subcarrier_spacing();
    let mut cfr = CMat::zeros(k, nb);
    for (&(c, d), &v) in &g {
        for i in 0..nb {
            let time_phase = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * (d * i as i64) as f64 / nb as f64);
            let tv = v * time_phase;
            for j in j0..j0 + used {
                let f = (j - j0) as f64 * df;
                let ph = -2.0 * std::f64::consts::PI * c as f64 * f / config.bandwidth;
                cfr[(j, i)] += tv * C64::from_polar(1.0, ph);
            }
        }
    }
    if config.normalize_power {
        let p = cfr.iter().map(|z| z.norm_sqr()).sum::<f64>() / (used * nb) as f64;
        if p > 0.0 {
            cfr /= C64::new(p.sqrt(), 0.0);
        }
    }
    Ok(ChannelRealization::from_cfr(cfr, hv.nnz(), config.delay_spread_samples()))
}

/// [`vcm_cfr_pair`] for the first receive and transmit elements.
pub fn vcm_cfr(hv: &VirtualCoefficients, config: &VcmConfig) -> Result<ChannelRealization> {
    vcm_cfr_pair(hv, config, 0, 0)
}
