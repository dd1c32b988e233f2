//! Pilot-bearing OFDM transmission in the frequency domain.
//!
//! After cyclic-prefix removal and the FFT, each subcarrier sees a scalar
//! channel: `Y[i, j] = X[i, j] H[i, j] + N[i, j]`. Inter-symbol interference
//! is not modelled, so the cyclic prefix must cover the channel memory.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::ChannelRealization;
use crate::{seed, CMat, Error, Result, C64};

/// Frame layout: comb pilots on the used subcarriers of every block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrameSpec {
    /// Spacing between pilot subcarriers.
    pub pilot_separation: usize,
    /// Offset of the first pilot from the first used subcarrier.
    pub pilot_offset: usize,
    pub cp_length: usize,
    /// Zero subcarriers, split between the band edges (extra one on top).
    pub guard_band: usize,
    /// Symbol transmitted on every pilot.
    pub pilot_value: C64,
}

impl Default for FrameSpec {
    fn default() -> Self {
        Self {
            pilot_separation: 4,
            pilot_offset: 0,
            cp_length: 12,
            guard_band: 12,
            pilot_value: C64::new(std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2),
        }
    }
}

impl FrameSpec {
    pub fn validate(&self, subcarriers: usize) -> Result<()> {
        if self.pilot_separation == 0 {
            return Err(Error::InvalidConfig("pilot separation must be ≥ 1".into()));
        }
        if self.guard_band >= subcarriers {
            return Err(Error::InvalidConfig(format!(
                "guard band {} leaves no used subcarriers out of {subcarriers}",
                self.guard_band
            )));
        }
        if self.pilot_offset >= subcarriers - self.guard_band {
            return Err(Error::InvalidConfig("pilot offset beyond the used band".into()));
        }
        Ok(())
    }

    /// Used subcarrier range `[first, first + used)`.
    pub fn used_range(&self, subcarriers: usize) -> std::ops::Range<usize> {
        let first = self.guard_band / 2;
        first..first + (subcarriers - self.guard_band)
    }

    /// Comb pilot subcarriers.
    pub fn pilot_locations(&self, subcarriers: usize) -> Vec<usize> {
        let r = self.used_range(subcarriers);
        (r.start + self.pilot_offset..r.end).step_by(self.pilot_separation).collect()
    }
}

/// One transmitted and received frame.
#[derive(Debug, Clone, PartialEq)]
pub struct OfdmFrame {
    /// Transmitted grid (subcarrier, block): 16-QAM data, pilots, zero guards.
    pub data_symbols: CMat,
    pub pilot_locations: Vec<usize>,
    /// Pilot symbol per pilot subcarrier (identical in every block).
    pub pilot_symbols: Vec<C64>,
    pub cp_length: usize,
    pub received: CMat,
    pub noise_variance: f64,
    /// Used (non-guard) subcarriers.
    pub used: std::ops::Range<usize>,
    /// The channel the frame went through, kept for scoring estimates.
    pub true_cfr: CMat,
}

impl OfdmFrame {
    pub fn subcarriers(&self) -> usize {
        self.received.nrows()
    }

    pub fn blocks(&self) -> usize {
        self.received.ncols()
    }
}

/// Unit-energy 16-QAM symbol from a 4-bit index.
pub fn qam16(index: u8) -> C64 {
    const LEVELS: [f64; 4] = [-3.0, -1.0, 1.0, 3.0];
    let s = 1.0 / 10f64.sqrt();
    C64::new(LEVELS[(index & 3) as usize] * s, LEVELS[((index >> 2) & 3) as usize] * s)
}

/// Adds CN(0, σ²) noise to every entry.
pub fn awgn<R: Rng>(m: &mut CMat, noise_variance: f64, rng: &mut R) {
    if noise_variance <= 0.0 {
        return;
    }
    let sd = (0.5 * noise_variance).sqrt();
    for z in m.iter_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *z += C64::new(re * sd, im * sd);
    }
}

/// Sends a frame through `channel` at `snr_db`, defined as the mean received
/// signal power per used frequency-domain sample over the noise variance.
/// `f64::INFINITY` disables noise.
pub fn ofdm_roundtrip(channel: &ChannelRealization, spec: &FrameSpec, snr_db: f64, seed: u64) -> Result<OfdmFrame> {
    let (k, nb) = channel.cfr.shape();
    spec.validate(k)?;
    if spec.cp_length < channel.delay_spread_samples {
        return Err(Error::CyclicPrefixTooShort { cp: spec.cp_length, memory: channel.delay_spread_samples });
    }
    if snr_db.is_nan() {
        return Err(Error::InvalidInput("SNR is NaN".into()));
    }
    let mut rng = seed::rng(seed);
    let used = spec.used_range(k);
    let pilots = spec.pilot_locations(k);
    let mut is_pilot = vec![false; k];
    for &p in &pilots {
        is_pilot[p] = true;
    }
    let mut x = CMat::zeros(k, nb);
    for i in 0..nb {
        for j in used.clone() {
            x[(j, i)] = if is_pilot[j] { spec.pilot_value } else { qam16(rng.random_range(0..16u8)) };
        }
    }
    let mut y = x.component_mul(&channel.cfr);
    let signal_power = used
        .clone()
        .flat_map(|j| (0..nb).map(move |i| (j, i)))
        .map(|(j, i)| y[(j, i)].norm_sqr())
        .sum::<f64>()
        / (used.len() * nb) as f64;
    let noise_variance = if snr_db == f64::INFINITY { 0.0 } else { signal_power / 10f64.powf(snr_db / 10.0) };
    awgn(&mut y, noise_variance, &mut rng);
    Ok(OfdmFrame {
        data_symbols: x,
        pilot_symbols: vec![spec.pilot_value; pilots.len()],
        pilot_locations: pilots,
        cp_length: spec.cp_length,
        received: y,
        noise_variance,
        used,
        true_cfr: channel.cfr.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qam_has_unit_energy() {
        let e: f64 = (0..16u8).map(|i| qam16(i).norm_sqr()).sum::<f64>() / 16.0;
        assert!((e - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pilot_comb_counts() {
        let spec = FrameSpec { guard_band: 0, ..FrameSpec::default() };
        assert_eq!(spec.pilot_locations(128).len(), 32);
        let spec = FrameSpec { guard_band: 32, ..FrameSpec::default() };
        let p = spec.pilot_locations(128);
        assert_eq!(p.len(), 24);
        assert_eq!(p[0], 16);
        assert!(p.windows(2).all(|w| w[1] - w[0] == 4));
    }
}
