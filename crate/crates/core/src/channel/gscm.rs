//! Geometry-based stochastic channel: `h = Σ_i Σ_j α_ij β(θ_ij)` over `N_c`
//! clusters of `N_s` subpaths, with `β` the unit-norm ULA response.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::array::ula_response;
use super::ChannelRealization;
use crate::{dft, seed, CMat, CVec, Error, Result, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GscmConfig {
    pub num_clusters: usize,
    pub subpaths_per_cluster: usize,
    pub antenna_count: usize,
    /// Width (radians) of the interval of subpath angles around each cluster
    /// centre; centres are uniform over (−π/2, π/2).
    pub angle_spread: f64,
    /// Variance of the zero-mean circular complex Gaussian subpath gains.
    pub gain_variance: f64,
}

impl Default for GscmConfig {
    fn default() -> Self {
        Self {
            num_clusters: 3,
            subpaths_per_cluster: 4,
            antenna_count: 16,
            angle_spread: 0.1,
            gain_variance: 1.0,
        }
    }
}

impl GscmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_clusters == 0 || self.subpaths_per_cluster == 0 || self.antenna_count == 0 {
            return Err(Error::InvalidConfig(
                "GSCM needs at least one cluster, one subpath and one antenna".into(),
            ));
        }
        if !(self.angle_spread >= 0.0 && self.angle_spread.is_finite()) {
            return Err(Error::InvalidConfig("GSCM angle spread must be finite and ≥ 0".into()));
        }
        if !(self.gain_variance > 0.0 && self.gain_variance.is_finite()) {
            return Err(Error::InvalidConfig("GSCM gain variance must be positive".into()));
        }
        Ok(())
    }
}

/// One subpath: complex gain and angle (radians from broadside).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GscmPath {
    pub gain: C64,
    pub angle: f64,
}

/// `Σ α β(θ)` for the given paths.
pub fn gscm_response(antenna_count: usize, paths: &[GscmPath]) -> CVec {
    let mut h = CVec::zeros(antenna_count);
    for p in paths {
        h += ula_response(antenna_count, p.angle) * p.gain;
    }
    h
}

/// Draws the `N_c · N_s` subpaths of one realization.
pub fn draw_gscm_paths<R: Rng>(config: &GscmConfig, rng: &mut R) -> Vec<GscmPath> {
    let sd = (0.5 * config.gain_variance).sqrt();
    let mut paths = Vec::with_capacity(config.num_clusters * config.subpaths_per_cluster);
    for _ in 0..config.num_clusters {
        let centre = (rng.random::<f64>() - 0.5) * PI;
        for _ in 0..config.subpaths_per_cluster {
            let angle = centre + (rng.random::<f64>() - 0.5) * config.angle_spread;
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            paths.push(GscmPath { gain: C64::new(re * sd, im * sd), angle });
        }
    }
    paths
}

/// One GSCM realization. The antenna-domain vector `h` is stored as the
/// single column of `cir`; `cfr` holds its beamspace (DFT) view.
pub fn gscm_channel(config: &GscmConfig, seed: u64) -> Result<ChannelRealization> {
    config.validate()?;
    let mut rng = seed::rng(seed);
    let paths = draw_gscm_paths(config, &mut rng);
    let h = gscm_response(config.antenna_count, &paths);
    let cir = CMat::from_column_slice(config.antenna_count, 1, h.as_slice());
    let cfr = dft::forward_columns(&cir);
    Ok(ChannelRealization { cir, cfr, true_sparsity: paths.len(), delay_spread_samples: 0 })
}
