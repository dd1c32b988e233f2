//! Synthetic MIMO-OFDM channels.
//!
//! Two generators are provided: a geometry-based stochastic model (a sum of
//! cluster subpaths observed through a ULA, [`gscm`]) and the virtual channel
//! model, which places complex gains on a fixed angle × delay × Doppler grid
//! and evaluates the resulting time-frequency response ([`vcm`]).
//! [`ofdm`] sends a pilot-bearing 16-QAM frame through a realization.

pub mod array;
pub mod gscm;
pub mod io;
pub mod kernels;
pub mod ofdm;
pub mod vcm;

pub use array::{ula_response, ula_steering};
pub use gscm::{gscm_channel, gscm_response, GscmConfig, GscmPath};
pub use kernels::{dirichlet_kernel, sinc2d};
pub use ofdm::{awgn, ofdm_roundtrip, FrameSpec, OfdmFrame};
pub use vcm::{
    aggregate_physical_paths, draw_physical_paths, draw_virtual_coefficients, draw_virtual_coefficients_with,
    vcm_cfr, vcm_cfr_pair, Aggregation, DomainFocus, PhysicalPath, Placement, SparsityRange, VcmConfig,
    VirtualCoefficients,
};

use crate::{dft, CMat};

/// One channel draw: impulse and frequency responses over a frame.
///
/// `cfr` is indexed (subcarrier, OFDM block) and `cir` (delay tap, OFDM
/// block); they are related column-wise by the unitary DFT, `cfr = F · cir`.
/// For [`gscm_channel`] the rows index antenna elements instead and `cfr` is
/// the beamspace view of the array response.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub cir: CMat,
    pub cfr: CMat,
    /// Sparsity recorded at synthesis (nonzero virtual coefficients or paths).
    pub true_sparsity: usize,
    /// Largest path delay, in samples of the OFDM sampling clock.
    pub delay_spread_samples: usize,
}

impl ChannelRealization {
    /// Builds a realization from its frequency response.
    pub fn from_cfr(cfr: CMat, true_sparsity: usize, delay_spread_samples: usize) -> Self {
        let cir = dft::inverse_columns(&cfr);
        Self { cir, cfr, true_sparsity, delay_spread_samples }
    }

    /// Builds a realization from its impulse response.
    pub fn from_cir(cir: CMat, true_sparsity: usize, delay_spread_samples: usize) -> Self {
        let cfr = dft::forward_columns(&cir);
        Self { cir, cfr, true_sparsity, delay_spread_samples }
    }

    pub fn subcarriers(&self) -> usize {
        self.cfr.nrows()
    }

    pub fn blocks(&self) -> usize {
        self.cfr.ncols()
    }
}
