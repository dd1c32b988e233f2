//! Sparsity-level estimation for compressively sensed wireless channels and
//! spectra.
//!
//! The crate is organised bottom-up:
//!
//! * [`dft`], [`linalg`], [`seed`] — numerical plumbing (unitary DFT, complex
//!   least squares, reproducible RNG fan-out).
//! * [`channel`] — GSCM and virtual-channel-model (angle/delay/Doppler)
//!   MIMO-OFDM channel synthesis plus pilot-bearing OFDM transmission.
//! * [`recovery`] — orthogonal matching pursuit with sparsity and tolerance
//!   stopping, DFT-domain sparsity counting and compressive recovery.
//! * [`dictionary`] — complex K-SVD with multi-domain initialisation.
//! * [`estimator`] — feature extraction, OMP-based labelling and a small
//!   tanh/linear regressor that predicts the sparsity level of a signal.
//! * [`pipelines`] — pilot-based channel estimation (LS, DFT with known
//!   sparsity, learned-dictionary with predicted sparsity, oracle) and the
//!   spectrum-occupancy pipeline.

mod binio;
pub mod channel;
pub mod dft;
pub mod dictionary;
pub mod error;
pub mod estimator;
pub mod linalg;
pub mod pipelines;
pub mod recovery;
pub mod seed;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Dense complex matrix used throughout the crate.
pub type CMat = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVec = nalgebra::DVector<C64>;
