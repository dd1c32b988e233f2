//! Pilot-based channel estimation.
//!
//! Every estimator starts from the least-squares estimate at the pilots,
//! `H_LS(I) = Y(I) / P`. The estimate is then optionally denoised by sparse
//! coding and finally extended to all used subcarriers:
//!
//! * **LS** — no coding.
//! * **DFT-known-s** — OMP over the unitary DFT basis with the true sparsity.
//! * **Proposed** — sparsity predicted by a [`SparsityRegressor`], then OMP
//!   over a learned dictionary with that many atoms.
//! * **Oracle** — least squares over the dictionary atoms of the true support.
//!
//! What gets coded is set by [`CodingLayout`]: the whole pilot grid as one
//! vector (pilots of block 0, then block 1, …), or each block's
//! interpolated column separately.

use serde::{Deserialize, Serialize};

use crate::channel::OfdmFrame;
use crate::dictionary::Dictionary;
use crate::estimator::{extract_features, predict_sparsity, SparsityRegressor, Transform, TransformKind};
use crate::linalg::{least_squares, nmse, select_columns};
use crate::recovery::{omp, reconstruct, SparseCode, StopRule};
use crate::{dft, CMat, CVec, Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Ls,
    DftKnownS,
    Proposed,
    Oracle,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Ls, Method::DftKnownS, Method::Proposed, Method::Oracle];

    pub fn label(self) -> &'static str {
        match self {
            Method::Ls => "LS",
            Method::DftKnownS => "DFT-known-s",
            Method::Proposed => "Proposed",
            Method::Oracle => "Oracle",
        }
    }
}

/// How pilot estimates are extended to the other used subcarriers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    /// Piecewise linear between pilots, linear extrapolation at the edges.
    Linear,
    /// Band-limited: the pilots' delay-domain transform is zero-padded, which
    /// is exact for causal delays shorter than the pilot count.
    DelayDomain,
    /// Non-pilot subcarriers set to zero.
    ZeroFill,
}

/// The vectors sparse coding operates on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CodingLayout {
    /// One vector of `pilots × blocks` entries, block-major.
    PilotGrid,
    /// One vector per block: the interpolated used subcarriers.
    Column,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimationConfig {
    pub interpolation: Interpolation,
    pub layout: CodingLayout,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        Self { interpolation: Interpolation::Linear, layout: CodingLayout::Column }
    }
}

impl EstimationConfig {
    /// Whole pilot grid coded as one vector, band-limited extension: keeps
    /// the Doppler structure visible to the dictionary.
    pub fn pilot_grid() -> Self {
        Self { interpolation: Interpolation::DelayDomain, layout: CodingLayout::PilotGrid }
    }

    /// Length of the coding vectors for a frame.
    pub fn vector_len(&self, frame: &OfdmFrame) -> usize {
        match self.layout {
            CodingLayout::PilotGrid => frame.pilot_locations.len() * frame.blocks(),
            CodingLayout::Column => frame.used.len(),
        }
    }

    /// DFT basis matching the coding vectors. The transform always runs along
    /// frequency only: over a column as is, over the pilot grid block by block.
    pub fn dft_basis(&self, frame: &OfdmFrame) -> CMat {
        match self.layout {
            CodingLayout::PilotGrid => dft::dft_basis_columnwise(frame.pilot_locations.len(), frame.blocks()),
            CodingLayout::Column => dft::dft_basis(frame.used.len()),
        }
    }

    /// The LS coding vectors of a frame.
    pub fn observation_vectors(&self, frame: &OfdmFrame) -> Vec<Vec<C64>> {
        let pilots = pilot_ls(frame);
        match self.layout {
            CodingLayout::PilotGrid => vec![pilots.as_slice().to_vec()],
            CodingLayout::Column => {
                let full = extend(frame, &pilots, self.interpolation);
                (0..frame.blocks()).map(|i| full.column(i).rows(frame.used.start, frame.used.len()).iter().cloned().collect()).collect()
            }
        }
    }

    /// Same vectors built from a known channel grid instead of received data
    /// (noiseless pilots, for labelling and oracle supports).
    pub fn channel_vectors(&self, frame: &OfdmFrame, cfr: &CMat) -> Vec<Vec<C64>> {
        let np = frame.pilot_locations.len();
        let pilots = CMat::from_fn(np, frame.blocks(), |m, i| cfr[(frame.pilot_locations[m], i)]);
        match self.layout {
            CodingLayout::PilotGrid => vec![pilots.as_slice().to_vec()],
            CodingLayout::Column => (0..frame.blocks())
                .map(|i| cfr.column(i).rows(frame.used.start, frame.used.len()).iter().cloned().collect())
                .collect(),
        }
    }

    /// Full `K × B` grid from coded vectors.
    pub fn assemble(&self, frame: &OfdmFrame, vectors: &[Vec<C64>]) -> CMat {
        match self.layout {
            CodingLayout::PilotGrid => {
                let grid = CMat::from_column_slice(frame.pilot_locations.len(), frame.blocks(), &vectors[0]);
                extend(frame, &grid, self.interpolation)
            }
            CodingLayout::Column => {
                let mut h = CMat::zeros(frame.subcarriers(), frame.blocks());
                for (i, v) in vectors.iter().enumerate() {
                    for (r, z) in v.iter().enumerate() {
                        h[(frame.used.start + r, i)] = *z;
                    }
                }
                h
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateStatus {
    Ok,
    /// The predicted sparsity was zero; the estimate is the zero channel.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    pub method: Method,
    /// Estimated frequency response (subcarrier, block).
    pub h_freq: CMat,
    /// Estimated impulse response (delay tap, block).
    pub h_time: CMat,
    /// `‖H − Ĥ‖²_F / ‖H‖²_F` over the used subcarriers.
    pub mse: f64,
    pub estimated_sparsity: Option<usize>,
    pub status: EstimateStatus,
}

/// Least-squares estimates at the pilots, `pilots × blocks`.
pub fn pilot_ls(frame: &OfdmFrame) -> CMat {
    let np = frame.pilot_locations.len();
    let mut out = CMat::zeros(np, frame.blocks());
    for (m, (&loc, &p)) in frame.pilot_locations.iter().zip(&frame.pilot_symbols).enumerate() {
        let p2 = p.norm_sqr();
        if p2 < 1e-300 {
            log::warn!("pilot {m} is zero (condition number ∞); its estimate is set to 0");
            continue;
        }
        let pinv = p.conj() / p2;
        for i in 0..frame.blocks() {
            out[(m, i)] = frame.received[(loc, i)] * pinv;
        }
    }
    out
}

/// Extends pilot estimates (`pilots × blocks`) to a full `K × B` grid.
pub fn extend(frame: &OfdmFrame, pilots: &CMat, interp: Interpolation) -> CMat {
    let k = frame.subcarriers();
    let nb = frame.blocks();
    let locs = &frame.pilot_locations;
    let np = locs.len();
    let mut h = CMat::zeros(k, nb);
    if np == 0 {
        return h;
    }
    match interp {
        Interpolation::ZeroFill => {
            for i in 0..nb {
                for (m, &loc) in locs.iter().enumerate() {
                    h[(loc, i)] = pilots[(m, i)];
                }
            }
        }
        Interpolation::Linear => {
            for i in 0..nb {
                for j in frame.used.clone() {
                    h[(j, i)] = linear_at(locs, |m| pilots[(m, i)], j);
                }
            }
        }
        Interpolation::DelayDomain => {
            let sep = if np > 1 { locs[1] - locs[0] } else { 1 };
            let period = (sep * np) as f64;
            for i in 0..nb {
                let col: Vec<C64> = (0..np).map(|m| pilots[(m, i)]).collect();
                // g_c = (1/n_p) Σ_m v_m e^{+j2πcm/n_p}
                let mut g = dft::inverse(&col);
                let s = 1.0 / (np as f64).sqrt();
                for v in g.iter_mut() {
                    *v *= s;
                }
                for j in frame.used.clone() {
                    let off = j as f64 - locs[0] as f64;
                    let mut acc = C64::new(0.0, 0.0);
                    for (c, gc) in g.iter().enumerate() {
                        acc += gc * C64::from_polar(1.0, -2.0 * std::f64::consts::PI * c as f64 * off / period);
                    }
                    h[(j, i)] = acc;
                }
            }
        }
    }
    h
}

fn linear_at<F: Fn(usize) -> C64>(locs: &[usize], v: F, j: usize) -> C64 {
    let np = locs.len();
    if np == 1 {
        return v(0);
    }
    // Segment [m, m+1] containing j, clamped to the first/last segment for extrapolation.
    let m = match locs.binary_search(&j) {
        Ok(m) => return v(m),
        Err(pos) => pos.saturating_sub(1).min(np - 2),
    };
    let (x0, x1) = (locs[m] as f64, locs[m + 1] as f64);
    let t = (j as f64 - x0) / (x1 - x0);
    v(m) * (1.0 - t) + v(m + 1) * t
}

fn finish(frame: &OfdmFrame, method: Method, h_freq: CMat, s: Option<usize>, status: EstimateStatus) -> ChannelEstimate {
    let used = frame.used.clone();
    let nb = frame.blocks();
    let mut truth = Vec::with_capacity(used.len() * nb);
    let mut est = Vec::with_capacity(used.len() * nb);
    for i in 0..nb {
        for j in used.clone() {
            truth.push(frame.true_cfr[(j, i)]);
            est.push(h_freq[(j, i)]);
        }
    }
    let mse = nmse(&truth, &est);
    let h_time = dft::inverse_columns(&h_freq);
    ChannelEstimate { method, h_freq, h_time, mse, estimated_sparsity: s, status }
}

fn check_dictionary(cfg: &EstimationConfig, frame: &OfdmFrame, atoms: &CMat) -> Result<()> {
    let n = cfg.vector_len(frame);
    if atoms.nrows() != n {
        return Err(Error::DimensionMismatch { context: "dictionary rows vs coding vector", expected: n, got: atoms.nrows() });
    }
    Ok(())
}

/// LS estimate extended by the configured interpolation.
pub fn estimate_ls(frame: &OfdmFrame, cfg: &EstimationConfig) -> ChannelEstimate {
    let h = match cfg.layout {
        CodingLayout::PilotGrid => extend(frame, &pilot_ls(frame), cfg.interpolation),
        CodingLayout::Column => cfg.assemble(frame, &cfg.observation_vectors(frame)),
    };
    finish(frame, Method::Ls, h, None, EstimateStatus::Ok)
}

fn code_each(vectors: &[Vec<C64>], atoms: &CMat, s: usize) -> Result<Vec<Vec<C64>>> {
    let s = s.min(atoms.ncols());
    vectors
        .iter()
        .map(|v| {
            let code = omp(v, atoms, StopRule::sparsity(s))?;
            Ok(reconstruct(atoms, &code).as_slice().to_vec())
        })
        .collect()
}

/// OMP of the LS vectors over the unitary DFT basis with `s` atoms
/// (capped at the basis size, where it reproduces the LS estimate).
pub fn estimate_dft_known_s(frame: &OfdmFrame, s: usize, cfg: &EstimationConfig) -> Result<ChannelEstimate> {
    if s == 0 {
        return Err(Error::InvalidInput("DFT baseline needs s ≥ 1".into()));
    }
    let basis = cfg.dft_basis(frame);
    let coded = code_each(&cfg.observation_vectors(frame), &basis, s)?;
    Ok(finish(frame, Method::DftKnownS, cfg.assemble(frame, &coded), Some(s), EstimateStatus::Ok))
}

/// OMP of the LS vectors over `d` with a given sparsity — the known-sparsity
/// variant of the proposed estimator. `s = 0` yields the zero channel.
pub fn estimate_with_sparsity(frame: &OfdmFrame, d: &Dictionary, s: usize, cfg: &EstimationConfig) -> Result<ChannelEstimate> {
    check_dictionary(cfg, frame, d.atoms())?;
    if s == 0 {
        let h = CMat::zeros(frame.subcarriers(), frame.blocks());
        return Ok(finish(frame, Method::Proposed, h, Some(0), EstimateStatus::Degenerate));
    }
    let coded = code_each(&cfg.observation_vectors(frame), d.atoms(), s)?;
    Ok(finish(frame, Method::Proposed, cfg.assemble(frame, &coded), Some(s), EstimateStatus::Ok))
}

/// Predicts the sparsity of the LS vectors with `model`, then codes them over
/// `d` with that many atoms. With several coding vectors (column layout) the
/// largest prediction is used.
pub fn estimate_proposed(
    frame: &OfdmFrame,
    d: &Dictionary,
    model: &SparsityRegressor,
    cfg: &EstimationConfig,
) -> Result<ChannelEstimate> {
    check_dictionary(cfg, frame, d.atoms())?;
    let transform = match model.encoding.transform {
        TransformKind::Dft => Transform::Dft,
        TransformKind::Dictionary => Transform::Dictionary(d),
    };
    let mut s_hat = 0;
    for v in cfg.observation_vectors(frame) {
        let f = extract_features(&v, transform, &model.encoding)?;
        s_hat = s_hat.max(predict_sparsity(model, &f)?);
    }
    if s_hat == 0 {
        log::debug!("predicted sparsity 0: returning the zero channel");
    }
    estimate_with_sparsity(frame, d, s_hat, cfg)
}

/// Least squares over the atoms of the true support (one code per coding
/// vector) — the lower-bound benchmark.
pub fn estimate_oracle(frame: &OfdmFrame, d: &Dictionary, true_codes: &[SparseCode], cfg: &EstimationConfig) -> Result<ChannelEstimate> {
    check_dictionary(cfg, frame, d.atoms())?;
    let vectors = cfg.observation_vectors(frame);
    if vectors.len() != true_codes.len() {
        return Err(Error::DimensionMismatch { context: "oracle codes", expected: vectors.len(), got: true_codes.len() });
    }
    let mut coded = Vec::with_capacity(vectors.len());
    let mut s = 0;
    for (v, code) in vectors.iter().zip(true_codes) {
        if let Some(&bad) = code.support.iter().find(|&&j| j >= d.len()) {
            return Err(Error::InvalidInput(format!("oracle support index {bad} outside {} atoms", d.len())));
        }
        s = s.max(code.support.len());
        let sub = select_columns(d.atoms(), &code.support);
        let coef = least_squares(&sub, &CVec::from_column_slice(v));
        coded.push((&sub * coef).as_slice().to_vec());
    }
    Ok(finish(frame, Method::Oracle, cfg.assemble(frame, &coded), Some(s), EstimateStatus::Ok))
}
