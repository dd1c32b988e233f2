//! End-to-end pipelines: pilot-based channel estimation and spectrum
//! occupancy (sparsity) estimation.

pub mod channel_est;
pub mod spectrum;

pub use channel_est::{
    estimate_dft_known_s, estimate_ls, estimate_oracle, estimate_proposed, estimate_with_sparsity, ChannelEstimate,
    CodingLayout, EstimateStatus, EstimationConfig, Interpolation, Method,
};
pub use spectrum::{
    count_bands,
    estimate_spectrum_sparsity, ingest_psd, read_psd_csv, synthesize_spectrum, write_psd_csv, Hypothesis,
    SpectrumConfig, SpectrumGeometry, SpectrumObservation,
};
