//! Experiment configuration.
//!
//! A single TOML document drives every subcommand. Every field has a default,
//! so an empty file is a valid desk-scale configuration; unknown keys are
//! rejected. See `docs/config.md` for the full schema.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use sparsecs_core::channel::{FrameSpec, GscmConfig, VcmConfig};
use sparsecs_core::estimator::{FeatureEncoding, MagnitudeOrder, Optimizer, RawPart, TrainingHyperparams, TransformKind};
use sparsecs_core::pipelines::{EstimationConfig, SpectrumConfig};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    ChannelGscm,
    ChannelVcm,
    SpectrumSynthetic,
    SpectrumFile,
}

impl Scenario {
    pub fn is_channel(self) -> bool {
        matches!(self, Scenario::ChannelGscm | Scenario::ChannelVcm)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DictionaryConfig {
    /// Number of atoms `k`.
    pub atoms: usize,
    /// Atoms per training column while learning.
    pub target_sparsity: usize,
    /// K-SVD rounds.
    pub iterations: usize,
    /// Columns of the general training set.
    pub training_columns: usize,
    /// Columns in each of the angle-, delay- and Doppler-sparse sets.
    pub domain_columns: usize,
    pub power_tolerance: f64,
    /// Near-duplicate atoms above this coherence are replaced; values ≥ 1
    /// disable the check.
    pub replace_coherence: f64,
}

impl Default for DictionaryConfig {
    fn default() -> Self {
        Self {
            atoms: 81,
            target_sparsity: 5,
            iterations: 25,
            training_columns: 2000,
            domain_columns: 200,
            power_tolerance: 1e-10,
            replace_coherence: 0.99,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatorConfig {
    /// Labelled channel vectors (or spectra) generated for the regressor.
    pub systems: usize,
    /// Per-sample SNR is drawn uniformly from this range.
    pub snr_min_db: f64,
    pub snr_max_db: f64,
    /// Relative OMP tolerance used for labelling.
    pub epsilon: f64,
    /// Predictions are clamped to `[0, max_sparsity]`.
    pub max_sparsity: usize,
    pub encoding: FeatureEncoding,
    pub training: TrainingHyperparams,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            systems: 6000,
            snr_min_db: 0.0,
            snr_max_db: 20.0,
            epsilon: 0.1,
            max_sparsity: 16,
            encoding: FeatureEncoding {
                transform: TransformKind::Dictionary,
                order: MagnitudeOrder::Descending,
                raw: RawPart::Omitted,
            },
            training: TrainingHyperparams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationConfig {
    pub snr_start_db: f64,
    pub snr_stop_db: f64,
    pub snr_step_db: f64,
    /// Channel realizations per SNR point.
    pub realizations: usize,
    /// Training-set sizes of the learning-curve sweep.
    pub train_sizes: Vec<usize>,
    /// Bootstrap resamples for the confidence intervals of mean MSEs.
    pub bootstrap_resamples: usize,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            snr_start_db: -20.0,
            snr_stop_db: 0.0,
            snr_step_db: 2.0,
            realizations: 200,
            train_sizes: vec![200, 400, 800, 1600],
            bootstrap_resamples: 2000,
        }
    }
}

impl EvaluationConfig {
    /// Inclusive SNR grid.
    pub fn snr_grid(&self) -> Vec<f64> {
        let n = ((self.snr_stop_db - self.snr_start_db) / self.snr_step_db + 1e-9).floor() as usize + 1;
        (0..n).map(|i| self.snr_start_db + i as f64 * self.snr_step_db).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumScenarioConfig {
    pub synthesis: SpectrumConfig,
    /// Occupied-band counts are drawn uniformly from `0..=max_bands`.
    pub max_bands: usize,
    pub observations: usize,
    pub snr_min_db: f64,
    pub snr_max_db: f64,
    pub encoding: FeatureEncoding,
    pub training: TrainingHyperparams,
    /// Measured PSD file evaluated in the `spectrum-file` scenario.
    pub input_file: String,
}

impl Default for SpectrumScenarioConfig {
    fn default() -> Self {
        Self {
            synthesis: SpectrumConfig::default(),
            max_bands: 10,
            observations: 6000,
            snr_min_db: 0.0,
            snr_max_db: 20.0,
            encoding: FeatureEncoding {
                transform: TransformKind::Dft,
                order: MagnitudeOrder::Descending,
                raw: RawPart::Omitted,
            },
            training: TrainingHyperparams {
                optimizer: Optimizer::Adam,
                learning_rate: 0.003,
                max_epochs: 300,
                patience: 20,
                ..TrainingHyperparams::default()
            },
            input_file: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    /// Master seed; every stochastic stage derives its own stream from it.
    pub seed: u64,
    pub output_dir: PathBuf,
    pub channel: VcmConfig,
    pub gscm: GscmConfig,
    pub frame: FrameSpec,
    pub estimation: EstimationConfig,
    pub dictionary: DictionaryConfig,
    pub estimator: EstimatorConfig,
    pub evaluation: EvaluationConfig,
    pub spectrum: SpectrumScenarioConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::ChannelVcm,
            seed: 1,
            output_dir: PathBuf::from("out"),
            channel: VcmConfig::default(),
            gscm: GscmConfig::default(),
            frame: FrameSpec::default(),
            estimation: EstimationConfig::pilot_grid(),
            dictionary: DictionaryConfig::default(),
            estimator: EstimatorConfig::default(),
            evaluation: EvaluationConfig::default(),
            spectrum: SpectrumScenarioConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Switches to the full-size simulation grid: 50 × 50 antennas, 128
    /// subcarriers, 10³ dictionary-training realizations and 22 400 labelled
    /// channel vectors.
    pub fn apply_paper_scale(&mut self) {
        self.channel = VcmConfig::paper_scale();
        self.frame.guard_band = self.channel.guard_band;
        let n = self.coding_dimension();
        self.dictionary.atoms = n;
        self.dictionary.training_columns = 1000;
        self.dictionary.domain_columns = 2 * n;
        self.estimator.systems = 22_400;
        self.evaluation.realizations = 1000;
        self.evaluation.train_sizes = vec![200, 400, 800, 1600, 3200, 6400, 12800];
    }

    /// Length of the vectors the dictionary and regressor operate on.
    pub fn coding_dimension(&self) -> usize {
        match self.scenario {
            Scenario::ChannelGscm => self.gscm.antenna_count,
            Scenario::SpectrumSynthetic | Scenario::SpectrumFile => self.spectrum.synthesis.geometry.bins,
            Scenario::ChannelVcm => {
                let k = self.channel.subcarriers;
                match self.estimation.layout {
                    sparsecs_core::pipelines::CodingLayout::PilotGrid => {
                        self.frame.pilot_locations(k).len() * self.channel.blocks
                    }
                    sparsecs_core::pipelines::CodingLayout::Column => k - self.frame.guard_band,
                }
            }
        }
    }

    /// DFT basis matching the coding vectors: along frequency, block by block,
    /// over the VCM pilot grid; one-dimensional otherwise.
    pub fn dft_basis(&self) -> sparsecs_core::CMat {
        if self.scenario == Scenario::ChannelVcm && self.estimation.layout == sparsecs_core::pipelines::CodingLayout::PilotGrid {
            let np = self.frame.pilot_locations(self.channel.subcarriers).len();
            sparsecs_core::dft::dft_basis_columnwise(np, self.channel.blocks)
        } else {
            sparsecs_core::dft::dft_basis(self.coding_dimension())
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        let cfg = |e: sparsecs_core::Error| CliError::Config(e.to_string());
        let bad = |m: String| Err(CliError::Config(m));
        match self.scenario {
            Scenario::ChannelVcm => {
                self.channel.validate().map_err(cfg)?;
                self.frame.validate(self.channel.subcarriers).map_err(cfg)?;
                if self.frame.guard_band != self.channel.guard_band {
                    return bad(format!(
                        "frame.guard_band ({}) must equal channel.guard_band ({})",
                        self.frame.guard_band, self.channel.guard_band
                    ));
                }
                if self.frame.cp_length < self.channel.delay_spread_samples() {
                    return bad(format!(
                        "cyclic prefix {} is shorter than the channel memory {}",
                        self.frame.cp_length,
                        self.channel.delay_spread_samples()
                    ));
                }
            }
            Scenario::ChannelGscm => self.gscm.validate().map_err(cfg)?,
            Scenario::SpectrumSynthetic | Scenario::SpectrumFile => {
                self.spectrum.synthesis.validate().map_err(cfg)?;
                self.spectrum.training.validate().map_err(cfg)?;
                if self.spectrum.max_bands > self.spectrum.synthesis.max_bands() {
                    return bad(format!(
                        "max_bands {} cannot fit in {} bins",
                        self.spectrum.max_bands, self.spectrum.synthesis.geometry.bins
                    ));
                }
                if self.spectrum.snr_min_db > self.spectrum.snr_max_db {
                    return bad("spectrum SNR range is empty".into());
                }
                if self.scenario == Scenario::SpectrumFile && self.spectrum.input_file.is_empty() {
                    return bad("the spectrum-file scenario needs spectrum.input_file".into());
                }
            }
        }
        if self.scenario.is_channel() {
            self.estimator.training.validate().map_err(cfg)?;
            let n = self.coding_dimension();
            let d = &self.dictionary;
            if d.atoms < n {
                return bad(format!("dictionary.atoms ({}) must be at least the coding dimension {n}", d.atoms));
            }
            if d.target_sparsity == 0 || d.target_sparsity > d.atoms {
                return bad(format!("dictionary.target_sparsity must lie in [1, {}]", d.atoms));
            }
            if !(self.estimator.epsilon > 0.0 && self.estimator.epsilon < 1.0) {
                return bad(format!("estimator.epsilon must lie in (0, 1), got {}", self.estimator.epsilon));
            }
            if self.estimator.snr_min_db > self.estimator.snr_max_db {
                return bad("estimator SNR range is empty".into());
            }
        }
        let ev = &self.evaluation;
        if !(ev.snr_step_db > 0.0) || ev.snr_stop_db < ev.snr_start_db {
            return bad("evaluation SNR grid is empty".into());
        }
        Ok(())
    }

    /// SHA-256 of the canonical serialization, ignoring where outputs go.
    pub fn hash(&self) -> CliResult<String> {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        Ok(hex::encode(Sha256::digest(c.to_toml()?.as_bytes())))
    }

    /// Short identifier recorded in metadata files.
    pub fn config_id(&self) -> CliResult<String> {
        Ok(self.hash()?[..12].to_string())
    }

    /// 64-bit digest stored in binary headers.
    pub fn hash_u64(&self) -> CliResult<u64> {
        let h = self.hash()?;
        Ok(u64::from_str_radix(&h[..16], 16).expect("hex digest"))
    }
}
