//! Dataset generation and loading.
//!
//! Every realization is drawn from its own derived seed, so files are
//! byte-identical across runs and thread counts. Channel sets are stored as
//! realization files plus a metadata CSV; spectra as a PSD CSV plus a
//! metadata CSV.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sparsecs_core::channel::io::{read_realizations, write_realizations, SeededRealization};
use sparsecs_core::channel::{
    awgn, draw_virtual_coefficients_with, gscm_channel, ofdm_roundtrip, vcm_cfr, DomainFocus,
};
use sparsecs_core::pipelines::{read_psd_csv, synthesize_spectrum, write_psd_csv, SpectrumObservation};
use sparsecs_core::seed::{self, derive};
use sparsecs_core::{CMat, C64};

use crate::config::{ExperimentConfig, Scenario};
use crate::error::{CliError, CliResult};

/// The channel sets written by `gen-data`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelSet {
    /// General dictionary-training corpus `Y`.
    General,
    Angle,
    Delay,
    Doppler,
    /// Labelled vectors for the regressor.
    Systems,
    /// Held-out realizations for the SNR sweep.
    Test,
}

impl ChannelSet {
    pub const ALL: [ChannelSet; 6] =
        [ChannelSet::General, ChannelSet::Angle, ChannelSet::Delay, ChannelSet::Doppler, ChannelSet::Systems, ChannelSet::Test];

    pub fn name(self) -> &'static str {
        match self {
            ChannelSet::General => "corpus_general",
            ChannelSet::Angle => "corpus_angle",
            ChannelSet::Delay => "corpus_delay",
            ChannelSet::Doppler => "corpus_doppler",
            ChannelSet::Systems => "systems",
            ChannelSet::Test => "test",
        }
    }

    fn focus(self) -> DomainFocus {
        match self {
            ChannelSet::Angle => DomainFocus::Angle,
            ChannelSet::Delay => DomainFocus::Delay,
            ChannelSet::Doppler => DomainFocus::Doppler,
            _ => DomainFocus::Mixed,
        }
    }

    fn count(self, cfg: &ExperimentConfig) -> usize {
        let domain = if cfg.scenario == Scenario::ChannelVcm { cfg.dictionary.domain_columns } else { 0 };
        match self {
            ChannelSet::General => cfg.dictionary.training_columns,
            ChannelSet::Angle | ChannelSet::Delay | ChannelSet::Doppler => domain,
            ChannelSet::Systems => cfg.estimator.systems,
            ChannelSet::Test => cfg.evaluation.realizations,
        }
    }
}

/// Output-directory layout.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: &Path) -> Self {
        Self { root: root.to_path_buf() }
    }

    pub fn rel(&self, p: &Path) -> String {
        p.strip_prefix(&self.root).unwrap_or(p).to_string_lossy().replace('\\', "/")
    }

    pub fn channel_bin(&self, set: ChannelSet) -> PathBuf {
        self.root.join("data").join(format!("{}.bin", set.name()))
    }

    pub fn channel_csv(&self, set: ChannelSet) -> PathBuf {
        self.root.join("data").join(format!("{}.csv", set.name()))
    }

    pub fn spectrum_csv(&self) -> PathBuf {
        self.root.join("data/spectra.csv")
    }

    pub fn spectrum_meta(&self) -> PathBuf {
        self.root.join("data/spectra_meta.csv")
    }

    pub fn dictionary(&self) -> PathBuf {
        self.root.join("artifacts/dictionary.bin")
    }

    pub fn ksvd_curve(&self) -> PathBuf {
        self.root.join("artifacts/ksvd_objective.csv")
    }

    pub fn labels(&self) -> PathBuf {
        self.root.join("artifacts/labels.csv")
    }

    pub fn model(&self) -> PathBuf {
        self.root.join("artifacts/model.bin")
    }

    pub fn loss_curve(&self) -> PathBuf {
        self.root.join("artifacts/loss_curve.csv")
    }

    pub fn result(&self, name: &str) -> PathBuf {
        self.root.join("results").join(name)
    }

    pub fn bench(&self, name: &str) -> PathBuf {
        self.root.join("bench").join(name)
    }
}

pub fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}

/// Creates `path`'s parent and opens it for buffered writing.
pub fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(p) = path.parent() {
        std::fs::create_dir_all(p)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

pub fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::MissingArtifact(format!("{}: {e}; run the earlier stages first", path.display())))
}

/// A channel realization drawn from the configured generator.
pub fn draw_channel(cfg: &ExperimentConfig, stage: &str, index: u64, focus: DomainFocus) -> CliResult<SeededRealization> {
    let s = derive(cfg.seed, stage, index);
    let realization = match cfg.scenario {
        Scenario::ChannelVcm => {
            let mut rng = seed::rng(s);
            let hv = draw_virtual_coefficients_with(&cfg.channel, focus, &mut rng)?;
            vcm_cfr(&hv, &cfg.channel)?
        }
        Scenario::ChannelGscm => gscm_channel(&cfg.gscm, s)?,
        _ => return Err(CliError::Config("channel data requested for a spectrum scenario".into())),
    };
    Ok(SeededRealization { seed: s, realization })
}

/// Per-sample SNR of system `index`.
pub fn system_snr(cfg: &ExperimentConfig, index: u64) -> f64 {
    use rand::Rng;
    let (lo, hi) = (cfg.estimator.snr_min_db, cfg.estimator.snr_max_db);
    if hi <= lo {
        return lo;
    }
    seed::rng(derive(cfg.seed, "systems/snr", index)).random_range(lo..hi)
}

/// Noise-free coding vectors of a realization.
pub fn clean_vectors(cfg: &ExperimentConfig, r: &SeededRealization) -> CliResult<Vec<Vec<C64>>> {
    match cfg.scenario {
        Scenario::ChannelVcm => {
            let frame = ofdm_roundtrip(&r.realization, &cfg.frame, f64::INFINITY, 0)?;
            Ok(cfg.estimation.channel_vectors(&frame, &frame.true_cfr))
        }
        _ => Ok(vec![r.realization.cir.column(0).iter().cloned().collect()]),
    }
}

/// Coding vectors observed at `snr_db` (LS pilot estimates for OFDM
/// channels, the noisy array response for GSCM channels).
pub fn noisy_vectors(cfg: &ExperimentConfig, r: &SeededRealization, snr_db: f64, noise_seed: u64) -> CliResult<Vec<Vec<C64>>> {
    match cfg.scenario {
        Scenario::ChannelVcm => {
            let frame = ofdm_roundtrip(&r.realization, &cfg.frame, snr_db, noise_seed)?;
            Ok(cfg.estimation.observation_vectors(&frame))
        }
        _ => {
            let h = r.realization.cir.column(0).into_owned();
            let p = h.norm_squared() / h.len().max(1) as f64;
            let mut m = CMat::from_column_slice(h.len(), 1, h.as_slice());
            awgn(&mut m, p / 10f64.powf(snr_db / 10.0), &mut seed::rng(noise_seed));
            Ok(vec![m.as_slice().to_vec()])
        }
    }
}

/// Noise seed of system `index` in the labelled set.
pub fn system_noise_seed(cfg: &ExperimentConfig, index: u64) -> u64 {
    derive(cfg.seed, "systems/noise", index)
}

fn write_channel_set(cfg: &ExperimentConfig, layout: &Layout, set: ChannelSet) -> CliResult<Vec<PathBuf>> {
    let n = set.count(cfg);
    let stage = format!("data/{}", set.name());
    let items: Vec<SeededRealization> = (0..n as u64)
        .into_par_iter()
        .map(|i| draw_channel(cfg, &stage, i, set.focus()))
        .collect::<CliResult<_>>()?;
    let shape = match cfg.scenario {
        Scenario::ChannelVcm => (cfg.channel.subcarriers, cfg.channel.blocks),
        _ => (cfg.gscm.antenna_count, 1),
    };
    let bin = layout.channel_bin(set);
    let mut w = create(&bin)?;
    write_realizations(&mut w, &items, shape, cfg.hash_u64()?)?;
    drop(w);

    let csv_path = layout.channel_csv(set);
    let mut wr = csv::Writer::from_writer(create(&csv_path)?);
    let id = cfg.config_id()?;
    wr.write_record(["index", "seed", "config_id", "true_sparsity", "snr_db"]).map_err(csv_err)?;
    for (i, it) in items.iter().enumerate() {
        let snr = if set == ChannelSet::Systems { system_snr(cfg, i as u64).to_string() } else { String::new() };
        wr.write_record([i.to_string(), it.seed.to_string(), id.clone(), it.realization.true_sparsity.to_string(), snr])
            .map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(vec![bin, csv_path])
}

/// Reads a channel set written by `gen-data`, checking it was produced by
/// the same configuration.
pub fn load_channel_set(cfg: &ExperimentConfig, layout: &Layout, set: ChannelSet) -> CliResult<Vec<SeededRealization>> {
    let path = layout.channel_bin(set);
    let (items, hash) = read_realizations(&mut open(&path)?)?;
    if hash != cfg.hash_u64()? {
        return Err(CliError::MissingArtifact(format!(
            "{} was generated with a different configuration; rerun gen-data",
            path.display()
        )));
    }
    Ok(items)
}

/// A synthetic spectrum with its SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSample {
    pub observation: SpectrumObservation,
    pub snr_db: f64,
    pub seed: u64,
}

fn draw_spectrum(cfg: &ExperimentConfig, index: u64) -> CliResult<SpectrumSample> {
    use rand::Rng;
    let sc = &cfg.spectrum;
    let mut rng = seed::rng(derive(cfg.seed, "data/spectra/draw", index));
    let bands = rng.random_range(0..=sc.max_bands);
    let snr_db = if sc.snr_max_db > sc.snr_min_db { rng.random_range(sc.snr_min_db..sc.snr_max_db) } else { sc.snr_min_db };
    let s = derive(cfg.seed, "data/spectra", index);
    let observation = synthesize_spectrum(bands, snr_db, &sc.synthesis, s)?;
    Ok(SpectrumSample { observation, snr_db, seed: s })
}

fn write_spectra(cfg: &ExperimentConfig, layout: &Layout) -> CliResult<Vec<PathBuf>> {
    let samples: Vec<SpectrumSample> = (0..cfg.spectrum.observations as u64)
        .into_par_iter()
        .map(|i| draw_spectrum(cfg, i))
        .collect::<CliResult<_>>()?;
    let obs: Vec<SpectrumObservation> = samples.iter().map(|s| s.observation.clone()).collect();
    let psd = layout.spectrum_csv();
    write_psd_csv(create(&psd)?, &cfg.spectrum.synthesis.geometry, &obs)?;
    let meta = layout.spectrum_meta();
    let mut wr = csv::Writer::from_writer(create(&meta)?);
    wr.write_record(["index", "seed", "bands", "snr_db"]).map_err(csv_err)?;
    for (i, s) in samples.iter().enumerate() {
        wr.write_record([
            i.to_string(),
            s.seed.to_string(),
            s.observation.occupied_band_count.unwrap_or(0).to_string(),
            s.snr_db.to_string(),
        ])
        .map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(vec![psd, meta])
}

/// Reads the synthetic spectra and their SNRs.
pub fn load_spectra(layout: &Layout) -> CliResult<Vec<SpectrumSample>> {
    let obs = read_psd_csv(open(&layout.spectrum_csv())?)?;
    let mut rd = csv::Reader::from_reader(open(&layout.spectrum_meta())?);
    let mut out = Vec::with_capacity(obs.len());
    for (o, rec) in obs.into_iter().zip(rd.records()) {
        let rec = rec.map_err(csv_err)?;
        let parse_err = || CliError::MissingArtifact("malformed spectra_meta.csv".into());
        let seed = rec[1].parse().map_err(|_| parse_err())?;
        let snr_db = rec[3].parse().map_err(|_| parse_err())?;
        out.push(SpectrumSample { observation: o, snr_db, seed });
    }
    Ok(out)
}

/// `gen-data`: writes every dataset the scenario needs; returns the files.
pub fn gen_data(cfg: &ExperimentConfig, layout: &Layout) -> CliResult<Vec<PathBuf>> {
    let mut files = Vec::new();
    if cfg.scenario.is_channel() {
        for set in ChannelSet::ALL {
            files.extend(write_channel_set(cfg, layout, set)?);
        }
    } else {
        files.extend(write_spectra(cfg, layout)?);
    }
    Ok(files)
}
