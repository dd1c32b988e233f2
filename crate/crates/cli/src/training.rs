//! `train`: dictionary learning, labelling and regressor fitting.
//!
//! Each stage is keyed by a digest of the configuration and of its input
//! files; a rerun skips any stage whose key is unchanged and whose outputs
//! are still on disk.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use sha2::{Digest, Sha256};
use sparsecs_core::dictionary::io::{read_dictionary, write_dictionary};
use sparsecs_core::dictionary::{ksvd, multidomain_init, Dictionary, KsvdParams, TrainingCorpus};
use sparsecs_core::estimator::io::{read_model, write_model};
use sparsecs_core::estimator::{
    extract_features, label_sparsity, stratified_split, train, FeatureEncoding, FeatureVector, LabeledDataset,
    ModelMeta, Split, SparsityRegressor, TrainReport, TrainingHyperparams, Transform, TransformKind,
};
use sparsecs_core::seed::derive;
use sparsecs_core::{CMat, C64};

use crate::config::ExperimentConfig;
use crate::data::{
    clean_vectors, create, csv_err, load_channel_set, load_spectra, noisy_vectors, open, system_noise_seed, system_snr,
    ChannelSet, Layout,
};
use crate::error::{CliError, CliResult};
use crate::manifest::{sha256_file, RunManifest};

/// Train / validation / test shares of the labelled set.
pub const SPLIT_RATIOS: [f64; 3] = [0.6, 0.2, 0.2];

/// Labelled samples ready for the regressor.
#[derive(Debug, Clone)]
pub struct SampleSet {
    pub features: Vec<FeatureVector>,
    pub labels: Vec<usize>,
    pub snr_db: Vec<f64>,
    /// Noise-free signals (channel vectors or PSDs).
    pub clean: Vec<Vec<C64>>,
    /// Realization each sample came from.
    pub source: Vec<usize>,
}

impl SampleSet {
    pub fn split(&self, cfg: &ExperimentConfig) -> CliResult<Split> {
        Ok(stratified_split(&self.labels, SPLIT_RATIOS, derive(cfg.seed, "split", 0))?)
    }

    pub fn dataset(&self, split: Split) -> CliResult<LabeledDataset> {
        Ok(LabeledDataset::new(&self.features, self.labels.clone(), split)?)
    }
}

fn transform<'a>(enc: &FeatureEncoding, d: Option<&'a Dictionary>) -> CliResult<Transform<'a>> {
    match (enc.transform, d) {
        (TransformKind::Dft, _) => Ok(Transform::Dft),
        (TransformKind::Dictionary, Some(d)) => Ok(Transform::Dictionary(d)),
        (TransformKind::Dictionary, None) => Err(CliError::Config("dictionary features need a dictionary".into())),
    }
}

fn digest(parts: &[&str]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0u8]);
    }
    hex::encode(h.finalize())
}

fn input_key(cfg: &ExperimentConfig, stage: &str, inputs: &[std::path::PathBuf]) -> CliResult<String> {
    let mut parts = vec![cfg.hash()?, stage.to_string()];
    for p in inputs {
        if !p.exists() {
            return Err(CliError::MissingArtifact(format!("{}; run gen-data first", p.display())));
        }
        parts.push(sha256_file(p)?);
    }
    let refs: Vec<&str> = parts.iter().map(String::as_str).collect();
    Ok(digest(&refs))
}

fn matrix_of(vectors: &[Vec<C64>], n: usize) -> CMat {
    let mut m = CMat::zeros(n, vectors.len());
    for (c, v) in vectors.iter().enumerate() {
        for (r, z) in v.iter().enumerate() {
            m[(r, c)] = *z;
        }
    }
    m
}

fn set_vectors(cfg: &ExperimentConfig, layout: &Layout, set: ChannelSet) -> CliResult<Vec<Vec<C64>>> {
    let items = load_channel_set(cfg, layout, set)?;
    let per: Vec<Vec<Vec<C64>>> = items.par_iter().map(|r| clean_vectors(cfg, r)).collect::<CliResult<_>>()?;
    Ok(per.into_iter().flatten().collect())
}

/// Builds the corpus, initialises and learns the dictionary.
pub fn learn_dictionary(cfg: &ExperimentConfig, layout: &Layout) -> CliResult<(Dictionary, Vec<f64>)> {
    let n = cfg.coding_dimension();
    let sets: Vec<CMat> = [ChannelSet::General, ChannelSet::Angle, ChannelSet::Delay, ChannelSet::Doppler]
        .iter()
        .map(|&s| set_vectors(cfg, layout, s).map(|v| matrix_of(&v, n)))
        .collect::<CliResult<_>>()?;
    let corpus = TrainingCorpus { general: sets[0].clone(), angle: sets[1].clone(), delay: sets[2].clone(), doppler: sets[3].clone() };
    let d0 = multidomain_init(&corpus, cfg.dictionary.atoms)?;
    let dc = &cfg.dictionary;
    let params = KsvdParams {
        target_sparsity: dc.target_sparsity,
        iterations: dc.iterations,
        power_tolerance: dc.power_tolerance,
        replace_coherence: (dc.replace_coherence < 1.0).then_some(dc.replace_coherence),
        training_set: format!("{} ({} columns)", ChannelSet::General.name(), corpus.general.ncols()),
        ..KsvdParams::default()
    };
    let out = ksvd(&corpus.general, &d0, &params)?;
    let mut curve = vec![out.initial_objective];
    curve.extend(out.objective);
    log::info!("K-SVD: objective {:.4e} → {:.4e}, {} atom replacements", curve[0], curve[curve.len() - 1], out.replacements);
    Ok((out.dictionary, curve))
}

/// Labels and features for the `systems` set.
pub fn channel_samples(cfg: &ExperimentConfig, layout: &Layout, d: &Dictionary) -> CliResult<SampleSet> {
    let items = load_channel_set(cfg, layout, ChannelSet::Systems)?;
    let tf = transform(&cfg.estimator.encoding, Some(d))?;
    let eps = cfg.estimator.epsilon;
    type Row = (FeatureVector, usize, f64, Vec<C64>, usize);
    let per: Vec<Vec<Row>> = items
        .par_iter()
        .enumerate()
        .map(|(i, r)| {
            let snr = system_snr(cfg, i as u64);
            let clean = clean_vectors(cfg, r)?;
            let noisy = noisy_vectors(cfg, r, snr, system_noise_seed(cfg, i as u64))?;
            clean
                .into_iter()
                .zip(noisy)
                .map(|(c, z)| {
                    let label = label_sparsity(&c, d.atoms(), eps)?;
                    let f = extract_features(&z, tf, &cfg.estimator.encoding)?;
                    Ok((f, label, snr, c, i))
                })
                .collect::<CliResult<Vec<Row>>>()
        })
        .collect::<CliResult<_>>()?;
    let mut s = SampleSet { features: vec![], labels: vec![], snr_db: vec![], clean: vec![], source: vec![] };
    for (f, l, snr, c, i) in per.into_iter().flatten() {
        s.features.push(f);
        s.labels.push(l);
        s.snr_db.push(snr);
        s.clean.push(c);
        s.source.push(i);
    }
    Ok(s)
}

/// Features and band-count labels of the synthetic spectra.
pub fn spectrum_samples(cfg: &ExperimentConfig, layout: &Layout) -> CliResult<SampleSet> {
    let spectra = load_spectra(layout)?;
    let enc = &cfg.spectrum.encoding;
    let tf = transform(enc, None)?;
    let feats: Vec<FeatureVector> = spectra
        .par_iter()
        .map(|s| extract_features(&s.observation.as_signal(), tf, enc))
        .collect::<Result<_, _>>()?;
    Ok(SampleSet {
        features: feats,
        labels: spectra.iter().map(|s| s.observation.occupied_band_count.unwrap_or(0)).collect(),
        snr_db: spectra.iter().map(|s| s.snr_db).collect(),
        clean: spectra.iter().map(|s| s.observation.as_signal()).collect(),
        source: (0..spectra.len()).collect(),
    })
}

fn model_meta(cfg: &ExperimentConfig) -> ModelMeta {
    if cfg.scenario.is_channel() {
        ModelMeta { encoding: cfg.estimator.encoding, epsilon: cfg.estimator.epsilon, max_sparsity: cfg.estimator.max_sparsity }
    } else {
        ModelMeta { encoding: cfg.spectrum.encoding, epsilon: 0.0, max_sparsity: cfg.spectrum.max_bands }
    }
}

pub fn hyperparams(cfg: &ExperimentConfig) -> TrainingHyperparams {
    let mut hp = if cfg.scenario.is_channel() { cfg.estimator.training.clone() } else { cfg.spectrum.training.clone() };
    hp.seed = derive(cfg.seed ^ hp.seed, "train", 0);
    hp
}

/// Fits a regressor on `samples` with the given split.
pub fn fit(cfg: &ExperimentConfig, samples: &SampleSet, split: Split, hp: &TrainingHyperparams) -> CliResult<TrainReport> {
    let ds = samples.dataset(split)?;
    Ok(train(&ds, hp, &model_meta(cfg))?)
}

pub fn write_loss_curve<W: Write>(w: W, report: &TrainReport) -> CliResult<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["epoch", "train_mse", "validation_mse"]).map_err(csv_err)?;
    for e in &report.curve {
        wr.write_record([e.epoch.to_string(), e.train_mse.to_string(), e.validation_mse.to_string()]).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn load_dictionary(layout: &Layout) -> CliResult<Dictionary> {
    Ok(read_dictionary(&mut open(&layout.dictionary())?)?)
}

pub fn load_model(layout: &Layout) -> CliResult<SparsityRegressor> {
    Ok(read_model(&mut open(&layout.model())?)?)
}

/// `train`: runs (or skips) the dictionary, labelling and model stages.
pub fn run_train(cfg: &ExperimentConfig, layout: &Layout, manifest: &mut RunManifest) -> CliResult<()> {
    let root = &layout.root;
    let samples = if cfg.scenario.is_channel() {
        let inputs: Vec<_> = [ChannelSet::General, ChannelSet::Angle, ChannelSet::Delay, ChannelSet::Doppler]
            .iter()
            .map(|&s| layout.channel_bin(s))
            .collect();
        let key = input_key(cfg, "dictionary", &inputs)?;
        let dict = if manifest.is_current(root, "dictionary", &key)? {
            log::info!("dictionary is up to date; skipping K-SVD");
            load_dictionary(layout)?
        } else {
            let t = Instant::now();
            let (d, curve) = learn_dictionary(cfg, layout)?;
            write_dictionary(&mut create(&layout.dictionary())?, &d)?;
            let mut wr = csv::Writer::from_writer(create(&layout.ksvd_curve())?);
            wr.write_record(["iteration", "objective"]).map_err(csv_err)?;
            for (i, v) in curve.iter().enumerate() {
                wr.write_record([i.to_string(), v.to_string()]).map_err(csv_err)?;
            }
            wr.flush()?;
            drop(wr);
            let outs = vec![layout.rel(&layout.dictionary()), layout.rel(&layout.ksvd_curve())];
            manifest.record("dictionary", key, t.elapsed().as_secs_f64(), outs);
            manifest.save(root)?;
            d
        };
        let key = input_key(cfg, "model", &[layout.dictionary(), layout.channel_bin(ChannelSet::Systems)])?;
        if manifest.is_current(root, "model", &key)? {
            log::info!("model is up to date; skipping training");
            return Ok(());
        }
        (channel_samples(cfg, layout, &dict)?, key)
    } else {
        let key = input_key(cfg, "model", &[layout.spectrum_csv(), layout.spectrum_meta()])?;
        if manifest.is_current(root, "model", &key)? {
            log::info!("model is up to date; skipping training");
            return Ok(());
        }
        (spectrum_samples(cfg, layout)?, key)
    };
    let (samples, key) = samples;
    if samples.labels.is_empty() {
        return Err(CliError::MissingArtifact("the labelled set is empty; increase the sample count and rerun gen-data".into()));
    }
    let t = Instant::now();
    let split = samples.split(cfg)?;
    let mut wr = csv::Writer::from_writer(create(&layout.labels())?);
    wr.write_record(["index", "source", "label", "snr_db", "split"]).map_err(csv_err)?;
    let mut which = vec!["train"; samples.labels.len()];
    for &i in &split.validation {
        which[i] = "validation";
    }
    for &i in &split.test {
        which[i] = "test";
    }
    for i in 0..samples.labels.len() {
        wr.write_record([
            i.to_string(),
            samples.source[i].to_string(),
            samples.labels[i].to_string(),
            samples.snr_db[i].to_string(),
            which[i].to_string(),
        ])
        .map_err(csv_err)?;
    }
    wr.flush()?;
    drop(wr);
    let report = fit(cfg, &samples, split, &hyperparams(cfg))?;
    log::info!(
        "regressor: best epoch {} of {}, validation MSE {:.4}",
        report.best_epoch,
        report.curve.len(),
        report.curve.get(report.best_epoch.saturating_sub(1)).map(|e| e.validation_mse).unwrap_or(f64::NAN)
    );
    write_model(&mut create(&layout.model())?, &report.model)?;
    write_loss_curve(create(&layout.loss_curve())?, &report)?;
    let outs = vec![layout.rel(&layout.labels()), layout.rel(&layout.model()), layout.rel(&layout.loss_curve())];
    manifest.record("model", key, t.elapsed().as_secs_f64(), outs);
    Ok(())
}
