//! `eval`: result tables from trained artifacts.
//!
//! * `scatter.csv` — predicted vs. labelled sparsity on the test split.
//! * `mse_vs_snr.csv` / `mse_summary.csv` — channel-estimation error of the
//!   LS, DFT-known-s, Proposed and Oracle estimators over the SNR grid.
//! * `train_size.csv` — regressor test error against training-set size.
//! * `correspondence.csv` / `atom_dft_sparsity.csv` — how sparse the
//!   learned atoms and the test signals are in the DFT domain.
//! * `spectrum_scatter.csv`, `psd_predictions.csv` — spectrum scenarios.

use std::time::Instant;

use rayon::prelude::*;
use sparsecs_core::channel::io::SeededRealization;
use sparsecs_core::channel::ofdm_roundtrip;
use sparsecs_core::dictionary::{atom_basis_profile, Dictionary};
use sparsecs_core::estimator::{feature_dim, predict_sparsity, Split, SparsityRegressor, Transform, TransformKind};
use sparsecs_core::pipelines::{
    estimate_dft_known_s, estimate_ls, estimate_oracle, estimate_proposed, estimate_spectrum_sparsity, ingest_psd,
    ChannelEstimate, Method,
};
use sparsecs_core::recovery::{basis_sparsity, omp, SparseCode, StopRule};
use sparsecs_core::seed::derive;
use sparsecs_core::CMat;

use crate::config::{ExperimentConfig, Scenario};
use crate::data::{clean_vectors, create, csv_err, load_channel_set, ChannelSet, Layout};
use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;
use crate::stats::{mean, median, paired_bootstrap_ci, spearman};
use crate::training::{channel_samples, fit, hyperparams, load_dictionary, load_model, spectrum_samples, SampleSet};

/// One row of the SNR sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct MseRow {
    pub method: Method,
    pub snr_db: f64,
    pub seed: u64,
    pub realization: usize,
    pub mse: f64,
    pub estimated_sparsity: Option<usize>,
}

/// One point of the training-set-size sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SizePoint {
    pub train_size: usize,
    pub test_mse: f64,
    pub test_mae: f64,
    pub exact_rate: f64,
    pub best_epoch: usize,
}

/// One test-split prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterRow {
    pub index: usize,
    pub snr_db: f64,
    pub truth: usize,
    pub predicted: usize,
    pub raw: f64,
}

fn check_model(model: &SparsityRegressor, samples: &SampleSet) -> CliResult<()> {
    if let Some(f) = samples.features.first() {
        if f.len() != model.input_dim() {
            return Err(CliError::Config(format!(
                "model expects {} features but the configuration produces {}; retrain",
                model.input_dim(),
                f.len()
            )));
        }
    }
    Ok(())
}

/// Rounded predictions for the test split.
pub fn scatter(model: &SparsityRegressor, samples: &SampleSet, split: &Split) -> CliResult<Vec<ScatterRow>> {
    split
        .test
        .iter()
        .map(|&i| {
            let raw = model.raw_output(&samples.features[i])?;
            Ok(ScatterRow {
                index: i,
                snr_db: samples.snr_db[i],
                truth: samples.labels[i],
                predicted: predict_sparsity(model, &samples.features[i])?,
                raw,
            })
        })
        .collect()
}

fn write_scatter(path: &std::path::Path, rows: &[ScatterRow]) -> CliResult<()> {
    let mut wr = csv::Writer::from_writer(create(path)?);
    wr.write_record(["index", "snr_db", "true_sparsity", "predicted_sparsity", "raw_output"]).map_err(csv_err)?;
    for r in rows {
        wr.write_record([r.index.to_string(), r.snr_db.to_string(), r.truth.to_string(), r.predicted.to_string(), r.raw.to_string()])
            .map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

/// Regressor test error for each training-set size (nested prefixes of the
/// training split; validation and test splits fixed).
pub fn train_size_sweep(cfg: &ExperimentConfig, samples: &SampleSet, split: &Split) -> CliResult<Vec<SizePoint>> {
    let mut out = Vec::new();
    for &size in &cfg.evaluation.train_sizes {
        if size > split.train.len() {
            log::warn!("training split has {} samples; skipping size {size}", split.train.len());
            continue;
        }
        let keep: Vec<usize> =
            split.train[..size].iter().chain(&split.validation).chain(&split.test).copied().collect();
        let sub = SampleSet {
            features: keep.iter().map(|&i| samples.features[i].clone()).collect(),
            labels: keep.iter().map(|&i| samples.labels[i]).collect(),
            snr_db: keep.iter().map(|&i| samples.snr_db[i]).collect(),
            clean: Vec::new(),
            source: keep.iter().map(|&i| samples.source[i]).collect(),
        };
        let nv = split.validation.len();
        let sub_split = Split {
            train: (0..size).collect(),
            validation: (size..size + nv).collect(),
            test: (size + nv..keep.len()).collect(),
        };
        let report = fit(cfg, &sub, sub_split.clone(), &hyperparams(cfg))?;
        let rows = scatter(&report.model, &sub, &sub_split)?;
        let n = rows.len().max(1) as f64;
        out.push(SizePoint {
            train_size: size,
            test_mse: rows.iter().map(|r| (r.raw - r.truth as f64).powi(2)).sum::<f64>() / n,
            test_mae: rows.iter().map(|r| r.predicted.abs_diff(r.truth) as f64).sum::<f64>() / n,
            exact_rate: rows.iter().filter(|r| r.predicted == r.truth).count() as f64 / n,
            best_epoch: report.best_epoch,
        });
        log::info!("train-size sweep: {size} samples → test MSE {:.4}", out[out.len() - 1].test_mse);
    }
    Ok(out)
}

/// Codes of the clean coding vectors at the labelling tolerance: the oracle
/// support of a realization.
pub fn oracle_codes(cfg: &ExperimentConfig, d: &Dictionary, r: &SeededRealization) -> CliResult<Vec<SparseCode>> {
    clean_vectors(cfg, r)?
        .iter()
        .map(|c| {
            let norm = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            Ok(omp(c, d.atoms(), StopRule::tolerance(cfg.estimator.epsilon * norm))?)
        })
        .collect()
}

/// Channel-estimation error of every method over the SNR grid.
pub fn snr_sweep(
    cfg: &ExperimentConfig,
    d: &Dictionary,
    model: &SparsityRegressor,
    test: &[SeededRealization],
) -> CliResult<Vec<MseRow>> {
    let codes: Vec<Vec<SparseCode>> = test.par_iter().map(|r| oracle_codes(cfg, d, r)).collect::<CliResult<_>>()?;
    let grid = cfg.evaluation.snr_grid();
    let nr = test.len();
    let jobs: Vec<(usize, usize)> = (0..grid.len()).flat_map(|s| (0..nr).map(move |r| (s, r))).collect();
    let est = &cfg.estimation;
    let per: Vec<Vec<MseRow>> = jobs
        .par_iter()
        .map(|&(si, ri)| {
            let snr = grid[si];
            let seed = derive(cfg.seed, "eval/noise", (si * nr + ri) as u64);
            let frame = ofdm_roundtrip(&test[ri].realization, &cfg.frame, snr, seed)?;
            let s_true = codes[ri].iter().map(|c| c.sparsity()).max().unwrap_or(0).max(1);
            let estimates: [ChannelEstimate; 4] = [
                estimate_ls(&frame, est),
                estimate_dft_known_s(&frame, s_true, est)?,
                estimate_proposed(&frame, d, model, est)?,
                estimate_oracle(&frame, d, &codes[ri], est)?,
            ];
            Ok(estimates
                .into_iter()
                .map(|e| MseRow {
                    method: e.method,
                    snr_db: snr,
                    seed,
                    realization: ri,
                    mse: e.mse,
                    estimated_sparsity: e.estimated_sparsity,
                })
                .collect())
        })
        .collect::<CliResult<_>>()?;
    let rows: Vec<MseRow> = per.into_iter().flatten().collect();
    if let Some(bad) = rows.iter().find(|r| !r.mse.is_finite()) {
        return Err(CliError::Numerical(format!("{} produced a non-finite MSE at {} dB", bad.method.label(), bad.snr_db)));
    }
    Ok(rows)
}

/// MSEs of one method at one SNR, in realization order.
pub fn mse_of(rows: &[MseRow], method: Method, snr_db: f64) -> Vec<f64> {
    rows.iter().filter(|r| r.method == method && r.snr_db == snr_db).map(|r| r.mse).collect()
}

fn write_sweep(cfg: &ExperimentConfig, layout: &Layout, rows: &[MseRow]) -> CliResult<()> {
    let mut wr = csv::Writer::from_writer(create(&layout.result("mse_vs_snr.csv"))?);
    wr.write_record(["method", "snr_db", "seed", "realization", "mse", "estimated_sparsity"]).map_err(csv_err)?;
    for r in rows {
        wr.write_record([
            r.method.label().to_string(),
            r.snr_db.to_string(),
            r.seed.to_string(),
            r.realization.to_string(),
            r.mse.to_string(),
            r.estimated_sparsity.map(|s| s.to_string()).unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    wr.flush()?;
    drop(wr);

    let mut wr = csv::Writer::from_writer(create(&layout.result("mse_summary.csv"))?);
    wr.write_record(["method", "snr_db", "mean_mse", "ci_low", "ci_high", "realizations"]).map_err(csv_err)?;
    for method in Method::ALL {
        for (si, &snr) in cfg.evaluation.snr_grid().iter().enumerate() {
            let v = mse_of(rows, method, snr);
            let zeros = vec![0.0; v.len()];
            let (lo, hi) = paired_bootstrap_ci(&v, &zeros, cfg.evaluation.bootstrap_resamples, derive(cfg.seed, "eval/bootstrap", si as u64));
            wr.write_record([
                method.label().to_string(),
                snr.to_string(),
                mean(&v).to_string(),
                lo.to_string(),
                hi.to_string(),
                v.len().to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    wr.flush()?;
    Ok(())
}

/// Median DFT sparsity of the atoms and the rank correlation between
/// dictionary-domain labels and DFT-domain sparsity on the test split.
#[derive(Debug, Clone, PartialEq)]
pub struct Correspondence {
    pub atom_dft_sparsity: Vec<usize>,
    pub median_atom_dft_sparsity: f64,
    pub spearman: f64,
    pub samples: usize,
}

pub const CORRESPONDENCE_ETA: f64 = 0.99;

/// `basis` is the DFT basis matching the coding vectors (see
/// [`ExperimentConfig::dft_basis`]).
pub fn correspondence(d: &Dictionary, basis: &CMat, samples: &SampleSet, split: &Split) -> CliResult<Correspondence> {
    let profile = atom_basis_profile(d, basis, CORRESPONDENCE_ETA)?;
    let med = median(&profile.iter().map(|&s| s as f64).collect::<Vec<_>>());
    let dict_s: Vec<f64> = split.test.iter().map(|&i| samples.labels[i] as f64).collect();
    let dft_s: Vec<f64> = split
        .test
        .iter()
        .map(|&i| basis_sparsity(&samples.clean[i], basis, CORRESPONDENCE_ETA).map(|s| s as f64))
        .collect::<Result<_, _>>()?;
    Ok(Correspondence { atom_dft_sparsity: profile, median_atom_dft_sparsity: med, spearman: spearman(&dict_s, &dft_s), samples: dict_s.len() })
}

fn write_sizes(layout: &Layout, pts: &[SizePoint]) -> CliResult<()> {
    let mut wr = csv::Writer::from_writer(create(&layout.result("train_size.csv"))?);
    wr.write_record(["train_size", "test_mse", "test_mae", "exact_rate", "best_epoch"]).map_err(csv_err)?;
    for p in pts {
        wr.write_record([
            p.train_size.to_string(),
            p.test_mse.to_string(),
            p.test_mae.to_string(),
            p.exact_rate.to_string(),
            p.best_epoch.to_string(),
        ])
        .map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

fn run_channel(cfg: &ExperimentConfig, layout: &Layout) -> CliResult<()> {
    let d = load_dictionary(layout)?;
    let model = load_model(layout)?;
    if model.encoding != cfg.estimator.encoding {
        return Err(CliError::Config("model feature encoding differs from the configuration; retrain".into()));
    }
    let tf = match model.encoding.transform {
        TransformKind::Dft => Transform::Dft,
        TransformKind::Dictionary => Transform::Dictionary(&d),
    };
    let expected = feature_dim(cfg.coding_dimension(), tf, &model.encoding);
    if expected != model.input_dim() {
        return Err(CliError::Config(format!(
            "model expects {} features, the configuration yields {expected}",
            model.input_dim()
        )));
    }
    let samples = channel_samples(cfg, layout, &d)?;
    check_model(&model, &samples)?;
    let split = samples.split(cfg)?;
    write_scatter(&layout.result("scatter.csv"), &scatter(&model, &samples, &split)?)?;

    let c = correspondence(&d, &cfg.dft_basis(), &samples, &split)?;
    let mut wr = csv::Writer::from_writer(create(&layout.result("correspondence.csv"))?);
    wr.write_record(["metric", "value"]).map_err(csv_err)?;
    wr.write_record(["median_atom_dft_sparsity".to_string(), c.median_atom_dft_sparsity.to_string()]).map_err(csv_err)?;
    wr.write_record(["spearman_dictionary_vs_dft".to_string(), c.spearman.to_string()]).map_err(csv_err)?;
    wr.write_record(["test_samples".to_string(), c.samples.to_string()]).map_err(csv_err)?;
    wr.flush()?;
    drop(wr);
    let mut wr = csv::Writer::from_writer(create(&layout.result("atom_dft_sparsity.csv"))?);
    wr.write_record(["atom", "dft_sparsity"]).map_err(csv_err)?;
    for (j, s) in c.atom_dft_sparsity.iter().enumerate() {
        wr.write_record([j.to_string(), s.to_string()]).map_err(csv_err)?;
    }
    wr.flush()?;
    drop(wr);

    if cfg.scenario == Scenario::ChannelVcm {
        let test = load_channel_set(cfg, layout, ChannelSet::Test)?;
        let rows = snr_sweep(cfg, &d, &model, &test)?;
        write_sweep(cfg, layout, &rows)?;
    } else {
        log::info!("the SNR sweep needs an OFDM frame and runs only in the channel-vcm scenario");
    }
    write_sizes(layout, &train_size_sweep(cfg, &samples, &split)?)?;
    Ok(())
}

fn run_spectrum(cfg: &ExperimentConfig, layout: &Layout) -> CliResult<()> {
    let model = load_model(layout)?;
    let samples = spectrum_samples(cfg, layout)?;
    check_model(&model, &samples)?;
    let split = samples.split(cfg)?;
    write_scatter(&layout.result("spectrum_scatter.csv"), &scatter(&model, &samples, &split)?)?;
    if cfg.scenario == Scenario::SpectrumFile {
        predict_file(cfg, layout, &model)?;
    }
    Ok(())
}

/// Predicts the occupied-band count of every row of the configured PSD file.
pub fn predict_file(cfg: &ExperimentConfig, layout: &Layout, model: &SparsityRegressor) -> CliResult<std::path::PathBuf> {
    let path = std::path::Path::new(&cfg.spectrum.input_file);
    if !path.exists() {
        return Err(CliError::MissingArtifact(format!("PSD file {} not found", path.display())));
    }
    let obs = ingest_psd(path)?;
    let out = layout.result("psd_predictions.csv");
    let mut wr = csv::Writer::from_writer(create(&out)?);
    wr.write_record(["row", "predicted_bands", "label"]).map_err(csv_err)?;
    for (i, o) in obs.iter().enumerate() {
        let p = estimate_spectrum_sparsity(o, None, model)?;
        wr.write_record([i.to_string(), p.to_string(), o.occupied_band_count.map(|l| l.to_string()).unwrap_or_default()])
            .map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(out)
}

pub fn run_eval(cfg: &ExperimentConfig, layout: &Layout, manifest: &mut RunManifest) -> CliResult<()> {
    let t = Instant::now();
    if cfg.scenario.is_channel() {
        run_channel(cfg, layout)?;
    } else {
        run_spectrum(cfg, layout)?;
    }
    manifest.record("eval", cfg.hash()?, t.elapsed().as_secs_f64(), Vec::new());
    Ok(())
}
