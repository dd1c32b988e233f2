//! Experiment harness for sparsity-level estimation.
//!
//! The `sparsecs` binary is a thin front end over this library:
//! [`data::gen_data`], [`training::run_train`], [`eval::run_eval`],
//! [`bench::run_bench`] and [`run_ingest`], all driven by one
//! [`ExperimentConfig`]. Every subcommand finishes by rewriting the run
//! manifest in the output directory.

pub mod bench;
pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod manifest;
pub mod stats;
pub mod training;

use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::{ExperimentConfig, Scenario};
pub use error::{CliError, CliResult};

use data::Layout;
use manifest::{write_atomic, RunManifest};

/// Loads the manifest for `cfg`'s output directory and saves the effective
/// configuration next to it.
fn prepare(cfg: &ExperimentConfig) -> CliResult<(Layout, RunManifest)> {
    cfg.validate()?;
    let root = &cfg.output_dir;
    std::fs::create_dir_all(root)
        .map_err(|e| CliError::Io(std::io::Error::new(e.kind(), format!("cannot create {}: {e}", root.display()))))?;
    let manifest = RunManifest::load_or_new(root, &cfg.hash()?)?;
    write_atomic(&root.join("config.toml"), cfg.to_toml()?.as_bytes())?;
    Ok((Layout::new(root), manifest))
}

pub fn run_gen_data(cfg: &ExperimentConfig) -> CliResult<Vec<PathBuf>> {
    let (layout, mut manifest) = prepare(cfg)?;
    let t = Instant::now();
    let files = data::gen_data(cfg, &layout)?;
    let rel = files.iter().map(|p| layout.rel(p)).collect();
    manifest.record("gen-data", cfg.hash()?, t.elapsed().as_secs_f64(), rel);
    manifest.save(&layout.root)?;
    Ok(files)
}

pub fn run_train(cfg: &ExperimentConfig) -> CliResult<()> {
    let (layout, mut manifest) = prepare(cfg)?;
    training::run_train(cfg, &layout, &mut manifest)?;
    manifest.save(&layout.root)
}

pub fn run_eval(cfg: &ExperimentConfig) -> CliResult<()> {
    let (layout, mut manifest) = prepare(cfg)?;
    eval::run_eval(cfg, &layout, &mut manifest)?;
    manifest.save(&layout.root)
}

pub fn run_bench(cfg: &ExperimentConfig, trials: usize) -> CliResult<bench::BenchReport> {
    let (layout, mut manifest) = prepare(cfg)?;
    let t = Instant::now();
    let report = bench::run_bench(cfg.seed, trials)?;
    bench::write_bench(&layout, &report)?;
    manifest.record("bench", cfg.hash()?, t.elapsed().as_secs_f64(), Vec::new());
    manifest.save(&layout.root)?;
    Ok(report)
}

/// Predicts occupied-band counts for a PSD file with the trained spectrum
/// model in the output directory.
pub fn run_ingest(cfg: &ExperimentConfig, input: &Path) -> CliResult<PathBuf> {
    if cfg.scenario.is_channel() {
        return Err(CliError::Config("ingest-psd needs a spectrum scenario".into()));
    }
    let mut cfg = cfg.clone();
    cfg.spectrum.input_file = input.to_string_lossy().into_owned();
    let (layout, mut manifest) = prepare(&cfg)?;
    let t = Instant::now();
    let model = training::load_model(&layout)?;
    let out = eval::predict_file(&cfg, &layout, &model)?;
    manifest.record("ingest-psd", cfg.hash()?, t.elapsed().as_secs_f64(), vec![layout.rel(&out)]);
    manifest.save(&layout.root)?;
    Ok(out)
}
