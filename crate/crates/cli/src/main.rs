use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sparsecs_cli::{CliError, CliResult, ExperimentConfig};

/// Sparsity-level estimation experiments: data generation, dictionary and
/// regressor training, evaluation sweeps and benchmarks.
#[derive(Parser)]
#[command(name = "sparsecs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML experiment configuration (defaults are used when omitted).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use the full-size simulation grid instead of the desk-scale defaults.
    #[arg(long)]
    paper_scale: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the training corpus, labelled set and test set.
    GenData(Common),
    /// Learn the dictionary and train the sparsity regressor.
    Train(Common),
    /// Produce the result tables from trained artifacts.
    Eval(Common),
    /// Time OMP and K-SVD and check the complexity model.
    Bench {
        #[command(flatten)]
        common: Common,
        /// Timed OMP calls per grid point.
        #[arg(long, default_value_t = 15)]
        trials: usize,
    },
    /// Predict occupied-band counts for a PSD CSV file.
    IngestPsd {
        #[command(flatten)]
        common: Common,
        /// PSD CSV file: a geometry header line followed by one row per observation
        #[arg(long)]
        input: PathBuf,
    },
    /// Print the effective configuration as TOML.
    ShowConfig(Common),
}

fn load(c: &Common) -> CliResult<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if c.paper_scale {
        cfg.apply_paper_scale();
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(o) = &c.out {
        cfg.output_dir = o.clone();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::GenData(c) => {
            let files = sparsecs_cli::run_gen_data(&load(&c)?)?;
            println!("wrote {} dataset files", files.len());
        }
        Command::Train(c) => sparsecs_cli::run_train(&load(&c)?)?,
        Command::Eval(c) => sparsecs_cli::run_eval(&load(&c)?)?,
        Command::Bench { common, trials } => {
            let report = sparsecs_cli::run_bench(&load(&common)?, trials)?;
            for s in &report.slopes {
                println!(
                    "OMP slope in {}: measured {:.3}, model {:.3}{}",
                    s.variable,
                    s.measured,
                    s.predicted,
                    if s.within_tolerance() { "" } else { " (outside tolerance)" }
                );
            }
        }
        Command::IngestPsd { common, input } => {
            let out = sparsecs_cli::run_ingest(&load(&common)?, &input)?;
            println!("predictions written to {}", out.display());
        }
        Command::ShowConfig(c) => {
            let cfg = load(&c)?;
            cfg.validate()?;
            print!("{}", cfg.to_toml()?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code: CliError = e;
            ExitCode::from(code.exit_code() as u8)
        }
    }
}
