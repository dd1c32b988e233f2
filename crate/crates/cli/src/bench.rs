//! `bench`: empirical complexity of OMP and K-SVD.
//!
//! OMP is timed on Gaussian dictionaries while sweeping one of `n`, `k`, `s`
//! with the others fixed. The log-log slope of the measured times is compared
//! with the slope of the cost model `nks + ks² + ks³ + s⁴` over the same
//! points. K-SVD is timed per iteration while sweeping the corpus size `l`
//! against `Num·(s² + n)·k·l`.

use std::io::Write;
use std::time::Instant;

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use sparsecs_core::dictionary::{ksvd, Dictionary, KsvdParams, Provenance};
use sparsecs_core::linalg::normalize_columns;
use sparsecs_core::recovery::{omp, StopRule};
use sparsecs_core::seed::{self, derive};
use sparsecs_core::{CMat, C64};

use crate::data::{create, csv_err, Layout};
use crate::error::CliResult;
use crate::stats::{loglog_slope, median};

/// Allowed distance between measured and modelled slopes.
pub const SLOPE_TOLERANCE: f64 = 0.5;

pub const OMP_MODEL: &str = "O(nks + ks^2 + ks^3 + s^4)";
pub const KSVD_MODEL: &str = "O(Num (s^2 + n) k l)";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Swept {
    N,
    K,
    S,
}

impl Swept {
    pub fn name(self) -> &'static str {
        match self {
            Swept::N => "n",
            Swept::K => "k",
            Swept::S => "s",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OmpTiming {
    pub swept: Swept,
    pub n: usize,
    pub k: usize,
    pub s: usize,
    /// Median seconds per OMP call.
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeCheck {
    pub variable: &'static str,
    pub measured: f64,
    pub predicted: f64,
}

impl SlopeCheck {
    pub fn within_tolerance(&self) -> bool {
        (self.measured - self.predicted).abs() <= SLOPE_TOLERANCE
    }
}

pub fn omp_model_cost(n: usize, k: usize, s: usize) -> f64 {
    let (n, k, s) = (n as f64, k as f64, s as f64);
    n * k * s + k * s * s + k * s * s * s + s.powi(4)
}

fn gaussian_dictionary(n: usize, k: usize, seed_value: u64) -> CMat {
    let mut rng = seed::rng(seed_value);
    let mut d = CMat::from_fn(n, k, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    normalize_columns(&mut d);
    d
}

/// Median time of one OMP call at `(n, k, s)`.
pub fn time_omp(n: usize, k: usize, s: usize, trials: usize, seed_value: u64) -> CliResult<f64> {
    let d = gaussian_dictionary(n, k, seed_value);
    let mut rng = seed::rng(derive(seed_value, "signals", 0));
    let signals: Vec<Vec<C64>> = (0..trials)
        .map(|_| {
            let mut y = vec![C64::new(0.0, 0.0); n];
            for j in index::sample(&mut rng, k, s) {
                let g = C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
                for (yi, a) in y.iter_mut().zip(d.column(j).iter()) {
                    *yi += g * a;
                }
            }
            y
        })
        .collect();
    // Warm-up, then one timing per signal.
    omp(&signals[0], &d, StopRule::sparsity(s))?;
    let mut times = Vec::with_capacity(trials);
    for y in &signals {
        let t = Instant::now();
        let code = omp(y, &d, StopRule::sparsity(s))?;
        times.push(t.elapsed().as_secs_f64());
        std::hint::black_box(code);
    }
    Ok(median(&times))
}

/// Sweep points per variable: `(n, k, s)`.
pub fn omp_grid(swept: Swept) -> Vec<(usize, usize, usize)> {
    match swept {
        Swept::N => [128, 256, 512, 1024].iter().map(|&n| (n, 2048, 8)).collect(),
        Swept::K => [512, 1024, 2048, 4096].iter().map(|&k| (256, k, 8)).collect(),
        Swept::S => [1, 2, 4, 8].iter().map(|&s| (256, 1024, s)).collect(),
    }
}

pub fn omp_sweep(swept: Swept, trials: usize, seed_value: u64) -> CliResult<(Vec<OmpTiming>, SlopeCheck)> {
    let grid = omp_grid(swept);
    let mut rows = Vec::new();
    for (i, &(n, k, s)) in grid.iter().enumerate() {
        let seconds = time_omp(n, k, s, trials, derive(seed_value, swept.name(), i as u64))?;
        rows.push(OmpTiming { swept, n, k, s, seconds });
    }
    let x: Vec<f64> = grid
        .iter()
        .map(|&(n, k, s)| match swept {
            Swept::N => n,
            Swept::K => k,
            Swept::S => s,
        } as f64)
        .collect();
    let measured = loglog_slope(&x, &rows.iter().map(|r| r.seconds).collect::<Vec<_>>());
    let predicted = loglog_slope(&x, &grid.iter().map(|&(n, k, s)| omp_model_cost(n, k, s)).collect::<Vec<_>>());
    Ok((rows, SlopeCheck { variable: swept.name(), measured, predicted }))
}

/// Seconds per K-SVD iteration for corpus size `l` (n = 16, k = 32, s = 3).
pub fn time_ksvd_iteration(l: usize, iterations: usize, seed_value: u64) -> CliResult<f64> {
    let (n, k, s) = (16, 32, 3);
    let truth = gaussian_dictionary(n, k, seed_value);
    let mut rng = seed::rng(derive(seed_value, "ksvd-signals", 0));
    let mut y = CMat::zeros(n, l);
    for c in 0..l {
        for j in index::sample(&mut rng, k, s) {
            let g = C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
            for r in 0..n {
                y[(r, c)] += g * truth[(r, j)];
            }
        }
    }
    let init = Dictionary::from_columns(gaussian_dictionary(n, k, derive(seed_value, "ksvd-init", 0)), Provenance::custom())?;
    let params = KsvdParams { target_sparsity: s, iterations, ..KsvdParams::default() };
    let t = Instant::now();
    ksvd(&y, &init, &params)?;
    Ok(t.elapsed().as_secs_f64() / iterations as f64)
}

/// Full benchmark report.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub omp: Vec<OmpTiming>,
    pub slopes: Vec<SlopeCheck>,
    pub ksvd: Vec<(usize, f64)>,
    pub ksvd_slope: SlopeCheck,
}

pub fn run_bench(seed_value: u64, trials: usize) -> CliResult<BenchReport> {
    let mut omp_rows = Vec::new();
    let mut slopes = Vec::new();
    for swept in [Swept::N, Swept::K, Swept::S] {
        let (rows, check) = omp_sweep(swept, trials, seed_value)?;
        omp_rows.extend(rows);
        slopes.push(check);
    }
    let ls = [250usize, 500, 1000, 2000];
    let ksvd_rows: Vec<(usize, f64)> = ls
        .iter()
        .map(|&l| time_ksvd_iteration(l, 3, seed_value).map(|t| (l, t)))
        .collect::<CliResult<_>>()?;
    let x: Vec<f64> = ls.iter().map(|&l| l as f64).collect();
    let ksvd_slope = SlopeCheck {
        variable: "l",
        measured: loglog_slope(&x, &ksvd_rows.iter().map(|r| r.1).collect::<Vec<_>>()),
        predicted: 1.0,
    };
    Ok(BenchReport { omp: omp_rows, slopes, ksvd: ksvd_rows, ksvd_slope })
}

pub fn write_bench(layout: &Layout, report: &BenchReport) -> CliResult<()> {
    let mut wr = csv::Writer::from_writer(create(&layout.bench("omp_timing.csv"))?);
    wr.write_record(["swept", "n", "k", "s", "seconds"]).map_err(csv_err)?;
    for r in &report.omp {
        wr.write_record([r.swept.name().to_string(), r.n.to_string(), r.k.to_string(), r.s.to_string(), r.seconds.to_string()])
            .map_err(csv_err)?;
    }
    wr.flush()?;
    drop(wr);
    let mut wr = csv::Writer::from_writer(create(&layout.bench("ksvd_timing.csv"))?);
    wr.write_record(["l", "seconds_per_iteration"]).map_err(csv_err)?;
    for (l, t) in &report.ksvd {
        wr.write_record([l.to_string(), t.to_string()]).map_err(csv_err)?;
    }
    wr.flush()?;
    drop(wr);
    let mut wr = csv::Writer::from_writer(create(&layout.bench("slopes.csv"))?);
    wr.write_record(["variable", "measured_slope", "predicted_slope", "within_tolerance"]).map_err(csv_err)?;
    for c in &report.slopes {
        wr.write_record([c.variable.to_string(), c.measured.to_string(), c.predicted.to_string(), c.within_tolerance().to_string()])
            .map_err(csv_err)?;
    }
    wr.flush()?;
    drop(wr);

    let mut f = create(&layout.bench("report.txt"))?;
    writeln!(f, "OMP total cost model: {OMP_MODEL}")?;
    writeln!(f, "K-SVD cost model:     {KSVD_MODEL}")?;
    writeln!(f)?;
    writeln!(f, "log-log slopes of OMP time (tolerance ±{SLOPE_TOLERANCE}):")?;
    for c in &report.slopes {
        writeln!(
            f,
            "  {}: measured {:.3}, model {:.3} [{}]",
            c.variable,
            c.measured,
            c.predicted,
            if c.within_tolerance() { "ok" } else { "outside tolerance" }
        )?;
    }
    writeln!(f, "K-SVD seconds per iteration vs l: slope {:.3} (model 1)", report.ksvd_slope.measured)?;
    f.flush()?;
    Ok(())
}
