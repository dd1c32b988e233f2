//! Spectrum occupancy: counting occupied bands in a power spectral density.
//!
//! A PSD observation is a row of `bins` power values in dB. Occupied bands
//! are contiguous runs of bins carrying signal plus noise, separated by at
//! least one vacant (noise-only) bin. Synthetic observations average
//! `averages` periodogram snapshots, so each bin's linear power is Gamma
//! distributed around `N₀ (1 + SNR)` (occupied) or `N₀` (vacant).
//!
//! # CSV layout
//!
//! ```text
//! bin_hz_start,bin_width_hz,n_bins[,labeled]
//! 852000000,20000,200[,1]
//! p_0,p_1,...,p_199[,label]
//! ...
//! ```
//!
//! The first line names the columns of the second (the frequency grid). Each
//! following line is one observation; when the `labeled` column is present
//! and non-zero, each row ends with its occupied-band count.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::dictionary::Dictionary;
use crate::estimator::{extract_features, predict_sparsity, SparsityRegressor, Transform, TransformKind};
use crate::{seed, Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumGeometry {
    pub start_hz: f64,
    pub bin_width_hz: f64,
    pub bins: usize,
}

impl Default for SpectrumGeometry {
    fn default() -> Self {
        Self { start_hz: 852e6, bin_width_hz: 20e3, bins: 200 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    pub geometry: SpectrumGeometry,
    /// Band widths are drawn uniformly from `min_band_width..=max_band_width` bins.
    pub min_band_width: usize,
    pub max_band_width: usize,
    /// Minimum number of vacant bins between two bands (at least 1).
    pub min_gap: usize,
    /// Periodogram snapshots averaged per observation.
    pub averages: usize,
    pub noise_floor_db: f64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            geometry: SpectrumGeometry::default(),
            min_band_width: 4,
            max_band_width: 16,
            min_gap: 2,
            averages: 16,
            noise_floor_db: 0.0,
        }
    }
}

impl SpectrumConfig {
    pub fn validate(&self) -> Result<()> {
        if self.geometry.bins == 0 {
            return Err(Error::InvalidConfig("spectrum needs at least one bin".into()));
        }
        if self.min_band_width == 0 || self.min_band_width > self.max_band_width {
            return Err(Error::InvalidConfig(format!(
                "band widths must satisfy 1 ≤ min ≤ max, got {}..={}",
                self.min_band_width, self.max_band_width
            )));
        }
        if self.averages == 0 {
            return Err(Error::InvalidConfig("averages must be at least 1".into()));
        }
        if !(self.geometry.bin_width_hz > 0.0) || !self.geometry.start_hz.is_finite() {
            return Err(Error::InvalidConfig("bin width must be positive and start finite".into()));
        }
        Ok(())
    }

    fn gap(&self) -> usize {
        self.min_gap.max(1)
    }

    /// Largest band count that fits with one-bin bands and minimum gaps.
    pub fn max_bands(&self) -> usize {
        let g = self.gap();
        (self.geometry.bins + g) / (1 + g)
    }
}

/// Per-bin ground truth: vacant (`H0`) or occupied (`H1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hypothesis {
    H0,
    H1,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumObservation {
    pub psd_db: Vec<f64>,
    pub start_hz: f64,
    pub bin_width_hz: f64,
    pub occupied_band_count: Option<usize>,
    pub hypotheses: Option<Vec<Hypothesis>>,
}

impl SpectrumObservation {
    /// Bin centre frequencies.
    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.psd_db.len()).map(|i| self.start_hz + (i as f64 + 0.5) * self.bin_width_hz).collect()
    }

    pub fn as_signal(&self) -> Vec<C64> {
        self.psd_db.iter().map(|&p| C64::new(p, 0.0)).collect()
    }
}

/// Draws band placements: `(start, width)` for `bands` separated runs.
fn place_bands<R: Rng>(bands: usize, config: &SpectrumConfig, rng: &mut R) -> Result<Vec<(usize, usize)>> {
    let bins = config.geometry.bins;
    if bands > bins {
        return Err(Error::InvalidInput(format!("{bands} bands cannot fit in {bins} bins")));
    }
    if bands > config.max_bands() {
        return Err(Error::InvalidInput(format!(
            "{bands} bands with gaps of {} bins cannot fit in {bins} bins",
            config.gap()
        )));
    }
    if bands == 0 {
        return Ok(Vec::new());
    }
    let gap = config.gap();
    let mut widths: Vec<usize> =
        (0..bands).map(|_| rng.random_range(config.min_band_width..=config.max_band_width)).collect();
    let gaps = (bands - 1) * gap;
    while widths.iter().sum::<usize>() + gaps > bins {
        // Shrink the widest band (first on ties) until everything fits.
        let (i, _) = widths.iter().enumerate().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0))).expect("bands > 0");
        widths[i] -= 1;
    }
    let free = bins - widths.iter().sum::<usize>() - gaps;
    // Scatter free bins over the bands + 1 slots (before, between, after).
    let mut extra = vec![0usize; bands + 1];
    for _ in 0..free {
        extra[rng.random_range(0..=bands)] += 1;
    }
    let mut out = Vec::with_capacity(bands);
    let mut pos = extra[0];
    for (i, &w) in widths.iter().enumerate() {
        out.push((pos, w));
        pos += w + gap + extra[i + 1];
    }
    Ok(out)
}

/// Synthetic PSD with `bands` occupied bands at per-bin SNR `snr_db`.
pub fn synthesize_spectrum(bands: usize, snr_db: f64, config: &SpectrumConfig, seed: u64) -> Result<SpectrumObservation> {
    config.validate()?;
    if snr_db.is_nan() {
        return Err(Error::InvalidInput("SNR is NaN".into()));
    }
    let mut rng = seed::rng(seed);
    let placement = place_bands(bands, config, &mut rng)?;
    let bins = config.geometry.bins;
    let mut hyp = vec![Hypothesis::H0; bins];
    for &(start, w) in &placement {
        hyp[start..start + w].fill(Hypothesis::H1);
    }
    let snr = 10f64.powf(snr_db / 10.0);
    let k = config.averages as f64;
    let shape = Gamma::new(k, 1.0 / k).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let psd_db = hyp
        .iter()
        .map(|h| {
            let mean = match h {
                Hypothesis::H0 => 1.0,
                Hypothesis::H1 => 1.0 + snr,
            };
            let p = mean * shape.sample(&mut rng);
            10.0 * p.max(f64::MIN_POSITIVE).log10() + config.noise_floor_db
        })
        .collect();
    Ok(SpectrumObservation {
        psd_db,
        start_hz: config.geometry.start_hz,
        bin_width_hz: config.geometry.bin_width_hz,
        occupied_band_count: Some(bands),
        hypotheses: Some(hyp),
    })
}

/// Number of occupied runs in a hypothesis vector.
pub fn count_bands(hyp: &[Hypothesis]) -> usize {
    let mut count = 0;
    let mut prev = Hypothesis::H0;
    for &h in hyp {
        if h == Hypothesis::H1 && prev == Hypothesis::H0 {
            count += 1;
        }
        prev = h;
    }
    count
}

/// Writes observations on the frequency grid `geometry`. Labels are written
/// only when every observation has one (and the list is non-empty).
pub fn write_psd_csv<W: Write>(w: W, geometry: &SpectrumGeometry, observations: &[SpectrumObservation]) -> Result<()> {
    let bins = geometry.bins;
    for (i, o) in observations.iter().enumerate() {
        if o.psd_db.len() != bins || o.start_hz != geometry.start_hz || o.bin_width_hz != geometry.bin_width_hz {
            return Err(Error::InvalidInput(format!("observation {i} is not on the file's frequency grid")));
        }
    }
    let labeled = !observations.is_empty() && observations.iter().all(|o| o.occupied_band_count.is_some());
    let mut wr = csv::WriterBuilder::new().flexible(true).from_writer(w);
    let csv_err = |e: csv::Error| Error::Format(e.to_string());
    let mut header = vec!["bin_hz_start", "bin_width_hz", "n_bins"];
    if labeled {
        header.push("labeled");
    }
    wr.write_record(&header).map_err(csv_err)?;
    let mut meta = vec![geometry.start_hz.to_string(), geometry.bin_width_hz.to_string(), bins.to_string()];
    if labeled {
        meta.push("1".into());
    }
    wr.write_record(&meta).map_err(csv_err)?;
    for o in observations {
        let mut row: Vec<String> = o.psd_db.iter().map(|v| v.to_string()).collect();
        if labeled {
            row.push(o.occupied_band_count.unwrap_or(0).to_string());
        }
        wr.write_record(&row).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

fn parse_f64(field: &str, line: u64, what: impl Fn() -> String) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| Error::Parse { line, msg: format!("{}: '{field}' is not a number", what()) })
}

/// Reads PSD observations in the layout written by [`write_psd_csv`].
pub fn read_psd_csv<R: Read>(r: R) -> Result<Vec<SpectrumObservation>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(r);
    let mut records = rd.records();
    let mut next = |expect: &str| -> Result<Option<(u64, csv::StringRecord)>> {
        match records.next() {
            None => Ok(None),
            Some(Err(e)) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                Err(Error::Parse { line, msg: format!("{expect}: {e}") })
            }
            Some(Ok(rec)) => Ok(Some((rec.position().map(|p| p.line()).unwrap_or(0), rec))),
        }
    };
    let (hl, header) = next("header")?.ok_or(Error::Parse { line: 1, msg: "empty file".into() })?;
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    let labeled_col = match names.as_slice() {
        ["bin_hz_start", "bin_width_hz", "n_bins"] => false,
        ["bin_hz_start", "bin_width_hz", "n_bins", "labeled"] => true,
        _ => {
            return Err(Error::Parse {
                line: hl,
                msg: format!("expected header 'bin_hz_start,bin_width_hz,n_bins[,labeled]', found '{}'", names.join(",")),
            })
        }
    };
    let (ml, meta) = next("metadata")?.ok_or(Error::Parse { line: hl + 1, msg: "missing metadata line".into() })?;
    if meta.len() != names.len() {
        return Err(Error::Parse { line: ml, msg: format!("metadata has {} fields, header names {}", meta.len(), names.len()) });
    }
    let start_hz = parse_f64(&meta[0], ml, || "bin_hz_start".into())?;
    let bin_width_hz = parse_f64(&meta[1], ml, || "bin_width_hz".into())?;
    let bins: usize = meta[2]
        .trim()
        .parse()
        .map_err(|_| Error::Parse { line: ml, msg: format!("n_bins: '{}' is not a count", &meta[2]) })?;
    if bins == 0 {
        return Err(Error::Parse { line: ml, msg: "n_bins must be positive".into() });
    }
    let labeled = labeled_col && parse_f64(&meta[3], ml, || "labeled".into())? != 0.0;
    let width = bins + usize::from(labeled);

    let mut out = Vec::new();
    let mut index = 0usize;
    while let Some((line, rec)) = next("observation")? {
        if rec.len() == 1 && rec[0].trim().is_empty() {
            continue;
        }
        if rec.len() != width {
            return Err(Error::Parse {
                line,
                msg: format!("observation row {index}: expected {width} values, found {}", rec.len()),
            });
        }
        let mut psd_db = Vec::with_capacity(bins);
        for (c, f) in rec.iter().take(bins).enumerate() {
            let v = parse_f64(f, line, || format!("observation row {index}, column {c}"))?;
            if !v.is_finite() {
                return Err(Error::Parse { line, msg: format!("observation row {index}, column {c}: value is not finite") });
            }
            psd_db.push(v);
        }
        let occupied_band_count = if labeled {
            let f = rec[bins].trim();
            Some(f.parse::<usize>().map_err(|_| Error::Parse {
                line,
                msg: format!("observation row {index}: label '{f}' is not a count"),
            })?)
        } else {
            None
        };
        out.push(SpectrumObservation { psd_db, start_hz, bin_width_hz, occupied_band_count, hypotheses: None });
        index += 1;
    }
    Ok(out)
}

/// Reads a PSD CSV file.
pub fn ingest_psd(path: &Path) -> Result<Vec<SpectrumObservation>> {
    read_psd_csv(std::fs::File::open(path)?)
}

/// Predicted number of occupied bands. `dictionary` is required when the
/// model was trained on dictionary features.
pub fn estimate_spectrum_sparsity(
    obs: &SpectrumObservation,
    dictionary: Option<&Dictionary>,
    model: &SparsityRegressor,
) -> Result<usize> {
    let transform = match (model.encoding.transform, dictionary) {
        (TransformKind::Dft, _) => Transform::Dft,
        (TransformKind::Dictionary, Some(d)) => Transform::Dictionary(d),
        (TransformKind::Dictionary, None) => {
            return Err(Error::InvalidInput("model uses dictionary features but no dictionary was given".into()))
        }
    };
    let f = extract_features(&obs.as_signal(), transform, &model.encoding)?;
    predict_sparsity(model, &f)
}
