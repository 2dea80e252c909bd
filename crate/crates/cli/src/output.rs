//! Artifact writers.
//!
//! CSV floats use Rust's shortest round-trip formatting (at most 17
//! significant digits), so identical runs produce byte-identical files.
//!
//! | file               | columns                                   |
//! |--------------------|-------------------------------------------|
//! | `correlation.csv`  | `m, t, value, provenance`                 |
//! | `spectrum.csv`     | `omega, re, im, magnitude`                |
//! | `peaks.csv`        | `center, height, fwhm, matched_mode`      |
//! | `trajectories.csv` | `seed, outcomes` (`+`/`-` per RIM)        |
//! | `comparison.csv`   | `gamma_tau, method, n_points, tau, tau1, n_samples, total_detection_time, resource_complexity, estimation_error, error_spread` |
//!
//! With `--format json` the same tables are written as JSON arrays of objects.
//! Every run also writes `manifest.json` and the resolved `config.toml`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use crate::config::{ExperimentConfig, Format};
use crate::{CliError, ComparisonRow, SimulationOutput};

#[derive(Serialize)]
struct CorrelationRow<'a> {
    m: usize,
    t: f64,
    value: f64,
    provenance: &'a str,
}

#[derive(Serialize)]
struct SpectrumRow {
    omega: f64,
    re: f64,
    im: f64,
    magnitude: f64,
}

#[derive(Serialize)]
struct PeakRow {
    center: f64,
    height: f64,
    fwhm: f64,
    matched_mode: Option<usize>,
}

#[derive(Serialize)]
struct CompareCsvRow<'a> {
    gamma_tau: f64,
    method: &'a str,
    n_points: usize,
    tau: f64,
    tau1: f64,
    n_samples: u64,
    total_detection_time: f64,
    resource_complexity: f64,
    estimation_error: f64,
    error_spread: f64,
}

const COMPARE_HEADER: [&str; 10] = [
    "gamma_tau",
    "method",
    "n_points",
    "tau",
    "tau1",
    "n_samples",
    "total_detection_time",
    "resource_complexity",
    "estimation_error",
    "error_spread",
];

fn write_table<T: Serialize>(dir: &Path, stem: &str, rows: &[T], header: &[&str], format: Format) -> Result<PathBuf, CliError> {
    match format {
        Format::Csv => {
            let path = dir.join(format!("{stem}.csv"));
            let mut w = csv::WriterBuilder::new().has_headers(false).from_path(&path).map_err(io)?;
            w.write_record(header).map_err(io)?;
            for r in rows {
                w.serialize(r).map_err(io)?;
            }
            w.flush()?;
            Ok(path)
        }
        Format::Json => {
            let path = dir.join(format!("{stem}.json"));
            let text = serde_json::to_string_pretty(rows).map_err(io)?;
            fs::write(&path, text + "\n")?;
            Ok(path)
        }
    }
}

fn io(e: impl std::fmt::Display) -> CliError {
    CliError::Io(e.to_string())
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn write_resolved_config(dir: &Path, cfg: &ExperimentConfig) -> Result<PathBuf, CliError> {
    let path = dir.join("config.toml");
    fs::write(&path, toml::to_string(cfg).map_err(io)?)?;
    Ok(path)
}

fn write_manifest(dir: &Path, value: serde_json::Value) -> Result<(), CliError> {
    let mut f = fs::File::create(dir.join("manifest.json"))?;
    writeln!(f, "{}", serde_json::to_string_pretty(&value).map_err(io)?)?;
    Ok(())
}

pub fn write_simulation(cfg: &ExperimentConfig, out: &SimulationOutput) -> Result<Vec<PathBuf>, CliError> {
    let dir = &cfg.output.directory;
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for &format in &cfg.output.formats {
        let rows: Vec<_> = out
            .series
            .values
            .iter()
            .enumerate()
            .map(|(i, &value)| CorrelationRow {
                m: i + 1,
                t: (i + 1) as f64 * out.series.tau,
                value,
                provenance: out.series.provenance.as_str(),
            })
            .collect();
        files.push(write_table(dir, "correlation", &rows, &["m", "t", "value", "provenance"], format)?);

        if let Some(spec) = &out.spectrum {
            let rows: Vec<_> = spec
                .frequencies
                .iter()
                .zip(&spec.amplitudes)
                .map(|(&omega, a)| SpectrumRow {
                    omega,
                    re: a.re,
                    im: a.im,
                    magnitude: a.norm(),
                })
                .collect();
            files.push(write_table(dir, "spectrum", &rows, &["omega", "re", "im", "magnitude"], format)?);
            let rows: Vec<_> = out
                .peaks
                .iter()
                .map(|p| PeakRow {
                    center: p.center,
                    height: p.height,
                    fwhm: p.fwhm,
                    matched_mode: p.matched_mode,
                })
                .collect();
            files.push(write_table(dir, "peaks", &rows, &["center", "height", "fwhm", "matched_mode"], format)?);
        }
    }
    if !out.trajectories.is_empty() {
        let path = dir.join("trajectories.csv");
        let mut text = String::from("seed,outcomes\n");
        for r in &out.trajectories {
            text.push_str(&r.to_csv_line());
            text.push('\n');
        }
        fs::write(&path, text)?;
        files.push(path);
    }
    files.push(write_resolved_config(dir, cfg)?);

    let names: Vec<String> = files.iter().map(|p| file_name(p)).collect();
    write_manifest(
        dir,
        json!({
            "command": "simulate",
            "version": env!("CARGO_PKG_VERSION"),
            "seed": cfg.sampling.seed,
            "config": cfg,
            "timing_us": { "tau1": out.timing.tau1, "tau2": out.timing.tau2, "tau": out.timing.tau },
            "n_samples": out.n_samples,
            "total_detection_time": out.series.total_detection_time,
            "reference_frequencies": out.reference_frequencies,
            "sampling": {
                "passed": out.diagnostic.passed(),
                "nyquist": out.diagnostic.nyquist,
                "two_b_norm": out.diagnostic.two_b_norm,
                "max_frequency": out.diagnostic.max_frequency,
                "aliased": out.diagnostic.aliased,
            },
            "warnings": out.warnings,
            "files": names,
        }),
    )?;
    Ok(files)
}

pub fn write_comparison(cfg: &ExperimentConfig, rows: &[ComparisonRow]) -> Result<Vec<PathBuf>, CliError> {
    let dir = &cfg.output.directory;
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for &format in &cfg.output.formats {
        let table: Vec<_> = rows
            .iter()
            .map(|r| CompareCsvRow {
                gamma_tau: r.gamma_tau,
                method: r.report.method.as_str(),
                n_points: r.report.n_points,
                tau: r.report.tau,
                tau1: r.report.tau1,
                n_samples: r.report.n_samples,
                total_detection_time: r.report.total_detection_time,
                resource_complexity: r.report.resource_complexity,
                estimation_error: r.report.estimation_error,
                error_spread: r.report.error_spread,
            })
            .collect();
        files.push(write_table(dir, "comparison", &table, &COMPARE_HEADER, format)?);
    }
    files.push(write_resolved_config(dir, cfg)?);
    let names: Vec<String> = files.iter().map(|p| file_name(p)).collect();
    write_manifest(
        dir,
        json!({
            "command": "compare",
            "version": env!("CARGO_PKG_VERSION"),
            "seed": cfg.sampling.seed,
            "config": cfg,
            "files": names,
        }),
    )?;
    Ok(files)
}
