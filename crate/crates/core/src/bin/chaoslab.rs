use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use chaoslab::io::{
    emit_chaos_json, parse_chaos_json, parse_steps_json, reduction_report_value, to_canonical_string,
    DocumentError,
};
use chaoslab::reduction::{iterate_reduction, zero_divisor_probe};
use chaoslab::spectra::{atom_scan, moment_compare, vacuum_spectral_measure};
use chaoslab::verify::{run_verify, VerifyConfig};
use chaoslab::{Chaos, ChaosError};

/// Wigner chaos calculator: products, spectra, reductions and a seeded
/// invariant suite.
#[derive(Debug, Parser)]
#[command(name = "chaoslab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the seeded invariant suite and write a JSON report.
    Verify {
        #[arg(long)]
        cells: usize,
        #[arg(long)]
        horizon: f64,
        /// Largest chaos degree of the random elements.
        #[arg(long)]
        degree: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value = "verify.json")]
        out: PathBuf,
    },
    /// Itô product of two chaos documents.
    Product {
        #[arg(long)]
        lhs: PathBuf,
        #[arg(long)]
        rhs: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Exact moments next to moments of the truncated vacuum measure (CSV).
    Moments {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        max_k: usize,
        /// Fock truncation; defaults to the smallest one reproducing every moment up to `max-k`.
        #[arg(long)]
        truncation: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Histogram of the truncated vacuum spectral measure (CSV), plus raw points.
    Spectrum {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        truncation: usize,
        #[arg(long)]
        bins: usize,
        #[arg(long)]
        out: PathBuf,
        /// Raw eigenvalue/weight file; defaults to `<out stem>_points.csv`.
        #[arg(long)]
        points: Option<PathBuf>,
    },
    /// Largest windowed spectral weight for a list of truncations (CSV).
    Atoms {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        truncations: Vec<usize>,
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Iterated coefficient extraction with a list of (p, h) steps.
    Reduce {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        steps: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Zero-divisor probe: norms of Y·U and Y*·U.
    Probe {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        other: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Error)]
enum AppError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Document {
        path: PathBuf,
        source: DocumentError,
    },
    #[error(transparent)]
    Chaos(#[from] ChaosError),
    #[error(transparent)]
    Serialize(#[from] DocumentError),
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

const REDUCE_TOLERANCE: f64 = 1e-10;
const PROBE_THRESHOLD: f64 = 1e-8;

fn read(path: &Path) -> Result<String, AppError> {
    fs::read_to_string(path).map_err(|source| AppError::Io {
        path: path.to_owned(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), AppError> {
    fs::write(path, text).map_err(|source| AppError::Io {
        path: path.to_owned(),
        source,
    })
}

fn load(path: &Path) -> Result<Chaos, AppError> {
    parse_chaos_json(&read(path)?).map_err(|source| AppError::Document {
        path: path.to_owned(),
        source,
    })
}

fn write_csv<S: Serialize>(path: &Path, rows: &[S]) -> Result<(), AppError> {
    let wrap = |source| AppError::Csv {
        path: path.to_owned(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(wrap)?;
    for row in rows {
        w.serialize(row).map_err(wrap)?;
    }
    w.flush().map_err(|source| AppError::Io {
        path: path.to_owned(),
        source,
    })
}

#[derive(Serialize)]
struct PointRow {
    eigenvalue: f64,
    weight: f64,
}

#[derive(Serialize)]
struct ProbeReport {
    norm_yu: f64,
    norm_ystar_u: f64,
    threshold: f64,
    zero_divisor_suspected: bool,
}

fn points_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("spectrum");
    out.with_file_name(format!("{stem}_points.csv"))
}

fn run(command: Command) -> Result<bool, AppError> {
    match command {
        Command::Verify {
            cells,
            horizon,
            degree,
            seed,
            trials,
            out,
        } => {
            let config = VerifyConfig {
                cells,
                horizon,
                degree,
                seed,
                trials,
            };
            let report = run_verify(&config)?;
            write(&out, &to_canonical_string(&report)?)?;
            let failed: Vec<_> = report.failures().collect();
            println!(
                "{}/{} checks passed",
                report.checks.len() - failed.len(),
                report.checks.len()
            );
            for check in &failed {
                println!("FAIL {} residual={:e} tolerance={:e}", check.name, check.residual, check.tolerance);
            }
            Ok(report.all_pass)
        }
        Command::Product { lhs, rhs, out } => {
            let product = load(&lhs)?.ito_product(&load(&rhs)?)?;
            write(&out, &emit_chaos_json(&product))?;
            Ok(true)
        }
        Command::Moments {
            input,
            max_k,
            truncation,
            out,
        } => {
            let y = load(&input)?;
            let top = y.top_degree().unwrap_or(0);
            let d = truncation.unwrap_or((top * (max_k / 2)).max(top).max(1));
            let rows = moment_compare(&y, d, max_k)?;
            write_csv(&out, &rows)?;
            Ok(true)
        }
        Command::Spectrum {
            input,
            truncation,
            bins,
            out,
            points,
        } => {
            if bins == 0 {
                return Err(ChaosError::InvalidArgument("bins must be positive".into()).into());
            }
            let mu = vacuum_spectral_measure(&load(&input)?, truncation)?;
            write_csv(&out, &mu.histogram(bins))?;
            let rows: Vec<PointRow> = mu
                .points()
                .iter()
                .map(|&(eigenvalue, weight)| PointRow { eigenvalue, weight })
                .collect();
            write_csv(&points.unwrap_or_else(|| points_path(&out)), &rows)?;
            Ok(true)
        }
        Command::Atoms {
            input,
            truncations,
            eps,
            out,
        } => {
            let rows = atom_scan(&load(&input)?, &truncations, eps)?;
            write_csv(&out, &rows)?;
            Ok(true)
        }
        Command::Reduce { input, steps, out } => {
            let y = load(&input)?;
            let steps = parse_steps_json(&read(&steps)?, *y.grid()).map_err(|source| AppError::Document {
                path: steps.clone(),
                source,
            })?;
            let report = iterate_reduction(&y, &steps)?;
            write(&out, &to_canonical_string(&reduction_report_value(&report))?)?;
            let scale = report.predicted_scalar.norm().max(1.0);
            println!(
                "final = {} {:+}i, predicted = {} {:+}i",
                report.final_scalar.re, report.final_scalar.im, report.predicted_scalar.re, report.predicted_scalar.im
            );
            Ok(report.residual() <= REDUCE_TOLERANCE * scale)
        }
        Command::Probe { input, other, out } => {
            let y = load(&input)?;
            let u = load(&other)?;
            let probe = zero_divisor_probe(&y, &u)?;
            let suspected = !y.is_zero() && !u.is_zero() && probe.norm_yu <= PROBE_THRESHOLD;
            let report = ProbeReport {
                norm_yu: probe.norm_yu,
                norm_ystar_u: probe.norm_ystar_u,
                threshold: PROBE_THRESHOLD,
                zero_divisor_suspected: suspected,
            };
            write(&out, &to_canonical_string(&report)?)?;
            Ok(!suspected)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
