//! `mrl`: estimate mean residual life from survival data, construct
//! simultaneous/pointwise confidence bands, and run Monte Carlo coverage
//! experiments against built-in distribution models.

mod dataset;
mod error;
mod output;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use error::CliError;
use mrl_core::bands;
use mrl_core::bands::BandError;
use mrl_core::montecarlo;
use mrl_core::{AnalyticModel, ExperimentConfig};
use output::{csv_field, fmt_num, params, RunManifest, Sink};
use serde::Serialize;
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "mrl", version, about = "Mean residual life estimation and confidence bands")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the empirical MRL estimator at breakpoints and extra grid points
    Estimate {
        #[arg(long)]
        input: PathBuf,
        /// Extra evaluation points, comma separated
        #[arg(long, value_delimiter = ',')]
        grid: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Simultaneous confidence band on [0, b̂_n]
    Band {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.90)]
        beta: f64,
        /// Cutoff order (default floor(sqrt(n)))
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Pointwise confidence intervals at requested ages
    Pointwise {
        #[arg(long)]
        input: PathBuf,
        /// Evaluation ages, comma separated
        #[arg(long, value_delimiter = ',', required = true)]
        xs: Vec<f64>,
        #[arg(long, default_value_t = 0.90)]
        beta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Monte Carlo coverage experiment against a model oracle
    #[command(visible_alias = "simulate")]
    Coverage {
        /// Model spec: exp:θ, weibull:θ, pareto:c, gammamrl:α
        #[arg(long)]
        model: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        reps: usize,
        #[arg(long, default_value_t = 0.90)]
        beta: f64,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, env = "MRL_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Pointwise coverage probe ages (default 0 and the model mean)
        #[arg(long, value_delimiter = ',')]
        xs: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Estimate { input, grid, out, format } => cmd_estimate(input, grid, out, format),
        Command::Band { input, beta, m, out, format } => cmd_band(input, beta, m, out, format),
        Command::Pointwise { input, xs, beta, out, format } => {
            cmd_pointwise(input, xs, beta, out, format)
        }
        Command::Coverage { model, n, reps, beta, m, seed, workers, xs, out } => {
            cmd_coverage(model, n, reps, beta, m, seed, workers, xs, out)
        }
    }
}

#[derive(Serialize)]
struct EstimateRow {
    x: f64,
    side: &'static str,
    ehat: f64,
    sf: f64,
    k: usize,
}

fn cmd_estimate(
    input: PathBuf,
    grid: Vec<f64>,
    out: Option<PathBuf>,
    format: Format,
) -> Result<(), CliError> {
    let ds = dataset::load(&input)?;
    let sample = &ds.sample;

    let mut rows: Vec<EstimateRow> = Vec::new();
    let push_right = |rows: &mut Vec<EstimateRow>, x: f64| {
        rows.push(EstimateRow {
            x,
            side: "right",
            ehat: sample.mrl_at(x),
            sf: sample.empirical_sf(x),
            k: sample.exceedances(x).count,
        });
    };
    push_right(&mut rows, 0.0);
    for &bp in sample.mrl_curve().breakpoints() {
        if bp > 0.0 {
            rows.push(EstimateRow {
                x: bp,
                side: "left",
                ehat: sample.mrl_left(bp),
                sf: sample.empirical_sf_left(bp),
                k: sample.exceedances_left(bp).count,
            });
            push_right(&mut rows, bp);
        }
    }
    for &x in &grid {
        if !x.is_finite() || x < 0.0 {
            return Err(CliError::usage(format!("grid point {x} must be finite and >= 0")));
        }
        push_right(&mut rows, x);
    }
    rows.sort_by(|a, b| {
        a.x.partial_cmp(&b.x).unwrap().then_with(|| a.side.cmp(b.side)) // left before right
    });

    let body = match format {
        Format::Csv => {
            let mut s = String::from("x,ehat,sf,k\n");
            for r in &rows {
                s.push_str(&format!(
                    "{},{},{},{}\n",
                    fmt_num(r.x),
                    fmt_num(r.ehat),
                    fmt_num(r.sf),
                    r.k
                ));
            }
            s
        }
        Format::Json => serde_json::to_string_pretty(&rows).unwrap() + "\n",
    };
    let manifest = RunManifest::new(
        "estimate",
        params(&[
            ("input", json!(input.display().to_string())),
            ("grid", json!(grid)),
            ("n", json!(sample.n())),
        ]),
        None,
        Some(ds.digest),
    );
    Sink::new(out).write(&body, &manifest)
}

fn map_band_error(e: BandError) -> CliError {
    match e {
        BandError::InvalidLevel(_) | BandError::Empirical(_) => CliError::usage(e.to_string()),
        _ => CliError::data(e.to_string()),
    }
}

fn cmd_band(
    input: PathBuf,
    beta: f64,
    m: Option<usize>,
    out: Option<PathBuf>,
    format: Format,
) -> Result<(), CliError> {
    let ds = dataset::load(&input)?;
    let band = bands::simultaneous_band(&ds.sample, beta, m).map_err(map_band_error)?;

    let body = match format {
        Format::Csv => {
            let mut s = String::from("x,lower,ehat,upper,reference\n");
            for p in &band.grid {
                s.push_str(&format!(
                    "{},{},{},{},{}\n",
                    fmt_num(p.x),
                    fmt_num(p.lower),
                    fmt_num(p.center),
                    fmt_num(p.upper),
                    fmt_num(p.reference)
                ));
            }
            s
        }
        Format::Json => serde_json::to_string_pretty(&band).unwrap() + "\n",
    };
    let manifest = RunManifest::new(
        "band",
        params(&[
            ("input", json!(input.display().to_string())),
            ("beta", json!(beta)),
            ("m", json!(band.m)),
            ("n", json!(band.n)),
            ("band_constant", json!(band.band_constant)),
            ("s_n", json!(band.s_n)),
            ("cutoff", json!(band.cutoff)),
        ]),
        None,
        Some(ds.digest),
    );
    Sink::new(out).write(&body, &manifest)
}

#[derive(Serialize)]
#[serde(untagged)]
enum PointwiseRow {
    Ok(bands::PointwiseInterval),
    Err { x: f64, error: String },
}

fn cmd_pointwise(
    input: PathBuf,
    xs: Vec<f64>,
    beta: f64,
    out: Option<PathBuf>,
    format: Format,
) -> Result<(), CliError> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(CliError::usage(format!("beta must be in (0,1), got {beta}")));
    }
    let ds = dataset::load(&input)?;
    let rows: Vec<PointwiseRow> = xs
        .iter()
        .map(|&x| match bands::pointwise_interval(&ds.sample, x, beta) {
            Ok(iv) => PointwiseRow::Ok(iv),
            Err(e) => PointwiseRow::Err { x, error: e.to_string() },
        })
        .collect();
    if rows.iter().all(|r| matches!(r, PointwiseRow::Err { .. })) {
        return Err(CliError::data("no requested age has enough exceedances".to_string()));
    }

    let body = match format {
        Format::Csv => {
            let mut s = String::from("x,k,ehat,se,lower,upper,small_k_warning\n");
            for r in &rows {
                match r {
                    PointwiseRow::Ok(iv) => s.push_str(&format!(
                        "{},{},{},{},{},{},{}\n",
                        fmt_num(iv.x),
                        iv.k,
                        fmt_num(iv.center),
                        fmt_num(iv.standard_error),
                        fmt_num(iv.lower),
                        fmt_num(iv.upper),
                        iv.small_k_warning
                    )),
                    PointwiseRow::Err { x, error } => s.push_str(&format!(
                        "{},,,,,,{}\n",
                        fmt_num(*x),
                        csv_field(&format!("error: {error}"))
                    )),
                }
            }
            s
        }
        Format::Json => serde_json::to_string_pretty(&rows).unwrap() + "\n",
    };
    let manifest = RunManifest::new(
        "pointwise",
        params(&[
            ("input", json!(input.display().to_string())),
            ("xs", json!(xs)),
            ("beta", json!(beta)),
        ]),
        None,
        Some(ds.digest),
    );
    Sink::new(out).write(&body, &manifest)
}

#[allow(clippy::too_many_arguments)]
fn cmd_coverage(
    model_spec: String,
    n: usize,
    reps: usize,
    beta: f64,
    m: Option<usize>,
    seed: u64,
    workers: usize,
    xs: Vec<f64>,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let model: AnalyticModel = model_spec
        .parse()
        .map_err(|e: mrl_core::models::ModelError| CliError::usage(e.to_string()))?;
    // Band experiments need a finite variance (e.g. Pareto c < 1/2).
    model.variance().map_err(|e| CliError::usage(e.to_string()))?;

    let probes = if xs.is_empty() { vec![0.0, model.mean()] } else { xs.clone() };
    let config = ExperimentConfig {
        model,
        n,
        replicates: reps,
        beta,
        m,
        base_seed: seed,
        workers,
    };
    let report = montecarlo::band_coverage(&config, &probes)
        .map_err(|e| CliError::usage(e.to_string()))?;

    let manifest = RunManifest::new(
        "coverage",
        params(&[
            ("model", json!(model_spec)),
            ("n", json!(n)),
            ("reps", json!(reps)),
            ("beta", json!(beta)),
            ("m", json!(m)),
            ("workers", json!(workers)),
            ("probes", json!(probes)),
        ]),
        Some(seed),
        None,
    );
    let body = serde_json::to_string_pretty(&json!({
        "config": config,
        "report": report,
        "manifest": manifest,
    }))
    .unwrap()
        + "\n";
    Sink::new(out).write(&body, &manifest)
}
