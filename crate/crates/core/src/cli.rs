//! Command-line front end.
//!
//! Exit codes: 0 success, 1 invalid arguments or configuration, 2 runtime
//! failure. Errors go to stderr as one JSON object per line.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::channels::{gate, GateName, MapOrder, QuantumChannel, DEFAULT_BASIS_TILT, DEFAULT_PHASE_SPREAD, DEFAULT_SCALE_MAX};
use crate::commutant::{certify_unitarity, DEFAULT_CERTIFY_TOL};
use crate::error::{Error, Result};
use crate::experiment::{
    bounds_from_records, histogram, histogram_to_csv, read_records_csv, run_ensemble, write_records_csv,
    EnsembleKind, EnsembleSummary, Estimator, ExperimentConfig, HistogramSpec, DEFAULT_EPSILON_FLOOR,
    DEFAULT_REALIZATIONS,
};
use crate::fidelity::{average_fidelity_exact, average_fidelity_haar_mc};
use crate::linalg::SeedStream;
use crate::states::{computational_basis, pure_set};

#[derive(Parser, Debug)]
#[command(name = "gatefid", version, about = "Gate fidelity estimation from reduced state sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample an ensemble; writes records.csv and summary.json into --out.
    Run(RunArgs),
    /// α/β bounds from a records CSV.
    Bounds(BoundsArgs),
    /// Δ histogram from a records CSV.
    Hist(HistArgs),
    /// Projector-purity unitarity check of a channel file.
    Certify(CertifyArgs),
    /// Exact and Monte Carlo average fidelity of a channel file.
    Fav(FavArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long, default_value_t = 2)]
    qubits: usize,
    #[arg(long, default_value = "cnot")]
    gate: String,
    #[arg(long, default_value = "random-dynamical-map", value_parser = parse_from_str::<EnsembleKind>)]
    ensemble: EnsembleKind,
    #[arg(long, default_value_t = DEFAULT_REALIZATIONS)]
    realizations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_SCALE_MAX)]
    scale_max: f64,
    #[arg(long, default_value_t = DEFAULT_BASIS_TILT)]
    basis_tilt: f64,
    #[arg(long, default_value_t = DEFAULT_PHASE_SPREAD)]
    phase_spread: f64,
    /// Multiplication order of target and noise for random maps.
    #[arg(long, default_value = "noise-then-target", value_parser = parse_from_str::<MapOrder>)]
    order_flag: MapOrder,
    #[arg(long, default_value_t = DEFAULT_EPSILON_FLOOR)]
    epsilon_floor: f64,
    /// Repeatable; defaults to both estimators.
    #[arg(long, value_parser = parse_from_str::<Estimator>)]
    estimator: Vec<Estimator>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Markdown,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    #[arg(long)]
    records: PathBuf,
    #[arg(long, value_parser = parse_from_str::<Estimator>)]
    estimator: Vec<Estimator>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct HistArgs {
    #[arg(long)]
    records: PathBuf,
    #[arg(long, default_value = "lambda", value_parser = parse_from_str::<Estimator>)]
    estimator: Estimator,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CertifyArgs {
    #[arg(long)]
    channel: PathBuf,
    #[arg(long, default_value_t = DEFAULT_CERTIFY_TOL)]
    tol: f64,
}

#[derive(Args, Debug)]
struct FavArgs {
    #[arg(long)]
    channel: PathBuf,
    #[arg(long)]
    gate: String,
    /// Defaults to log2 of the channel dimension.
    #[arg(long)]
    qubits: Option<usize>,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_from_str<T: std::str::FromStr<Err = Error>>(s: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Runs the CLI against the process's stdio.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    run_cli(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// Same as [`cli_main`] with explicit output streams.
pub fn run_cli<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{}", e.render());
                return 0;
            }
            let msg = e.render().to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            report(err, first, "invalid-args");
            return 1;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            report(err, &e.to_string(), e.kind());
            match e {
                Error::InvalidConfig(_) => 1,
                _ => 2,
            }
        }
    }
}

fn report(err: &mut dyn Write, message: &str, kind: &str) {
    let _ = writeln!(err, "{}", json!({ "error": message, "kind": kind }));
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Run(a) => cmd_run(a, out),
        Command::Bounds(a) => cmd_bounds(a, out),
        Command::Hist(a) => cmd_hist(a, out),
        Command::Certify(a) => cmd_certify(a, out),
        Command::Fav(a) => cmd_fav(a, out),
    }
}

fn estimators_or_default(v: Vec<Estimator>) -> Vec<Estimator> {
    if v.is_empty() {
        vec![Estimator::Arith, Estimator::Lambda]
    } else {
        let mut v = v;
        v.dedup();
        v
    }
}

fn to_json_line<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn emit(text: &str, dest: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    match dest {
        Some(path) => fs::write(path, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

#[derive(Serialize)]
struct RunSummary<'a> {
    config: &'a ExperimentConfig,
    realizations: usize,
    summary: Option<&'a EnsembleSummary>,
}

fn cmd_run(a: RunArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = ExperimentConfig {
        n_qubits: a.qubits,
        target: a.gate,
        ensemble: a.ensemble,
        realizations: a.realizations,
        seed: a.seed,
        scale_max: a.scale_max,
        basis_tilt: a.basis_tilt,
        phase_spread: a.phase_spread,
        map_order: a.order_flag,
        estimators: estimators_or_default(a.estimator),
        epsilon_floor: a.epsilon_floor,
        histogram: HistogramSpec::default(),
    };
    cfg.validate()?;
    let records = run_ensemble(&cfg)?;
    // An all-skipped ensemble still produces records, just no bounds.
    let summary = match bounds_from_records(&records, &cfg.estimators, &cfg.histogram) {
        Ok(s) => Some(s),
        Err(Error::EmptyEnsemble) => None,
        Err(e) => return Err(e),
    };
    fs::create_dir_all(&a.out)?;
    let csv_path = a.out.join("records.csv");
    let mut w = BufWriter::new(File::create(&csv_path)?);
    write_records_csv(&records, &mut w)?;
    w.flush()?;
    let run = RunSummary {
        config: &cfg,
        realizations: records.len(),
        summary: summary.as_ref(),
    };
    let json_path = a.out.join("summary.json");
    fs::write(&json_path, to_json_line(&run)?)?;
    writeln!(out, "{}", csv_path.display())?;
    writeln!(out, "{}", json_path.display())?;
    Ok(())
}

fn load_records(path: &Path) -> Result<Vec<crate::experiment::RealizationRecord>> {
    read_records_csv(BufReader::new(File::open(path)?))
}

fn cmd_bounds(a: BoundsArgs, out: &mut dyn Write) -> Result<()> {
    let records = load_records(&a.records)?;
    let summary = bounds_from_records(&records, &estimators_or_default(a.estimator), &HistogramSpec::default())?;
    let text = match a.format {
        Format::Json => to_json_line(&summary)?,
        Format::Markdown => summary.to_markdown(),
        Format::Csv => {
            let mut s = String::from("estimator,alpha,beta,mean_under_factor,mean_over_factor,worst_factor\n");
            for e in &summary.estimators {
                s.push_str(&format!(
                    "{},{:?},{:?},{:?},{:?},{:?}\n",
                    e.estimator, e.alpha, e.beta, e.mean_under_factor, e.mean_over_factor, e.worst_factor
                ));
            }
            s
        }
    };
    emit(&text, a.out.as_deref(), out)
}

fn cmd_hist(a: HistArgs, out: &mut dyn Write) -> Result<()> {
    let records = load_records(&a.records)?;
    let deltas: Vec<f64> = records.iter().filter_map(|r| r.delta(a.estimator)).collect();
    let h = histogram(&deltas, &HistogramSpec::default())?;
    let text = match a.format {
        Format::Csv => histogram_to_csv(&h),
        Format::Json => to_json_line(&h)?,
        Format::Markdown => return Err(Error::InvalidConfig("hist supports csv and json".into())),
    };
    emit(&text, a.out.as_deref(), out)
}

fn load_channel(path: &Path) -> Result<QuantumChannel> {
    QuantumChannel::from_json(&fs::read_to_string(path)?)
}

fn cmd_certify(a: CertifyArgs, out: &mut dyn Write) -> Result<()> {
    if !(a.tol > 0.0 && a.tol.is_finite()) {
        return Err(Error::InvalidConfig(format!("--tol must be positive, got {}", a.tol)));
    }
    let ch = load_channel(&a.channel)?;
    let set = pure_set(&computational_basis(ch.dim()))?;
    let verdict = certify_unitarity(&ch, &set, a.tol)?;
    out.write_all(to_json_line(&verdict)?.as_bytes())?;
    Ok(())
}

fn cmd_fav(a: FavArgs, out: &mut dyn Write) -> Result<()> {
    if a.samples < 100 {
        return Err(Error::InvalidConfig("--samples must be at least 100".into()));
    }
    let ch = load_channel(&a.channel)?;
    let d = ch.dim();
    let qubits = match a.qubits {
        Some(q) => q,
        None if d.is_power_of_two() => d.trailing_zeros() as usize,
        None => return Err(Error::InvalidDimension(format!("channel dimension {d} is not 2^N"))),
    };
    let target = gate(GateName::parse(&a.gate, qubits).map_err(|e| Error::InvalidConfig(e.to_string()))?);
    if target.dim() != d {
        return Err(Error::InvalidDimension(format!("gate d={} vs channel d={d}", target.dim())));
    }
    let exact = average_fidelity_exact(&ch, &target)?;
    let (mc, std_error) = average_fidelity_haar_mc(&ch, &target, a.samples, &mut SeedStream::new(a.seed, 0).rng())?;
    let value = json!({ "f_av_exact": exact, "f_av_mc": mc, "std_error": std_error });
    out.write_all(to_json_line(&value)?.as_bytes())?;
    Ok(())
}
