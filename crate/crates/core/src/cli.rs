//! The `mixed-urn` command line.
//!
//! Exit codes: 0 ok, 2 invalid input, 3 I/O failure, 4 exact-DP frontier
//! overflow, 5 a `validate` check failed.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::error::Error;
use crate::exact::{exact_distribution_rational, exact_distribution_with_limit, DEFAULT_FRONTIER_LIMIT, RATIONAL_MAX_N};
use crate::mc::{convergence_curve, run_replicates, sample_checkpoints, summarize, ReplicateSummary, DEFAULT_BINS};
use crate::stats::{ks_statistic, Ecdf, Uniform};
use crate::theory::{analyze, envelope};
use crate::urn::{MixingProb, UrnParams};
use crate::validate::{run_validation, ValidateOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_FRONTIER: i32 = 4;
pub const EXIT_CHECKS_FAILED: i32 = 5;

pub const HISTOGRAM_HEADER: [&str; 5] = ["checkpoint_n", "bin_index", "bin_left", "bin_right", "count"];
pub const X_LAW_HEADER: [&str; 4] = ["n", "x_num", "x_den", "prob"];
pub const STATES_HEADER: [&str; 4] = ["n", "y", "b", "prob"];
pub const CURVE_HEADER: [&str; 5] = ["n", "mean", "variance", "std_err", "q90_abs_dev"];

#[derive(Debug, Parser)]
#[command(name = "mixed-urn", version, about = "Two-colour urn with mixed Friedman/Pólya replacement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte Carlo histograms of X_n at checkpoints.
    Simulate(SimulateArgs),
    /// Exact law of X_n by dynamic programming.
    Exact(ExactArgs),
    /// Contraction-map quantities as JSON.
    Theory(ModelArgs),
    /// Mean, variance and 90% quantile of |X_n - 1/2| at n = 1, 2, 4, ...
    Converge(ConvergeArgs),
    /// Monte Carlo against the exact oracle plus KS checks.
    Validate(ValidateArgs),
    /// The three histogram panels: p = 0, and p = 0.05 at 2e3 and 2e7 steps.
    ReproduceFigure(FigureArgs),
}

#[derive(Debug, Clone, Args)]
struct ModelArgs {
    #[arg(long, default_value_t = 1)]
    y0: u64,
    #[arg(long, default_value_t = 1)]
    b0: u64,
    #[arg(long, default_value_t = 1)]
    alpha: u64,
    #[arg(long, default_value_t = 1)]
    beta: u64,
    #[arg(long, default_value_t = 1)]
    gamma: u64,
    /// Decimal or exact fraction such as 1/20.
    #[arg(long, default_value = "0.05")]
    p: String,
}

impl ModelArgs {
    fn params(&self) -> Result<UrnParams, CliError> {
        let p: MixingProb = self.p.parse().map_err(Error::from)?;
        Ok(UrnParams::new(self.y0, self.b0, self.alpha, self.beta, self.gamma, p).map_err(Error::from)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
struct EngineArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, env = "MIXED_URN_WORKERS")]
    workers: Option<usize>,
}

impl EngineArgs {
    fn workers(&self) -> usize {
        self.workers.unwrap_or(0)
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    engine: EngineArgs,
    #[arg(long, default_value_t = 2000)]
    steps: u64,
    #[arg(long, default_value_t = 10_000)]
    replicates: u64,
    /// Comma-separated step indices; defaults to the final step.
    #[arg(long, value_delimiter = ',')]
    checkpoints: Vec<u64>,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    bins: usize,
    /// Format of the per-checkpoint table printed to stdout.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output directory for histogram.csv and summary.json.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ExactArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Step index n of the law.
    #[arg(long, default_value_t = 10)]
    steps: u64,
    #[arg(long, default_value_t = DEFAULT_FRONTIER_LIMIT)]
    frontier_limit: usize,
    /// Use exact big-rational arithmetic (n <= 50).
    #[arg(long)]
    rational: bool,
    /// Output directory for x_law.csv, states.csv and moments.json.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ConvergeArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    engine: EngineArgs,
    /// Largest step index.
    #[arg(long, default_value_t = 1 << 14)]
    steps: u64,
    #[arg(long, default_value_t = 1000)]
    replicates: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Optional output directory for convergence.csv and convergence.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    engine: EngineArgs,
    /// Replicates for the Monte Carlo vs exact comparison.
    #[arg(long, default_value_t = 100_000)]
    replicates: u64,
    /// Deepest level compared against the exact oracle.
    #[arg(long, default_value_t = 8)]
    max_n: u64,
    #[arg(long, default_value_t = 10_000)]
    ks_steps: u64,
    #[arg(long, default_value_t = 100_000)]
    ks_replicates: u64,
    /// Optional file for the JSON report (always printed to stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, hide = true)]
    corrupt_kernel: bool,
}

#[derive(Debug, Args)]
struct FigureArgs {
    #[command(flatten)]
    engine: EngineArgs,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    bins: usize,
    /// Steps for the p = 0 and first p = 0.05 panels.
    #[arg(long, default_value_t = 2000)]
    short_steps: u64,
    #[arg(long, default_value_t = 100_000)]
    short_replicates: u64,
    #[arg(long, default_value_t = 20_000_000)]
    long_steps: u64,
    #[arg(long, default_value_t = 1000)]
    long_replicates: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug)]
pub enum CliError {
    Invalid(String),
    Io(PathBuf, io::Error),
    Frontier(String),
    ChecksFailed,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => EXIT_VALIDATION,
            CliError::Io(..) => EXIT_IO,
            CliError::Frontier(_) => EXIT_FRONTIER,
            CliError::ChecksFailed => EXIT_CHECKS_FAILED,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Invalid(m) => write!(f, "invalid input: {m}"),
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
            CliError::Frontier(m) => write!(f, "{m}"),
            CliError::ChecksFailed => write!(f, "one or more validation checks failed"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::FrontierExceeded { .. } => CliError::Frontier(e.to_string()),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |e| CliError::Io(path.to_path_buf(), e)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, CliError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file))
}

fn csv_io(path: &Path) -> impl FnOnce(csv::Error) -> CliError + '_ {
    move |e| CliError::Io(path.to_path_buf(), e.into())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    fs::write(path, text + "\n").map_err(io_err(path))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

/// Writes histograms of every checkpoint in `summary`.
pub fn write_histogram_csv(path: &Path, summary: &ReplicateSummary) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    w.write_record(HISTOGRAM_HEADER).map_err(csv_io(path))?;
    for c in &summary.checkpoints {
        for (i, count) in c.histogram.counts.iter().enumerate() {
            let (lo, hi) = c.histogram.edges(i);
            w.write_record([c.n.to_string(), i.to_string(), lo.to_string(), hi.to_string(), count.to_string()])
                .map_err(csv_io(path))?;
        }
    }
    w.flush().map_err(io_err(path))
}

/// Parses arguments, runs the subcommand and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("mixed-urn: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Simulate(a) => cmd_simulate(&a, out),
        Command::Exact(a) => cmd_exact(&a, out),
        Command::Theory(a) => cmd_theory(&a, out),
        Command::Converge(a) => cmd_converge(&a, out),
        Command::Validate(a) => cmd_validate(&a, out),
        Command::ReproduceFigure(a) => cmd_reproduce_figure(&a, out),
    }
}

fn stdout_err(e: io::Error) -> CliError {
    CliError::Io(PathBuf::from("<stdout>"), e)
}

fn cmd_simulate(a: &SimulateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let params = a.model.params()?;
    let checkpoints = if a.checkpoints.is_empty() {
        vec![a.steps]
    } else {
        a.checkpoints.clone()
    };
    let summary = run_replicates(&params, a.steps, a.replicates, a.engine.seed, &checkpoints, a.bins, a.engine.workers())?;
    ensure_dir(&a.out)?;
    write_histogram_csv(&a.out.join("histogram.csv"), &summary)?;
    let doc = json!({ "summary": &summary, "theory": analyze(&params) });
    write_json(&a.out.join("summary.json"), &doc)?;

    match a.format {
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("serializes")),
        Format::Csv => {
            let mut text = String::from("checkpoint_n,mean,variance,mass_near_half\n");
            for c in &summary.checkpoints {
                let var = c.moments.variance().unwrap_or(0.0);
                text += &format!("{},{},{},{}\n", c.n, c.moments.mean, var, c.mass_near_half);
            }
            write!(out, "{text}")
        }
    }
    .map_err(stdout_err)
}

fn cmd_exact(a: &ExactArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let params = a.model.params()?;
    let dist = if a.rational {
        if a.steps > RATIONAL_MAX_N {
            return Err(Error::RationalTooDeep { n: a.steps, max: RATIONAL_MAX_N }.into());
        }
        exact_distribution_rational(&params, a.steps, a.frontier_limit)?.to_float()
    } else {
        exact_distribution_with_limit(&params, a.steps, a.frontier_limit)?
    };
    ensure_dir(&a.out)?;

    let law = dist.x_law();
    let path = a.out.join("x_law.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(X_LAW_HEADER).map_err(csv_io(&path))?;
    for pt in &law {
        w.write_record([dist.n.to_string(), pt.x_num.to_string(), pt.x_den.to_string(), pt.prob.to_string()])
            .map_err(csv_io(&path))?;
    }
    w.flush().map_err(io_err(&path))?;

    let path = a.out.join("states.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(STATES_HEADER).map_err(csv_io(&path))?;
    for (&(y, b), q) in &dist.support {
        w.write_record([dist.n.to_string(), y.to_string(), b.to_string(), q.to_string()])
            .map_err(csv_io(&path))?;
    }
    w.flush().map_err(io_err(&path))?;

    let (m1, m2) = (dist.moment(1), dist.moment(2));
    let doc = json!({
        "n": dist.n,
        "params": params,
        "support_size": dist.support.len(),
        "x_atoms": law.len(),
        "mean": m1,
        "second_moment": m2,
        "variance": m2 - m1 * m1,
        "rational": a.rational,
    });
    write_json(&a.out.join("moments.json"), &doc)?;
    writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("serializes")).map_err(stdout_err)
}

/// Theory report plus envelope values at n = 1, 10, 100, 1000.
pub fn theory_json(params: &UrnParams) -> serde_json::Value {
    let report = analyze(params);
    let mut doc = serde_json::to_value(&report).expect("serializes");
    let env: serde_json::Map<String, serde_json::Value> = [1u64, 10, 100, 1000]
        .iter()
        .map(|&n| (n.to_string(), envelope(params, n).ok().map_or(serde_json::Value::Null, |v| json!(v))))
        .collect();
    doc["envelope"] = serde_json::Value::Object(env);
    doc["p"] = json!(params.mixing().to_string());
    doc
}

fn cmd_theory(a: &ModelArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let params = a.params()?;
    writeln!(out, "{}", serde_json::to_string_pretty(&theory_json(&params)).expect("serializes")).map_err(stdout_err)
}

fn cmd_converge(a: &ConvergeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let params = a.model.params()?;
    let curve = convergence_curve(&params, a.steps, a.replicates, a.engine.seed, a.engine.workers())?;
    if let Some(w) = &curve.warning {
        eprintln!("warning: {w}");
    }
    let mut text = CURVE_HEADER.join(",") + "\n";
    for pt in &curve.points {
        text += &format!("{},{},{},{},{}\n", pt.n, pt.mean, pt.variance, pt.std_err, pt.q90_abs_dev);
    }
    if let Some(dir) = &a.out {
        ensure_dir(dir)?;
        let path = dir.join("convergence.csv");
        fs::write(&path, &text).map_err(io_err(&path))?;
        write_json(&dir.join("convergence.json"), &curve)?;
    }
    match a.format {
        Format::Csv => write!(out, "{text}"),
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&curve).expect("serializes")),
    }
    .map_err(stdout_err)
}

fn cmd_validate(a: &ValidateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let params = a.model.params()?;
    let opts = ValidateOptions {
        max_n: a.max_n,
        replicates: a.replicates,
        seed: a.engine.seed,
        workers: a.engine.workers(),
        ks_steps: a.ks_steps,
        ks_replicates: a.ks_replicates,
        corrupt_kernel: a.corrupt_kernel,
        ..ValidateOptions::new(params)
    };
    let report = run_validation(&opts)?;
    if let Some(path) = &a.out {
        write_json(path, &report)?;
    }
    writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("serializes")).map_err(stdout_err)?;
    if report.passed {
        Ok(())
    } else {
        Err(CliError::ChecksFailed)
    }
}

#[derive(Debug, Serialize)]
struct PanelReport {
    name: &'static str,
    file: String,
    p: f64,
    steps: u64,
    replicates: u64,
    mean: f64,
    variance: f64,
    mass_near_half: f64,
    ks_uniform: f64,
}

const PLOT_SCRIPT: &str = r#"# Plots the three panels written by `mixed-urn reproduce-figure`.
# Usage: python plot_figure.py [directory]
import csv
import sys
from pathlib import Path

import matplotlib.pyplot as plt

root = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent
panels = [
    ("panel_left.csv", "p = 0"),
    ("panel_center.csv", "p = 0.05, short run"),
    ("panel_right.csv", "p = 0.05, long run"),
]
fig, axes = plt.subplots(1, 3, figsize=(12, 3.5))
for ax, (name, title) in zip(axes, panels):
    with open(root / name, newline="") as fh:
        rows = list(csv.DictReader(fh))
    left = [float(r["bin_left"]) for r in rows]
    width = [float(r["bin_right"]) - float(r["bin_left"]) for r in rows]
    count = [int(r["count"]) for r in rows]
    total = sum(count)
    ax.bar(left, [c / (total * w) for c, w in zip(count, width)], width=width, align="edge")
    ax.set_xlim(0, 1)
    ax.set_title(title)
    ax.set_xlabel("X_n")
fig.tight_layout()
fig.savefig(root / "figure.png", dpi=150)
"#;

fn cmd_reproduce_figure(a: &FigureArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let workers = a.engine.workers();
    let seed = a.engine.seed;
    let figure = |p: f64| UrnParams::with_p(1, 1, 1, 1, 1, p).map_err(Error::from);
    let panels = [
        ("left", figure(0.0)?, a.short_steps, a.short_replicates),
        ("center", figure(0.05)?, a.short_steps, a.short_replicates),
        ("right", figure(0.05)?, a.long_steps, a.long_replicates),
    ];
    ensure_dir(&a.out)?;
    let mut reports = Vec::new();
    for (name, params, steps, replicates) in panels {
        let samples = sample_checkpoints(&params, steps, replicates, seed, &[steps], workers)?;
        let summary = summarize(&params, steps, seed, &samples, a.bins)?;
        let ecdf = Ecdf::new(samples.values[0].clone())?;
        let file = format!("panel_{name}.csv");
        write_histogram_csv(&a.out.join(&file), &summary)?;
        let c = &summary.checkpoints[0];
        reports.push(PanelReport {
            name,
            file,
            p: params.p(),
            steps,
            replicates,
            mean: c.moments.mean,
            variance: c.moments.variance().unwrap_or(0.0),
            mass_near_half: c.mass_near_half,
            ks_uniform: ks_statistic(&ecdf, &Uniform),
        });
    }
    let doc = json!({ "seed": seed, "bins": a.bins, "panels": reports });
    write_json(&a.out.join("figure_summary.json"), &doc)?;
    let script = a.out.join("plot_figure.py");
    fs::write(&script, PLOT_SCRIPT).map_err(io_err(&script))?;
    writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("serializes")).map_err(stdout_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String) {
        let mut buf = Vec::new();
        let mut full = vec!["mixed-urn"];
        full.extend_from_slice(args);
        let code = run(full, &mut buf);
        (code, String::from_utf8(buf).unwrap())
    }

    #[test]
    fn theory_reports_case3_for_fraction() {
        let (code, text) = run_capture(&["theory", "--alpha", "1", "--beta", "2", "--gamma", "1", "--p", "1/2"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["case"], "Case3_ThetaZero");
        assert_eq!(v["p"], "1/2");
    }

    #[test]
    fn invalid_params_exit_2() {
        assert_eq!(run_capture(&["theory", "--y0", "0"]).0, EXIT_VALIDATION);
        assert_eq!(run_capture(&["theory", "--p", "1.5"]).0, EXIT_VALIDATION);
        assert_eq!(run_capture(&["theory", "--p", "x/2"]).0, EXIT_VALIDATION);
        assert_eq!(run_capture(&["simulate", "--replicates", "0", "--out", "/nonexistent-never"]).0, EXIT_VALIDATION);
        assert_eq!(run_capture(&["theory", "--bogus"]).0, EXIT_VALIDATION);
    }

    #[test]
    fn help_exits_zero() {
        assert_eq!(run_capture(&["--help"]).0, EXIT_OK);
    }
}
