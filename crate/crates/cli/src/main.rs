//! `pef`: classify maps, trace paths, predict, generate, fit, and evaluate
//! multi-exponent path loss models.

mod commands;
mod config;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pef_core::{Error, Point};

#[derive(Debug, Parser)]
#[command(name = "pef", version, about = "Multi-exponent path loss modelling over raster maps")]
struct Cli {
    /// `key: value` file supplying defaults for any option; flags win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cluster a color map (PPM) into a region type grid.
    Classify(ClassifyArgs),
    /// Print the region segments crossed by a Tx-Rx line.
    Trace(TraceArgs),
    /// Mean path loss at one receiver.
    Predict(PredictArgs),
    /// Mean path loss over the whole map.
    Heatmap(HeatmapArgs),
    /// Draw a synthetic measurement set from a model.
    GenSynth(GenSynthArgs),
    /// Maximum likelihood fit of per-region exponents.
    Fit(FitArgs),
    /// Least squares and maximum likelihood fits of the log-distance model.
    FitLogdist(FitLogdistArgs),
    /// Score fitted models against measurements.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    /// Input color map, binary or ASCII PPM with max value 255.
    #[arg(long = "in", value_name = "PPM")]
    input: Option<PathBuf>,
    /// Number of region types.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Map scale, meters per pixel.
    #[arg(long)]
    mpp: Option<f64>,
    /// Output region graymap; metadata goes to `<out>.meta`.
    #[arg(long, value_name = "PGM")]
    out: Option<PathBuf>,
    /// Type merges applied after clustering, `from=into,...`.
    #[arg(long)]
    merge: Option<String>,
    /// Comma-separated type names, one per final type.
    #[arg(long)]
    names: Option<String>,
}

#[derive(Debug, Args)]
struct TraceArgs {
    #[arg(long, value_name = "PGM")]
    grid: Option<PathBuf>,
    #[arg(long, value_name = "X,Y", allow_hyphen_values = true)]
    tx: Option<Point>,
    #[arg(long, value_name = "X,Y", allow_hyphen_values = true)]
    rx: Option<Point>,
    /// Close-in distance, m.
    #[arg(long)]
    d0: Option<f64>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long, value_name = "PGM")]
    grid: Option<PathBuf>,
    /// Model parameters (JSON with c, n, sigma, optional d0).
    #[arg(long, value_name = "JSON")]
    params: Option<PathBuf>,
    #[arg(long, value_name = "X,Y", allow_hyphen_values = true)]
    tx: Option<Point>,
    #[arg(long, value_name = "X,Y", allow_hyphen_values = true)]
    rx: Option<Point>,
    /// Close-in distance, m; defaults to the params file's d0.
    #[arg(long)]
    d0: Option<f64>,
    /// Also draw one shadowed value (needs --seed).
    #[arg(long)]
    shadowed: bool,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct HeatmapArgs {
    #[arg(long, value_name = "PGM")]
    grid: Option<PathBuf>,
    #[arg(long, value_name = "JSON")]
    params: Option<PathBuf>,
    #[arg(long, value_name = "X,Y", allow_hyphen_values = true)]
    tx: Option<Point>,
    #[arg(long)]
    d0: Option<f64>,
    /// Output CSV, one row of dB values per sampled grid row.
    #[arg(long, value_name = "CSV")]
    out: Option<PathBuf>,
    /// Also render a min-max normalized graymap.
    #[arg(long, value_name = "PGM")]
    pgm: Option<PathBuf>,
    /// Sample every `stride`-th cell in each axis.
    #[arg(long)]
    stride: Option<usize>,
}

#[derive(Debug, Args)]
struct GenSynthArgs {
    #[arg(long, value_name = "PGM")]
    grid: Option<PathBuf>,
    #[arg(long, value_name = "JSON")]
    params: Option<PathBuf>,
    #[arg(long, value_name = "X,Y", allow_hyphen_values = true)]
    tx: Option<Point>,
    #[arg(long)]
    d0: Option<f64>,
    /// Number of records to keep.
    #[arg(long)]
    k: Option<usize>,
    /// Drop draws at or above this loss, dB.
    #[arg(long = "L")]
    truncation: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_name = "CSV")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OptimizerArgs {
    /// Initial step size.
    #[arg(long)]
    step: Option<f64>,
    /// Keep the step fixed instead of backtracking.
    #[arg(long)]
    fixed_step: bool,
    /// Plain gradient ascent without the Fisher preconditioner.
    #[arg(long)]
    plain: bool,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Stop once max |gradient| / K falls below this.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long, value_name = "PGM")]
    grid: Option<PathBuf>,
    #[arg(long, value_name = "CSV")]
    meas: Option<PathBuf>,
    #[arg(long)]
    d0: Option<f64>,
    /// Truncation level of the measurements, dB [default: 140].
    #[arg(long = "L", conflicts_with = "no_trunc")]
    truncation: Option<f64>,
    /// Treat the measurements as untruncated.
    #[arg(long)]
    no_trunc: bool,
    /// Starting parameters; default is the least squares log-distance fit.
    #[arg(long, value_name = "JSON")]
    init: Option<PathBuf>,
    #[command(flatten)]
    optimizer: OptimizerArgs,
    #[arg(long, value_name = "JSON")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "TXT")]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FitLogdistArgs {
    #[arg(long, value_name = "CSV")]
    meas: Option<PathBuf>,
    #[arg(long)]
    d0: Option<f64>,
    /// Truncation level of the measurements, dB [default: 140].
    #[arg(long = "L", conflicts_with = "no_trunc")]
    truncation: Option<f64>,
    #[arg(long)]
    no_trunc: bool,
    /// Report only the least squares fit.
    #[arg(long)]
    ls_only: bool,
    #[command(flatten)]
    optimizer: OptimizerArgs,
    /// Write the final fit (ML, or LS with --ls-only).
    #[arg(long, value_name = "JSON")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "TXT")]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long, value_name = "PGM")]
    grid: Option<PathBuf>,
    #[arg(long, value_name = "CSV")]
    meas: Option<PathBuf>,
    /// Multi-exponent parameters.
    #[arg(long, value_name = "JSON")]
    pef: Option<PathBuf>,
    /// Log-distance parameters.
    #[arg(long, value_name = "JSON")]
    logdist: Option<PathBuf>,
    #[arg(long)]
    d0: Option<f64>,
    #[arg(long, value_name = "TXT")]
    out: Option<PathBuf>,
    /// Absolute error CDF of the multi-exponent model.
    #[arg(long, value_name = "CSV")]
    cdf: Option<PathBuf>,
    /// Absolute error CDF of the log-distance model.
    #[arg(long, value_name = "CSV")]
    cdf_logdist: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) if e.is_numerical() => 4,
            CliError::Core(_) => 3,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Core(e) => match e {
                Error::Io { .. } => "io",
                Error::Format { .. } => "format",
                Error::InvalidInput(_) => "invalid_input",
                Error::OutOfBounds { .. } => "out_of_bounds",
                Error::WithinCloseIn { .. } => "within_close_in",
                Error::DimensionMismatch { .. } => "dimension_mismatch",
                Error::NotIdentifiable { .. } => "not_identifiable",
                Error::Numerical(_) => "numerical",
                Error::SigmaCollapse { .. } => "sigma_collapse",
                Error::RetryBudgetExhausted { .. } => "retry_budget_exhausted",
            },
        }
    }

    /// `error: <kind>: <message>` on a single line.
    fn line(&self) -> String {
        let message = match self {
            CliError::Usage(m) => m.clone(),
            CliError::Core(e) => e.to_string(),
        };
        let message = message.split_whitespace().collect::<Vec<_>>().join(" ");
        format!("error: {}: {message}", self.kind())
    }
}

fn run(cli: Cli, out: &mut impl Write) -> Result<(), CliError> {
    let config = config::Config::load(cli.config.as_deref())?;
    match cli.command {
        Command::Classify(a) => commands::classify(&config, a, out),
        Command::Trace(a) => commands::trace(&config, a, out),
        Command::Predict(a) => commands::predict(&config, a, out),
        Command::Heatmap(a) => commands::heatmap(&config, a, out),
        Command::GenSynth(a) => commands::gen_synth(&config, a, out),
        Command::Fit(a) => commands::fit(&config, a, out),
        Command::FitLogdist(a) => commands::fit_logdist(&config, a, out),
        Command::Evaluate(a) => commands::evaluate(&config, a, out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.to_string();
            let first = rendered.lines().next().unwrap_or("invalid arguments");
            let err = CliError::Usage(first.trim_start_matches("error: ").to_owned());
            eprintln!("{}", err.line());
            return ExitCode::from(err.exit_code());
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match run(cli, &mut out).and_then(|()| {
        out.flush()
            .map_err(|e| CliError::Core(Error::Io { path: "<stdout>".into(), source: e }))
    }) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", err.line());
            ExitCode::from(err.exit_code())
        }
    }
}
