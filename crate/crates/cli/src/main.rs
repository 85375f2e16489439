//! `falq` command-line front end.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use falq::ErrorKind;
use serde_json::{json, Value};

pub const EXIT_IO: u8 = 2;
pub const EXIT_FORMAT: u8 = 3;
pub const EXIT_NUMERIC: u8 = 4;
pub const EXIT_PARAM: u8 = 5;

#[derive(Parser, Debug)]
#[command(name = "falq", version, about = "Frequency-domain low-rank plus polar-quantized matrix compression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compress real FATF matrices into FALQ containers.
    Compress(CompressArgs),
    /// Decode a FALQ container into a real FATF matrix.
    Reconstruct(ReconstructArgs),
    /// Singular-value spectra of a matrix and of its half spectrum.
    Analyze(AnalyzeArgs),
    /// Bit-budget arithmetic for a set of layer shapes.
    Budget(BudgetArgs),
    /// Spatial vs frequency comparison on synthetic stationary fields.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Write a JSON report to this path.
    #[arg(long, value_name = "OUT")]
    pub json: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CompressArgs {
    /// Input FATF files (2-D, real).
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Output file for a single input, or output directory for several.
    /// Defaults to the input path with a `.falq` extension.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Rank of the low-rank term [default: min(256, max(1, min(rows, cols/2+1)/4))].
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long, default_value_t = falq::decompose::DEFAULT_BITS)]
    pub bits_amp: u32,
    #[arg(long, default_value_t = falq::decompose::DEFAULT_BITS)]
    pub bits_phase: u32,
    /// Iteration cap T; the loop runs max(T-1, 1) rounds.
    #[arg(long, default_value_t = falq::decompose::DEFAULT_MAX_ITERS)]
    pub iters: usize,
    /// Non-negative FATF calibration weights in half-spectrum shape.
    #[arg(long, value_name = "PATH")]
    pub calib: Option<PathBuf>,
    /// Zero-pad odd column counts instead of rejecting them.
    #[arg(long)]
    pub permissive_odd: bool,
    /// Number of matrices compressed concurrently.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Accepted for uniformity; compression uses no randomness.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Args, Debug)]
pub struct ReconstructArgs {
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Store float32 instead of float64.
    #[arg(long)]
    pub f32: bool,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    pub input: PathBuf,
    /// CSV destination; standard output when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Rank for the truncation-error comparison [default: min(8, rows, cols)].
    #[arg(long)]
    pub rank: Option<usize>,
    /// Relative error target for the minimum-rank comparison.
    #[arg(long, default_value_t = 0.01)]
    pub target: f64,
    /// Count a complex rank as two real ranks.
    #[arg(long)]
    pub fair_params: bool,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Args, Debug)]
pub struct BudgetArgs {
    /// JSON list of [rows, cols] pairs, or an object with a `dims` list.
    pub dims: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    pub bq: f64,
    #[arg(long, default_value_t = 16.0)]
    pub bl: f64,
    #[arg(long, default_value_t = 256)]
    pub rank: usize,
    /// Also report the achieved ratio of this container.
    #[arg(long, value_name = "PATH")]
    pub container: Option<PathBuf>,
    /// Leave the fixed header out of the container size.
    #[arg(long)]
    pub exclude_header: bool,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// JSON benchmark spec; built-in defaults when omitted.
    pub spec: Option<PathBuf>,
    /// Per-seed CSV destination; standard output when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// First seed; overrides the spec.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub fair_params: bool,
    /// Also write the quantizer comparison for the first field.
    #[arg(long, value_name = "PATH")]
    pub ablation: Option<PathBuf>,
    #[command(flatten)]
    pub report: ReportArgs,
}

/// A rejected argument value.
#[derive(Debug)]
pub struct ParamError(pub String);

impl std::fmt::Display for ParamError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ParamError {}

fn category(err: &anyhow::Error) -> (&'static str, u8) {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<falq::Error>() {
            return match e.kind() {
                ErrorKind::Io => ("io", EXIT_IO),
                ErrorKind::Format => ("format", EXIT_FORMAT),
                ErrorKind::Numeric => ("numeric", EXIT_NUMERIC),
                ErrorKind::Param => ("param", EXIT_PARAM),
            };
        }
        if cause.is::<std::io::Error>() {
            return ("io", EXIT_IO);
        }
        if cause.is::<serde_json::Error>() {
            return ("format", EXIT_FORMAT);
        }
        if cause.is::<ParamError>() {
            return ("param", EXIT_PARAM);
        }
    }
    ("numeric", EXIT_NUMERIC)
}

fn envelope(command: &str) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("tool".into(), json!("falq"));
    m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    m.insert("command".into(), json!(command));
    m
}

fn write_report(path: &PathBuf, body: serde_json::Map<String, Value>) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(&Value::Object(body))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FALQ_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_PARAM)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let (name, json_path) = match &cli.command {
        Command::Compress(a) => ("compress", &a.report.json),
        Command::Reconstruct(a) => ("reconstruct", &a.report.json),
        Command::Analyze(a) => ("analyze", &a.report.json),
        Command::Budget(a) => ("budget", &a.report.json),
        Command::Bench(a) => ("bench", &a.report.json),
    };
    let json_path = json_path.clone();
    let result = match &cli.command {
        Command::Compress(a) => commands::compress(a),
        Command::Reconstruct(a) => commands::reconstruct(a),
        Command::Analyze(a) => commands::analyze(a),
        Command::Budget(a) => commands::budget(a),
        Command::Bench(a) => commands::bench(a),
    };
    let mut body = envelope(name);
    let code = match result {
        Ok(results) => {
            body.insert("status".into(), json!("ok"));
            body.insert("results".into(), Value::Array(results));
            0
        }
        Err(err) => {
            let (cat, code) = category(&err);
            eprintln!("falq {name}: error[{cat}]: {err:#}");
            body.insert("status".into(), json!("error"));
            body.insert("results".into(), json!([]));
            body.insert(
                "error".into(),
                json!({ "category": cat, "exit_code": code, "message": format!("{err:#}") }),
            );
            code
        }
    };
    if let Some(path) = json_path {
        if let Err(e) = write_report(&path, body) {
            eprintln!("falq {name}: error[io]: writing report {}: {e:#}", path.display());
            return ExitCode::from(if code == 0 { EXIT_IO } else { code });
        }
    }
    ExitCode::from(code)
}
