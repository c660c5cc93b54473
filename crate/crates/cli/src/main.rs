//! `affinity`: generate, replay, encode, train, evaluate and predict from
//! the command line.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 data error,
//! 4 internal error. Failures print one `error=<Kind> message="..."` line
//! on stderr.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::FileConfig;

#[derive(Debug, Parser)]
#[command(name = "affinity", version, about = "Node-affinity constraint analysis and group prediction")]
struct Cli {
    /// Seed for generation, splitting and training [default: 0].
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 picks one per core [default: 0].
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Abort on anomalous trace events instead of counting them.
    #[arg(long, global = true)]
    strict: bool,
    /// TOML file with defaults; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic nodes trace and tasks trace.
    Gen(GenArgs),
    /// Replay a trace; write interval statistics and the final snapshot rows.
    Analyze(AnalyzeArgs),
    /// Compress and one-hot encode a rows file into a dataset.
    Encode(EncodeArgs),
    /// Fit the voting ensemble or one classifier on a dataset.
    Train(TrainArgs),
    /// Run the repeated split/train/evaluate protocol on a dataset.
    Evaluate(EvaluateArgs),
    /// Predict groups for a dataset with a trained model.
    Predict(PredictArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long)]
    nodes_out: PathBuf,
    #[arg(long)]
    tasks_out: PathBuf,
    /// Number of nodes.
    #[arg(long)]
    nodes: Option<usize>,
    /// Number of jobs.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[arg(long)]
    nodes: PathBuf,
    #[arg(long)]
    tasks: PathBuf,
    #[arg(long)]
    stats_out: PathBuf,
    #[arg(long)]
    rows_out: PathBuf,
    /// Sampling interval in microseconds of trace time.
    #[arg(long)]
    interval_micros: Option<u64>,
}

#[derive(Debug, Args)]
struct EncodeArgs {
    #[arg(long)]
    rows: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// `ensemble` or one of RIDGE, SGD_HINGE, MLP, KNN, TREE, GNB.
    #[arg(long)]
    model: Option<String>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Text report with per-run confusion matrices.
    #[arg(long)]
    report_out: PathBuf,
    /// `metric,class,value` CSV.
    #[arg(long)]
    metrics_out: PathBuf,
    /// Per-run wall and CPU times; these vary between invocations.
    #[arg(long)]
    timings_out: Option<PathBuf>,
    /// Number of split/train/evaluate runs [default: 10].
    #[arg(long)]
    runs: Option<usize>,
    /// `ensemble` or one of RIDGE, SGD_HINGE, MLP, KNN, TREE, GNB.
    #[arg(long)]
    model: Option<String>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

/// A failure with its stable kind name and exit code.
#[derive(Debug)]
pub struct Failure {
    kind: &'static str,
    message: String,
    code: u8,
}

impl Failure {
    pub fn usage(kind: &'static str, message: impl Into<String>) -> Self {
        Failure {
            kind,
            message: message.into(),
            code: 2,
        }
    }
}

impl From<affinity_core::Error> for Failure {
    fn from(e: affinity_core::Error) -> Self {
        Failure {
            kind: e.kind(),
            message: e.to_string(),
            code: 3,
        }
    }
}

macro_rules! failure_from {
    ($($t:ty),*) => {$(
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                affinity_core::Error::from(e).into()
            }
        }
    )*};
}

failure_from!(
    affinity_core::trace::TraceError,
    affinity_core::matcher::MatchError,
    affinity_core::features::FeatureError,
    affinity_core::classifiers::ClassifierError,
    affinity_core::ensemble::EvalError
);

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        affinity_core::features::FeatureError::Io(e).into()
    }
}

fn report(f: &Failure) {
    let message = f.message.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', " ");
    eprintln!("error={} message=\"{}\"", f.kind, message);
}

fn run(cli: Cli) -> Result<(), Failure> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let settings = file.settings(cli.seed, cli.threads, cli.strict);
    if settings.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(settings.threads)
            .build_global()
            .map_err(|e| Failure {
                kind: "Internal",
                message: e.to_string(),
                code: 4,
            })?;
    }
    match cli.command {
        Command::Gen(a) => commands::gen(&settings, &file, a),
        Command::Analyze(a) => commands::analyze(&settings, &file, a),
        Command::Encode(a) => commands::encode(&settings, a),
        Command::Train(a) => commands::train(&settings, &file, a),
        Command::Evaluate(a) => commands::evaluate(&settings, &file, a),
        Command::Predict(a) => commands::predict(&settings, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let first = e.to_string();
            let first = first.lines().next().unwrap_or("invalid arguments");
            report(&Failure::usage("Usage", first.trim_start_matches("error: ")));
            return ExitCode::from(2);
        }
    };
    let outcome = std::panic::catch_unwind(|| run(cli));
    match outcome {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(f)) => {
            report(&f);
            ExitCode::from(f.code)
        }
        Err(panic) => {
            let message = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".to_string());
            report(&Failure {
                kind: "Internal",
                message,
                code: 4,
            });
            ExitCode::from(4)
        }
    }
}
