use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

use config::CurveKind;
use stabgnn::circuit::Family;
use stabgnn::harness::{AxisKind, SplitKind, Task};
use stabgnn::{Error, Result};

#[derive(Parser)]
#[command(name = "stabgnn", version, about = "Circuit datasets, exact stabilizer Renyi entropy and GNN magic estimation")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labelled circuit dataset (JSONL plus manifest).
    Gen(GenArgs),
    /// Encode a dataset into a graph cache.
    Encode(EncodeArgs),
    /// Train one model and evaluate it on its split.
    Train(RunArgs),
    /// Evaluate a checkpoint on a dataset.
    Eval(EvalArgs),
    /// Clifford-depth accuracy curve or M2-binned misclassification curve.
    Curve(CurveArgs),
    /// Repeat a training run over consecutive seeds and aggregate metrics.
    Repeat(RepeatArgs),
    /// Train the full model and the global-features-only model on one split.
    Ablate(RunArgs),
}

#[derive(Args, Debug, Default)]
pub struct Common {
    /// TOML or JSON file mirroring the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Run every data-parallel loop on the calling thread.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub family: Option<Family>,
    #[arg(long)]
    pub min_qubits: Option<usize>,
    #[arg(long)]
    pub max_qubits: Option<usize>,
    /// Records per cell; a PS/CS/ES cell is one (qubits, label) pair.
    #[arg(long)]
    pub per_cell: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Relabel non-stabilizer records by the median M2.
    #[arg(long)]
    pub threshold: bool,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EncodeFlags {
    #[arg(long)]
    pub d_q: Option<usize>,
    /// Backend calibration JSON; adds the hardware block to node features.
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    /// Append an angle-bin one-hot to rotation nodes.
    #[arg(long)]
    pub angle_onehot: bool,
}

#[derive(Args, Debug)]
pub struct EncodeArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[command(flatten)]
    pub encode: EncodeFlags,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Graph cache from `encode`, index-aligned with the dataset.
    #[arg(long)]
    pub graphs: Option<PathBuf>,
    #[arg(long)]
    pub task: Option<Task>,
    /// Output directory.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Seed for both the split and training.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_parser = parse_split_kind)]
    pub split: Option<SplitKind>,
    #[arg(long)]
    pub ratio: Option<f64>,
    #[arg(long)]
    pub axis: Option<AxisKind>,
    /// Inclusive training range on the split axis, `lo:hi`.
    #[arg(long, value_parser = parse_usize_range)]
    pub train_range: Option<(usize, usize)>,
    /// Inclusive extrapolation range on the split axis, `lo:hi`.
    #[arg(long, value_parser = parse_usize_range)]
    pub test_range: Option<(usize, usize)>,
    #[arg(long)]
    pub stratify: bool,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub patience: Option<usize>,
    /// Comma-separated TransformerConv widths.
    #[arg(long, value_delimiter = ',')]
    pub tc_dims: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub global_dims: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub head_dims: Option<Vec<usize>>,
    #[arg(long)]
    pub heads: Option<usize>,
    /// Drop the graph branch (global features only).
    #[arg(long)]
    pub ablate_graph: bool,
    #[command(flatten)]
    pub encode: EncodeFlags,
}

#[derive(Args, Debug)]
pub struct RepeatArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Number of runs; seeds are `seed + index`.
    #[arg(long, short = 'n')]
    pub runs: Option<usize>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Defaults to the task stored in the checkpoint.
    #[arg(long)]
    pub task: Option<Task>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub encode: EncodeFlags,
}

#[derive(Args, Debug)]
pub struct CurveArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_parser = parse_curve_kind)]
    pub kind: Option<CurveKind>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub task: Option<Task>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub bins: Option<usize>,
    /// Binned M2 range, `lo:hi`.
    #[arg(long, value_parser = parse_f64_range)]
    pub range: Option<(f64, f64)>,
    /// Bin M2/n over magic-labelled records only.
    #[arg(long)]
    pub density: bool,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[command(flatten)]
    pub encode: EncodeFlags,
}

fn split_pair(s: &str) -> std::result::Result<(&str, &str), String> {
    s.split_once(':').ok_or_else(|| format!("expected `lo:hi`, got `{s}`"))
}

fn parse_usize_range(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = split_pair(s)?;
    Ok((a.trim().parse().map_err(|e| format!("{e}"))?, b.trim().parse().map_err(|e| format!("{e}"))?))
}

fn parse_f64_range(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = split_pair(s)?;
    Ok((a.trim().parse().map_err(|e| format!("{e}"))?, b.trim().parse().map_err(|e| format!("{e}"))?))
}

fn parse_split_kind(s: &str) -> std::result::Result<SplitKind, String> {
    match s {
        "random" | "random_ratio" | "random-ratio" => Ok(SplitKind::RandomRatio),
        "extrapolation" => Ok(SplitKind::Extrapolation),
        _ => Err(format!("unknown split `{s}` (expected random or extrapolation)")),
    }
}

fn parse_curve_kind(s: &str) -> std::result::Result<CurveKind, String> {
    match s {
        "clifford-depth" => Ok(CurveKind::CliffordDepth),
        "m2-bins" => Ok(CurveKind::M2Bins),
        _ => Err(format!("unknown curve `{s}` (expected clifford-depth or m2-bins)")),
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Gen(a) => commands::gen(a),
        Command::Encode(a) => commands::encode(a),
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::Curve(a) => commands::curve(a),
        Command::Repeat(a) => commands::repeat(a),
        Command::Ablate(a) => commands::ablate(a),
    }
}

/// 2 for bad input, 3 for failures while computing.
fn exit_code(err: &Error) -> u8 {
    if err.is_validation() {
        2
    } else {
        3
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
