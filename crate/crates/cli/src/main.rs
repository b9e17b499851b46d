// `!(x > 0.0)` style guards are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dmdmodal::numkit::Truncation;

mod commands;

#[derive(Parser, Debug)]
#[command(name = "dmdmodal", version, about = "Modal parameter identification from snapshot data")]
struct Cli {
    /// Directory receiving every output file.
    #[arg(long, global = true, default_value = ".")]
    output_dir: PathBuf,

    /// Seed for all randomness.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a benchmark snapshot CSV and its ground-truth JSON.
    Generate(GenerateArgs),
    /// Identify poles and modes from a snapshot CSV with DMD or ITD.
    Identify(IdentifyArgs),
    /// Sampling-rate sweep of a snapshot CSV, or an LSCF order sweep of an FRF CSV.
    Sweep(SweepArgs),
    /// Estimate FRFs from force/response records, or write benchmark FRFs.
    Frf(FrfArgs),
    /// Fit an LSCF model of one order to an FRF CSV.
    Lscf(LscfArgs),
    /// MAC matrix and percentage errors between two result files.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Preset {
    SdofPaper,
    Chain6Paper,
    BeamSynthetic,
}

impl Preset {
    fn name(self) -> &'static str {
        match self {
            Preset::SdofPaper => "sdof-paper",
            Preset::Chain6Paper => "chain6-paper",
            Preset::BeamSynthetic => "beam-synthetic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Dmd,
    Itd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

impl Switch {
    fn on(self) -> bool {
        self == Switch::On
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum WindowArg {
    Rectangular,
    Hann,
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["preset", "system"]))]
struct GenerateArgs {
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// JSON chain description: masses, springs, alpha, force, sampling_rate_hz, duration_s.
    #[arg(long)]
    system: Option<PathBuf>,
    /// Multiplicative noise level.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
}

#[derive(Args, Debug, Clone)]
struct SnapshotInput {
    /// Snapshot CSV.
    #[arg(long)]
    input: PathBuf,
    /// Name of the time column.
    #[arg(long, default_value = "t", conflicts_with = "dt")]
    time_column: String,
    /// Fixed sampling interval instead of a time column.
    #[arg(long)]
    dt: Option<f64>,
    /// First sample to use.
    #[arg(long, default_value_t = 0)]
    window_start: usize,
    /// Number of samples to use from `window_start`.
    #[arg(long)]
    window_length: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct MethodOptions {
    #[arg(long, value_enum, default_value = "dmd")]
    method: Method,
    /// Stack time-shifted copies of the snapshots.
    #[arg(long, value_enum, default_value = "on", num_args = 0..=1, default_missing_value = "on")]
    augment: Switch,
    /// full, rank:K or rel:TAU.
    #[arg(long, default_value = "rel:1e-10")]
    truncation: Truncation,
    #[arg(long, value_enum, default_value = "on")]
    mean_removal: Switch,
}

#[derive(Args, Debug)]
struct IdentifyArgs {
    #[command(flatten)]
    input: SnapshotInput,
    #[command(flatten)]
    options: MethodOptions,
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("axis").required(true).args(["fs_grid", "max_order"]))]
struct SweepArgs {
    /// Snapshot CSV for rate sweeps, FRF CSV for order sweeps.
    #[arg(long)]
    input: PathBuf,
    /// Comma-separated sampling rates in Hz, or `div:K` for master/1..master/K.
    #[arg(long)]
    fs_grid: Option<String>,
    /// Highest LSCF order.
    #[arg(long)]
    max_order: Option<usize>,
    /// Frequency tolerance in percent.
    #[arg(long, default_value_t = 1.0)]
    threshold: f64,
    #[arg(long, default_value = "t")]
    time_column: String,
    #[command(flatten)]
    options: MethodOptions,
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["preset", "input"]))]
struct FrfArgs {
    /// Exact receptances of a preset system.
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Response CSV.
    #[arg(long, requires = "force")]
    input: Option<PathBuf>,
    /// Single-channel force CSV sampled like the response.
    #[arg(long)]
    force: Option<PathBuf>,
    #[arg(long, default_value = "t")]
    time_column: String,
    /// Samples per segment; the whole record when omitted.
    #[arg(long)]
    segment_length: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    overlap: f64,
    #[arg(long, value_enum, default_value = "hann")]
    window: WindowArg,
    /// Line spacing of the preset grid in Hz.
    #[arg(long, default_value_t = 0.001)]
    df: f64,
    /// Number of preset lines.
    #[arg(long, default_value_t = 1000)]
    lines: usize,
    /// Sampling period assumed for preset FRFs.
    #[arg(long, default_value_t = 0.5)]
    sampling_period: f64,
}

#[derive(Args, Debug)]
struct LscfArgs {
    /// FRF CSV.
    #[arg(long)]
    input: PathBuf,
    /// Model order.
    #[arg(long)]
    max_order: usize,
}

#[derive(Args, Debug)]
struct CompareArgs {
    /// Identified result JSON.
    #[arg(long)]
    input: PathBuf,
    /// Reference result JSON, typically a ground truth.
    #[arg(long)]
    reference: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
