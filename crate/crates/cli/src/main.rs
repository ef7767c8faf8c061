mod commands;
mod net;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dgpc::{AxisPolicy, RepresentativePolicy};

/// Progressive lossless compression of point sets by kd-subdivision.
#[derive(Parser, Debug)]
#[command(name = "dgpc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compress a point file into a container and print the size report.
    Compress(CompressArgs),
    /// Decode a container, optionally stopping at a coarser precision.
    Decompress(DecompressArgs),
    /// Generate a synthetic dataset as a text point file.
    Gen(GenArgs),
    /// Print header fields and the size report of a container.
    Stats(StatsArgs),
    /// Run an experiment suite and print comma-separated rows.
    Experiment(ExperimentArgs),
    /// Serve containers for interactive refinement sessions.
    Serve(net::ServeArgs),
    /// Drive a refinement session with scripted requests.
    Client(net::ClientArgs),
}

#[derive(Args, Debug)]
pub struct CodingFlags {
    /// Neighbour-based split prediction.
    #[arg(long)]
    pub prediction: bool,
    /// Depth-first traversal (not progressive).
    #[arg(long)]
    pub depth_first: bool,
    /// Axis schedule: round-robin, longest-axis or axis-major.
    #[arg(long, default_value = "round-robin")]
    pub axis_policy: AxisPolicy,
    /// Representative points stored in the header: center, uniform or grid.
    #[arg(long, default_value = "center")]
    pub representative: RepresentativePolicy,
}

#[derive(Args, Debug)]
pub struct CompressArgs {
    /// Input points ("-" for standard input).
    pub input: PathBuf,
    /// Output container ("-" for standard output).
    #[arg(short, long)]
    pub output: PathBuf,
    /// Bits per axis: one value for every axis or a comma-separated list.
    /// Inferred from the data when the input holds non-negative integers.
    #[arg(long)]
    pub bits: Option<String>,
    /// Quantization range per axis as lo:hi pairs separated by commas; data
    /// extents are used for real-valued input when absent.
    #[arg(long, allow_hyphen_values = true)]
    pub bounds: Option<String>,
    /// Dimension of an input that may be empty.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Input format: text or dgpc.
    #[arg(long, default_value = "text")]
    pub format: dgpc::PointFormat,
    #[command(flatten)]
    pub coding: CodingFlags,
    /// Report format: text or csv.
    #[arg(long, default_value = "text")]
    pub report: commands::ReportFormat,
}

#[derive(Args, Debug)]
pub struct DecompressArgs {
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Stop after the first wave resolving this many bits per axis (one value
    /// or a comma-separated list).
    #[arg(long)]
    pub precision: Option<String>,
    /// Override the header's representative-point policy.
    #[arg(long)]
    pub representative: Option<RepresentativePolicy>,
    /// Seed for the uniform representative policy.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write every wave as a point file into this directory.
    #[arg(long)]
    pub snapshots: Option<PathBuf>,
    /// Write quantized integers even when the container has a bounds block.
    #[arg(long)]
    pub integers: bool,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    /// uniform, quadrant, gaussian-mixture or terrain-grid.
    pub generator: dgpc::Generator,
    #[arg(short, long)]
    pub n: usize,
    /// Bits per axis (terrain-grid: the last axis carries the height).
    #[arg(long)]
    pub bits: String,
    /// Dimension when --bits is a single value.
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of blobs for gaussian-mixture.
    #[arg(long)]
    pub blobs: Option<u32>,
    /// Blob standard deviation for gaussian-mixture, as a fraction of the
    /// axis extent.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    pub input: PathBuf,
    #[arg(long, default_value = "text")]
    pub report: commands::ReportFormat,
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    /// uniform-cost, prediction-gain or linearity.
    pub suite: dgpc::experiment::Suite,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Compress(a) => commands::compress(&a),
        Command::Decompress(a) => commands::decompress(&a),
        Command::Gen(a) => commands::gen(&a),
        Command::Stats(a) => commands::stats(&a),
        Command::Experiment(a) => commands::experiment(&a),
        Command::Serve(a) => net::serve(&a),
        Command::Client(a) => net::client(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dgpc: {e:#}");
            ExitCode::FAILURE
        }
    }
}
