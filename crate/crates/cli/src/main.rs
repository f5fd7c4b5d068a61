use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod report;

#[derive(Parser)]
#[command(
    name = "plex",
    version,
    about = "Build, probe and tune PLEX learned indexes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum IndexType {
    /// Spline plus auto-tuned subindex.
    Plex,
    /// Spline plus a radix table with the tuner's choice of bits.
    Rs,
    /// Plain binary search over the data; writes an empty index file.
    Binary,
}

impl IndexType {
    pub fn name(self) -> &'static str {
        match self {
            IndexType::Plex => "plex",
            IndexType::Rs => "rs",
            IndexType::Binary => "binary",
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset (count-prefixed little-endian u64 keys).
    Gen(GenArgs),
    /// Build an index over a dataset and print its stats as one JSON line.
    Build(BuildArgs),
    /// Verify an index against a lower-bound oracle, then time lookups and
    /// emit a CSV row.
    Probe(ProbeArgs),
    /// Print the tuner's cost tables and choice; optionally grid-search
    /// every configuration and measure it.
    Tune(TuneArgs),
}

#[derive(clap::Args)]
pub struct GenArgs {
    /// uniform, lognormal, books_like, face_like or osm_like.
    #[arg(long)]
    pub kind: String,
    /// Number of keys, at least 1.
    #[arg(short, long = "keys", value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Share of huge outlier keys (face_like only).
    #[arg(long)]
    pub outlier_fraction: Option<f64>,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(clap::Args)]
pub struct BuildArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u64).range(1..))]
    pub epsilon: u64,
    #[arg(long, value_enum, default_value_t = IndexType::Plex)]
    pub index: IndexType,
    /// Index file; its stats are also written next to it as
    /// `<out>.stats.json`.
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(clap::Args)]
pub struct WorkloadArgs {
    /// Number of lookups per repeat.
    #[arg(long, default_value_t = 100_000)]
    pub probes: usize,
    /// Share of probes that hit a stored key; the rest fall into gaps.
    #[arg(long, default_value_t = 0.5)]
    pub positive_fraction: f64,
    #[arg(long, default_value_t = 7)]
    pub workload_seed: u64,
}

#[derive(clap::Args)]
pub struct ProbeArgs {
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub workload: WorkloadArgs,
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    /// Dataset label for the CSV row; defaults to the build stats or the
    /// data file name.
    #[arg(long)]
    pub dataset: Option<String>,
    /// Append the row to this CSV file (header written when the file is
    /// new or empty) instead of printing header and row to stdout.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(clap::Args)]
pub struct TuneArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u64).range(1..))]
    pub epsilon: u64,
    #[arg(long, default_value_t = plex::tuner::DEFAULT_R_MAX)]
    pub r_max: u32,
    #[arg(long, default_value_t = plex::tuner::DEFAULT_DELTA_MAX)]
    pub delta_max: u32,
    /// Build every grid configuration (epsilon and delta in 2..=1024 by
    /// powers of two, r in 1..=10) and report measured search steps.
    #[arg(long)]
    pub grid: bool,
    /// With --grid, also list configurations over the memory budget.
    #[arg(long)]
    pub all: bool,
    #[command(flatten)]
    pub workload: WorkloadArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => commands::gen(&a),
        Command::Build(a) => commands::build(&a),
        Command::Probe(a) => commands::probe(&a),
        Command::Tune(a) => commands::tune(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
