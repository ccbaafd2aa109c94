//! `vpr-jpeg`: command line front end for the compression benchmark.
//!
//! Every subcommand reads and writes plain files so stages can be rerun or
//! replaced independently. Each artifact gets a `<artifact>.meta.json`
//! sidecar.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use vpr_jpeg::ErrorClass;

#[derive(Debug, Parser)]
#[command(name = "vpr-jpeg", version, about = "JPEG compression benchmark for visual place recognition")]
struct Cli {
    /// Worker threads per stage.
    #[arg(long, global = true, env = "VPR_JPEG_WORKERS",
          value_parser = clap::value_parser!(u32).range(1..))]
    workers: Option<u32>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compress both sides of a dataset at every level.
    Compress(CompressArgs),
    /// Compute descriptors over a compressed corpus, or import a VPRD file.
    Extract(ExtractArgs),
    /// Best reference for every query.
    Match(MatchArgs),
    /// Accuracy of a match file or a full degradation curve.
    Evaluate(EvaluateArgs),
    /// Mean image entropy per compression level.
    Entropy(EntropyArgs),
    /// Accuracy with queries and references at different levels.
    Nonuniform(NonuniformArgs),
    /// Transfer time, budget selection and the accuracy/size trade-off.
    Bandwidth(BandwidthArgs),
    /// Merge result tables into one long-format table.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DescriptorKind {
    Hog,
    Vprd,
}

#[derive(Debug, Args)]
pub struct CompressArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Comma-separated compression percents.
    #[arg(long, default_value = "0,50,80,90,95,97")]
    pub levels: String,
    /// Output root; receives `<percent>/{query,reference}/` and `sizes.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct HogArgs {
    /// Resize target as WIDTHxHEIGHT.
    #[arg(long, default_value = "128x128")]
    pub resize: String,
    #[arg(long, default_value_t = 8)]
    pub cell: u32,
    #[arg(long, default_value_t = 2)]
    pub block: u32,
    #[arg(long, default_value_t = 1)]
    pub stride: u32,
    #[arg(long, default_value_t = 9)]
    pub bins: u32,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long, value_enum, default_value_t = DescriptorKind::Hog)]
    pub descriptor: DescriptorKind,
    /// Single image directory.
    #[arg(long, conflicts_with = "corpus_root")]
    pub corpus: Option<PathBuf>,
    /// Compressed corpus root written by `compress`.
    #[arg(long)]
    pub corpus_root: Option<PathBuf>,
    /// Levels to extract under `--corpus-root`.
    #[arg(long, default_value = "0,50,80,90,95,97")]
    pub levels: String,
    /// VPRD file to validate and import (`--descriptor vprd`).
    #[arg(long)]
    pub from: Option<PathBuf>,
    /// A `.vprd` file, or a directory in `--corpus-root` mode.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub hog: HogArgs,
}

#[derive(Debug, Args)]
pub struct MatchArgs {
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long)]
    pub refs: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the full similarity matrix as VPRD.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GroundTruthArgs {
    /// Dataset manifest; identity ground truth is used without one.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Accept matches within this many frames (overrides the manifest).
    #[arg(long)]
    pub tolerance: Option<usize>,
    /// Dataset name when no manifest is given.
    #[arg(long, default_value = "unnamed")]
    pub dataset: String,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Descriptor tree written by `extract --corpus-root`.
    #[arg(long, conflicts_with = "matches")]
    pub descriptors: Option<PathBuf>,
    /// Levels to evaluate; defaults to every level in the tree.
    #[arg(long)]
    pub levels: Option<String>,
    /// Match CSV written by `match`.
    #[arg(long, requires = "references")]
    pub matches: Option<PathBuf>,
    /// Reference count for a match CSV.
    #[arg(long)]
    pub references: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub q_level: u8,
    #[arg(long, default_value_t = 0)]
    pub r_level: u8,
    /// Technique name; defaults to the descriptor label.
    #[arg(long)]
    pub technique: Option<String>,
    #[command(flatten)]
    pub gt: GroundTruthArgs,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EntropyArgs {
    /// Compressed corpus root written by `compress`.
    #[arg(long, conflicts_with = "corpus")]
    pub corpus_root: Option<PathBuf>,
    /// Single image directory.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Levels under `--corpus-root` (default: all six standard levels), or
    /// the one level a `--corpus` directory was compressed at (default 0).
    #[arg(long)]
    pub levels: Option<String>,
    #[arg(long, default_value = "unnamed")]
    pub dataset: String,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct NonuniformArgs {
    #[arg(long)]
    pub descriptors: PathBuf,
    #[arg(long, default_value = "0,97")]
    pub q_levels: String,
    #[arg(long, default_value = "0,97")]
    pub r_levels: String,
    #[arg(long)]
    pub technique: Option<String>,
    #[command(flatten)]
    pub gt: GroundTruthArgs,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BandwidthArgs {
    /// Size table written by `compress`.
    #[arg(long)]
    pub sweep: PathBuf,
    /// Link rate in bytes per second.
    #[arg(long)]
    pub rate_bytes: f64,
    /// Protocol overhead as a fraction of payload.
    #[arg(long, default_value_t = 0.0)]
    pub overhead: f64,
    #[arg(long)]
    pub budget_bytes: Option<u64>,
    /// Uniform results table, for accuracy and the Pareto table.
    #[arg(long)]
    pub curve: Option<PathBuf>,
    /// Technique to take from `--curve` when it holds several.
    #[arg(long)]
    pub technique: Option<String>,
    /// Output directory; receives `plan.json` and `pareto.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long, required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: PathBuf,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let workers = cli.workers.map_or_else(default_workers, |w| w as usize);
    let result = match cli.command {
        Command::Compress(a) => commands::compress(&a, workers),
        Command::Extract(a) => commands::extract(&a, workers),
        Command::Match(a) => commands::match_sets(&a, workers),
        Command::Evaluate(a) => commands::evaluate(&a, workers),
        Command::Entropy(a) => commands::entropy(&a, workers),
        Command::Nonuniform(a) => commands::nonuniform(&a, workers),
        Command::Bandwidth(a) => commands::bandwidth(&a),
        Command::Report(a) => commands::report(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            ExitCode::from(match e.class() {
                ErrorClass::Config => 2,
                ErrorClass::Data => 3,
                ErrorClass::Internal => 4,
            })
        }
    }
}
