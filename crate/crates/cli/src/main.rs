//! `iminfector`: cascade-based influence maximization from the command line.
//!
//! Every subcommand writes its artifacts plus a JSON run manifest (defaults to
//! `<out>.manifest.json`, or `manifest.json` inside the pipeline directory).
//!
//! Exit codes: 0 success, 2 usage error or missing input, 3 input format
//! error, 4 numeric failure during training, 5 degenerate data.

mod error;
mod manifest;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "iminfector", version, about = "Influence maximization from diffusion cascades")]
struct Cli {
    /// Where to write the run manifest.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,

    /// Worker cap. Every stage is sequential, so any value yields the
    /// single-threaded reference results.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    threads: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Temporal train/test split of a cascade file.
    Split(SplitArgs),
    /// Per-initiator train and test counts.
    Stats(StatsArgs),
    /// Learn influencer embeddings.
    Train(TrainArgs),
    /// Prune candidates by embedding norm and build the diffusion matrix.
    Rank(RankArgs),
    /// Select seeds from a diffusion matrix.
    Seed(SeedArgs),
    /// Distinct nodes influenced by a seed file on test cascades.
    Evaluate(EvaluateArgs),
    /// Seed sets from the k-core or average cascade size rankings.
    Baseline(BaselineArgs),
    /// Write a seeded synthetic corpus with planted influencers.
    Synth(SynthArgs),
    /// split, stats, train, rank, seed, evaluate and baseline in one run.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Args)]
struct SplitArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0.8)]
    train_frac: f64,
    #[arg(long)]
    out_train: PathBuf,
    #[arg(long)]
    out_test: PathBuf,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    test: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Clone)]
struct ModelArgs {
    #[arg(long, default_value_t = 50)]
    embed_dim: usize,
    #[arg(long, default_value_t = 5)]
    epochs: usize,
    #[arg(long, default_value_t = 0.1)]
    lr: f64,
    /// Context draws per cascade participant.
    #[arg(long, default_value_t = iminfector::context::DEFAULT_OVERSAMPLE)]
    oversample: f64,
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
    /// Also write the first epoch's training pairs here.
    #[arg(long)]
    dump_pairs: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    cascades: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RankArgs {
    #[arg(long)]
    model: PathBuf,
    /// Percentage of influencers kept as candidates.
    #[arg(long, default_value_t = 10.0)]
    prune_percent: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SeedArgs {
    #[arg(long)]
    dmatrix: PathBuf,
    #[arg(long, default_value_t = 50)]
    size: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    seeds: PathBuf,
    #[arg(long)]
    test: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    Kcore,
    Avgsize,
}

#[derive(Debug, Args)]
struct BaselineArgs {
    #[arg(long, value_enum)]
    method: Method,
    /// Follower graph, required for kcore.
    #[arg(long)]
    edges: Option<PathBuf>,
    /// Training cascades, required for avgsize.
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    size: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    /// Also write the follower graph.
    #[arg(long)]
    edges_out: Option<PathBuf>,
    /// Also write the planted influencer ids, one per line.
    #[arg(long)]
    planted_out: Option<PathBuf>,
    #[arg(long, default_value_t = 300)]
    nodes: usize,
    #[arg(long, default_value_t = 500)]
    cascades: usize,
    #[arg(long, default_value_t = 5)]
    planted: usize,
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
}

#[derive(Debug, Args)]
struct PipelineArgs {
    #[arg(long)]
    cascades: PathBuf,
    /// Follower graph; adds the kcore baseline when given.
    #[arg(long)]
    edges: Option<PathBuf>,
    #[arg(long, default_value = "iminfector-run")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 0.8)]
    train_frac: f64,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 10.0)]
    prune_percent: f64,
    #[arg(long, default_value_t = 50)]
    size: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads as usize;
    let manifest = cli.manifest;
    let result = match cli.command {
        Command::Split(a) => stages::split(&a, threads, manifest),
        Command::Stats(a) => stages::stats(&a, threads, manifest),
        Command::Train(a) => stages::train(&a, threads, manifest),
        Command::Rank(a) => stages::rank(&a, threads, manifest),
        Command::Seed(a) => stages::seed(&a, threads, manifest),
        Command::Evaluate(a) => stages::evaluate(&a, threads, manifest),
        Command::Baseline(a) => stages::baseline(&a, threads, manifest),
        Command::Synth(a) => stages::synth(&a, threads, manifest),
        Command::Pipeline(a) => stages::pipeline(&a, threads, manifest),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("iminfector: {err}");
            ExitCode::from(err.code)
        }
    }
}
