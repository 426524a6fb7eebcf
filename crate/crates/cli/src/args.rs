use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use tasksets_core::curves::{Pooling, DEFAULT_HORIZON};
use tasksets_core::manifold::{EmbedMethod, DEFAULT_MIN_GAMES};
use tasksets_core::overlap::OverlapMeasure;
use tasksets_core::tasksets::Theme;

fn default_jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

#[derive(Debug, Parser)]
#[command(name = "tasksets", version, about = "Task-set analysis of multi-agent gameplay telemetry")]
pub struct Cli {
    #[command(flatten)]
    pub global: Globals,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Globals {
    /// Worker threads for per-file work.
    #[arg(long, global = true, default_value_t = default_jobs())]
    pub jobs: usize,
    /// Master seed; overrides the config's seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Curve horizon in ticks.
    #[arg(long, global = true, default_value_t = DEFAULT_HORIZON)]
    pub horizon: usize,
    /// Players with fewer games are skipped.
    #[arg(long, global = true, default_value_t = DEFAULT_MIN_GAMES)]
    pub min_games: usize,
    /// Population config (TOML, or JSON by extension) for simulate and bench.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a population and write one telemetry file per game.
    Simulate(SimulateArgs),
    /// Per-player curves and feature vectors for one theme.
    Analyze(AnalyzeArgs),
    /// 2D embedding of a features file.
    Embed(EmbedArgs),
    /// Alignment report between two features files.
    Compare(CompareArgs),
    /// Task-set co-occurrence matrices.
    Overlap(OverlapArgs),
    /// Solo/multi occupancy per character and fight overlap per class.
    Occupancy(OccupancyArgs),
    /// Strategy transitions between two characters.
    Switch(SwitchArgs),
    /// Write the task-set registry as JSON.
    RegistryDump(RegistryDumpArgs),
    /// Time predicate evaluation single-threaded and in parallel.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Write uncompressed `.jsonl` instead of `.jsonl.gz`.
    #[arg(long)]
    pub plain: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AnalyzeArgs {
    /// Directory of telemetry files.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// fight_flight, explore_exploit or solo_multi.
    #[arg(long)]
    pub theme: Theme,
    /// Character name, or class name (damage, support, tank).
    #[arg(long)]
    pub character: Option<String>,
    /// events or game_mean.
    #[arg(long, default_value = "events")]
    pub pooling: Pooling,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EmbedArgs {
    /// features.csv written by analyze.
    #[arg(long)]
    pub features: PathBuf,
    /// linear or neighbor.
    #[arg(long, default_value = "linear")]
    pub method: EmbedMethod,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CompareArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long, default_value = "linear")]
    pub method: EmbedMethod,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OverlapArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub character: Option<String>,
    /// Second telemetry directory; differences are written as input minus baseline.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    /// jaccard or conditional.
    #[arg(long, default_value = "jaccard")]
    pub measure: OverlapMeasure,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OccupancyArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub character: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SwitchArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Character played first.
    #[arg(long)]
    pub from: String,
    /// Character switched to.
    #[arg(long)]
    pub to: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RegistryDumpArgs {
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BenchArgs {
    /// Use only the first N games of the population.
    #[arg(long)]
    pub games: Option<usize>,
    /// Games simulated and held in memory at once.
    #[arg(long, default_value_t = 16)]
    pub batch: usize,
    /// Threads for the parallel measurement.
    #[arg(long, default_value_t = 8)]
    pub parallel_jobs: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
