use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "pilus", version, about = "Simulate growing, conjugating rod-shaped bacteria")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run replicates of a scenario and write snapshots, events and a summary.
    Run(RunArgs),
    /// Compute metrics from snapshot files into CSV.
    Metrics(MetricsArgs),
    /// Draw snapshot records as SVG frames.
    Render(RenderArgs),
    /// List the built-in presets.
    Presets,
    /// Print the fully resolved scenario as TOML.
    DumpConfig(SourceArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SourceArgs {
    /// Scenario TOML file.
    #[arg(short = 's', long, conflicts_with = "preset", required_unless_present = "preset")]
    pub scenario: Option<PathBuf>,
    /// Built-in preset name (see `pilus presets`).
    #[arg(long)]
    pub preset: Option<String>,
    /// Override the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the simulated duration in minutes.
    #[arg(long)]
    pub duration_min: Option<f64>,
    /// Iterations between sampled snapshots.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub snapshot_every: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, default_value_t = 15, value_parser = clap::value_parser!(u64).range(1..))]
    pub replicates: u64,
    /// Output root; artifacts go to `<out>/<scenario name>/`.
    #[arg(long, env = "PILUS_OUT", default_value = "pilus-out")]
    pub out: PathBuf,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: Option<u64>,
    /// Metrics to extract after the run (repeatable).
    #[arg(long = "metric", value_name = "NAME")]
    pub metrics: Vec<String>,
    /// Bin count for profile and field metrics.
    #[arg(long)]
    pub bins: Option<usize>,
    /// Also draw every snapshot as SVG.
    #[arg(long)]
    pub render: bool,
}

#[derive(Debug, Clone, Args)]
pub struct MetricsArgs {
    /// Snapshot streams; several files are aggregated by iteration.
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    /// One of density, ordering, y, isolation, counts, velocity_gradient,
    /// vector_field, curl (repeatable).
    #[arg(long = "metric", value_name = "NAME", required = true)]
    pub metrics: Vec<String>,
    /// Bin count for profile and field metrics.
    #[arg(long)]
    pub bins: Option<usize>,
    /// Directory for the CSV files; defaults to the first file's directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RenderArgs {
    /// Snapshot stream to draw.
    pub file: PathBuf,
    /// Directory for the frames; defaults to `<file>.frames`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overlay the binned velocity field.
    #[arg(long)]
    pub vectors: bool,
    /// Bins along the longer side for the velocity overlay.
    #[arg(long)]
    pub bins: Option<usize>,
    /// Draw only every k-th record.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub every: u64,
    /// Palette override such as `donor=#ff0000` (repeatable). Keys: donor,
    /// recipient, transconjugant, pilus, wall, background.
    #[arg(long = "color", value_name = "KEY=#RRGGBB")]
    pub colors: Vec<String>,
}
