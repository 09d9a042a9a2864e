//! `pilus run`: replicate batches written to disk.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use pilus_core::metrics::Stats;
use pilus_core::snapshot::{write_line, PartialMarker, SnapshotHeader, SnapshotRecord, EVENTS_FORMAT, FORMAT_VERSION};
use pilus_core::world::config::ScenarioConfig;
use pilus_core::world::presets;
use pilus_core::world::run::{run, RunError, RunSummary, Sink};
use pilus_core::world::{Event, Scenario};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::args::{RunArgs, SourceArgs};
use crate::error::CliError;

/// Load a preset or scenario file and apply command-line overrides.
pub fn load_config(source: &SourceArgs) -> Result<ScenarioConfig, CliError> {
    let mut config = match (&source.scenario, &source.preset) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(CliError::io(path))?;
            ScenarioConfig::from_toml(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        (None, Some(name)) => presets::preset(name).ok_or_else(|| {
            CliError::Config(format!("unknown preset `{name}`; known presets: {}", presets::names().join(", ")))
        })?,
        (None, None) => return Err(CliError::Config("give --scenario or --preset".into())),
    };
    if let Some(seed) = source.seed {
        config.seed = seed;
    }
    if let Some(d) = source.duration_min {
        config.duration_min = d;
    }
    if let Some(k) = source.snapshot_every {
        config.snapshot_every = k;
    }
    Ok(config)
}

pub fn resolve(config: &ScenarioConfig) -> Result<Scenario, CliError> {
    config.to_scenario().map_err(|e| CliError::Config(e.to_string()))
}

/// First line of an events file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventsHeader {
    pub format: String,
    pub version: u32,
    pub scenario: String,
    pub replicate: u64,
    pub seed: u64,
}

/// Writes one replicate's snapshot and event streams.
pub struct FileSink {
    snapshots: BufWriter<File>,
    events: BufWriter<File>,
}

impl FileSink {
    pub fn create(snapshots: &Path, events: &Path) -> Result<Self, CliError> {
        Ok(FileSink {
            snapshots: BufWriter::new(File::create(snapshots).map_err(CliError::io(snapshots))?),
            events: BufWriter::new(File::create(events).map_err(CliError::io(events))?),
        })
    }

    pub fn finish(mut self) -> std::io::Result<()> {
        self.snapshots.flush()?;
        self.events.flush()
    }
}

impl Sink for FileSink {
    fn header(&mut self, header: &SnapshotHeader) -> std::io::Result<()> {
        write_line(&mut self.snapshots, header)?;
        write_line(
            &mut self.events,
            &EventsHeader {
                format: EVENTS_FORMAT.into(),
                version: FORMAT_VERSION,
                scenario: header.scenario.clone(),
                replicate: header.replicate,
                seed: header.seed,
            },
        )
    }
    fn snapshot(&mut self, record: &SnapshotRecord) -> std::io::Result<()> {
        write_line(&mut self.snapshots, record)
    }
    fn events(&mut self, events: &[Event]) -> std::io::Result<()> {
        for e in events {
            write_line(&mut self.events, e)?;
        }
        Ok(())
    }
    fn abort(&mut self, reason: &str) -> std::io::Result<()> {
        write_line(
            &mut self.snapshots,
            &PartialMarker {
                partial: true,
                reason: reason.into(),
            },
        )
    }
}

pub fn snapshot_path(dir: &Path, replicate: u64) -> PathBuf {
    dir.join(format!("rep_{replicate:03}.snapshots.jsonl"))
}

pub fn events_path(dir: &Path, replicate: u64) -> PathBuf {
    dir.join(format!("rep_{replicate:03}.events.jsonl"))
}

/// Run one replicate into `dir`.
pub fn run_replicate(scenario: &Scenario, replicate: u64, dir: &Path) -> Result<RunSummary, CliError> {
    let snaps = snapshot_path(dir, replicate);
    let mut sink = FileSink::create(&snaps, &events_path(dir, replicate))?;
    let result = run(scenario, replicate, &mut sink);
    let flushed = sink.finish();
    let summary = result.map_err(|e| match e {
        RunError::World(w) => CliError::Runtime(format!("replicate {replicate}: {w}")),
        RunError::Sink(source) => CliError::Io { path: snaps.clone(), source },
    })?;
    flushed.map_err(CliError::io(&snaps))?;
    Ok(summary)
}

/// Replicate rows plus across-replicate statistics.
#[derive(Clone, Debug, Serialize)]
pub struct BatchSummary {
    pub format: &'static str,
    pub version: u32,
    pub scenario: String,
    pub seed: u64,
    pub replicates: Vec<RunSummary>,
    pub stats: Vec<(String, Option<Stats>)>,
}

const SUMMARY_COLUMNS: [&str; 13] = [
    "replicate",
    "seed",
    "iterations",
    "minutes",
    "stop",
    "donors",
    "recipients",
    "transconjugants",
    "y",
    "transfers",
    "springs_created",
    "divisions",
    "washouts",
];

fn numeric_fields(s: &RunSummary) -> Vec<(&'static str, Option<f64>)> {
    vec![
        ("donors", Some(s.donors as f64)),
        ("recipients", Some(s.recipients as f64)),
        ("transconjugants", Some(s.transconjugants as f64)),
        ("y", s.y),
        ("transfers", Some(s.totals.transfers as f64)),
        ("springs_created", Some(s.totals.springs_created as f64)),
        ("divisions", Some(s.totals.divisions as f64)),
        ("washouts", Some(s.totals.washouts as f64)),
        ("first_transfer_minutes", s.first_transfer_minutes),
    ]
}

pub fn summarize(scenario: &Scenario, runs: Vec<RunSummary>) -> BatchSummary {
    let names: Vec<&str> = runs.first().map(|r| numeric_fields(r).iter().map(|f| f.0).collect()).unwrap_or_default();
    let stats = names
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let values: Vec<f64> = runs.iter().filter_map(|r| numeric_fields(r)[k].1).collect();
            (name.to_string(), Stats::of(&values))
        })
        .collect();
    BatchSummary {
        format: "pilus-summary",
        version: FORMAT_VERSION,
        scenario: scenario.name.clone(),
        seed: scenario.rng_seed,
        replicates: runs,
        stats,
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn summary_csv(batch: &BatchSummary) -> String {
    let mut out = format!("# format=pilus-summary version={}\n", FORMAT_VERSION);
    out.push_str(&SUMMARY_COLUMNS.join(","));
    out.push_str(",first_transfer_minutes\n");
    for r in &batch.replicates {
        let stop = serde_json::to_value(r.stop).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.replicate,
            r.seed,
            r.iterations,
            r.minutes,
            stop,
            r.donors,
            r.recipients,
            r.transconjugants,
            opt(r.y),
            r.totals.transfers,
            r.totals.springs_created,
            r.totals.divisions,
            r.totals.washouts,
            opt(r.first_transfer_minutes),
        ));
    }
    for (label, pick) in [("mean", 0usize), ("std", 1)] {
        let value = |name: &str| {
            batch
                .stats
                .iter()
                .find(|(n, _)| n == name)
                .and_then(|(_, s)| *s)
                .map(|s| if pick == 0 { s.mean } else { s.std })
        };
        out.push_str(&format!(
            "{label},,,,,{},{},{},{},{},{},{},{},{}\n",
            opt(value("donors")),
            opt(value("recipients")),
            opt(value("transconjugants")),
            opt(value("y")),
            opt(value("transfers")),
            opt(value("springs_created")),
            opt(value("divisions")),
            opt(value("washouts")),
            opt(value("first_transfer_minutes")),
        ));
    }
    out
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(CliError::io(path))
}

/// Everything `pilus run` produced.
pub struct RunOutput {
    pub dir: PathBuf,
    pub summary: BatchSummary,
    pub snapshot_files: Vec<PathBuf>,
}

pub fn cmd_run(args: &RunArgs) -> Result<RunOutput, CliError> {
    let config = load_config(&args.source)?;
    let scenario = resolve(&config)?;
    for name in &args.metrics {
        crate::measure::MetricKind::parse(name)?;
    }
    let dir = args.out.join(&scenario.name);
    fs::create_dir_all(&dir).map_err(CliError::io(&dir))?;
    write_file(&dir.join("scenario.toml"), config.to_toml().as_bytes())?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = args.workers {
        pool = pool.num_threads(w as usize);
    }
    let pool = pool.build().map_err(|e| CliError::Runtime(e.to_string()))?;
    let results: Vec<Result<RunSummary, CliError>> =
        pool.install(|| (0..args.replicates).into_par_iter().map(|rep| run_replicate(&scenario, rep, &dir)).collect());
    let mut runs = Vec::with_capacity(results.len());
    for r in results {
        runs.push(r?);
    }
    let snapshot_files: Vec<PathBuf> = (0..args.replicates).map(|rep| snapshot_path(&dir, rep)).collect();
    let summary = summarize(&scenario, runs);
    write_file(&dir.join("summary.csv"), summary_csv(&summary).as_bytes())?;
    let json = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Runtime(e.to_string()))?;
    write_file(&dir.join("summary.json"), format!("{json}\n").as_bytes())?;

    if !args.metrics.is_empty() {
        crate::measure::write_metrics(&snapshot_files, &args.metrics, args.bins, &dir.join("metrics"))?;
    }
    if args.render {
        for (rep, file) in snapshot_files.iter().enumerate() {
            let out = dir.join("frames").join(format!("rep_{rep:03}"));
            crate::render::render_file(file, &out, &crate::render::RenderOptions::default())?;
        }
    }
    Ok(RunOutput {
        dir,
        summary,
        snapshot_files,
    })
}
