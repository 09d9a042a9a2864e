use std::fs;
use std::path::{Path, PathBuf};

use pilus_cli::{main_with, EXIT_CONFIG, EXIT_IO, EXIT_OK, EXIT_RUNTIME};
use pilus_core::snapshot::read_stream;
use pilus_core::world::presets;
use pilus_core::world::run::{run, MemorySink};
use tempfile::TempDir;

fn pilus(args: &[&str]) -> i32 {
    main_with(std::iter::once("pilus").chain(args.iter().copied()))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn short_run(out: &Path, extra: &[&str]) -> PathBuf {
    let mut args = vec!["run", "--preset", "fig2bc_conjugation", "--duration-min", "40", "--out", s(out)];
    args.extend_from_slice(extra);
    assert_eq!(pilus(&args), EXIT_OK);
    out.join("fig2bc_conjugation")
}

fn files(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn exit_codes_separate_failure_kinds() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(pilus(&["presets"]), EXIT_OK);
    assert_eq!(pilus(&["--help"]), EXIT_OK);
    assert_eq!(pilus(&["run", "--preset", "no_such_preset", "--out", s(tmp.path())]), EXIT_CONFIG);
    assert_eq!(pilus(&["frobnicate"]), EXIT_CONFIG);

    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, "name = \"x\"\nwidth = -5.0\n").unwrap();
    assert_eq!(pilus(&["dump-config", "--scenario", s(&bad)]), EXIT_CONFIG);
    fs::write(&bad, "nonsense = [").unwrap();
    assert_eq!(pilus(&["dump-config", "--scenario", s(&bad)]), EXIT_CONFIG);

    let missing = tmp.path().join("missing.toml");
    assert_eq!(pilus(&["run", "--scenario", s(&missing), "--out", s(tmp.path())]), EXIT_IO);
    let garbage = tmp.path().join("garbage.jsonl");
    fs::write(&garbage, "{not json\n").unwrap();
    assert_eq!(pilus(&["metrics", s(&garbage), "--metric", "y"]), EXIT_IO);

    // An oscillator this stiff blows up on its first steps.
    let mut cfg = presets::preset("fig3_oscillator_cross").unwrap();
    cfg.duration_min = 5.0;
    let mut toml = cfg.to_toml();
    toml = toml.replace("delta = 5.0", "delta = 1e6").replace("dt = 0.04", "dt = 10.0");
    let stiff = tmp.path().join("stiff.toml");
    fs::write(&stiff, toml).unwrap();
    assert_eq!(pilus(&["run", "--scenario", s(&stiff), "--replicates", "1", "--out", s(tmp.path())]), EXIT_RUNTIME);
    let partial = fs::read_to_string(tmp.path().join("fig3_oscillator_cross/rep_000.snapshots.jsonl")).unwrap();
    assert!(partial.lines().last().unwrap().starts_with("{\"partial\":true"));
}

#[test]
fn reruns_and_worker_counts_give_identical_artifacts() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let c = TempDir::new().unwrap();
    let one = short_run(a.path(), &["--replicates", "3", "--workers", "1", "--metric", "y"]);
    let many = short_run(b.path(), &["--replicates", "3", "--workers", "3", "--metric", "y"]);
    assert_eq!(files(&one), files(&many));
    let single = short_run(c.path(), &["--replicates", "1"]);
    for name in ["rep_000.snapshots.jsonl", "rep_000.events.jsonl"] {
        assert_eq!(fs::read(one.join(name)).unwrap(), fs::read(single.join(name)).unwrap());
    }
    assert_ne!(
        fs::read(one.join("rep_000.snapshots.jsonl")).unwrap(),
        fs::read(one.join("rep_001.snapshots.jsonl")).unwrap()
    );
}

#[test]
fn snapshot_files_parse_back_losslessly() {
    let tmp = TempDir::new().unwrap();
    let dir = short_run(tmp.path(), &["--replicates", "1", "--snapshot-every", "30"]);
    let stream = read_stream(fs::File::open(dir.join("rep_000.snapshots.jsonl")).map(std::io::BufReader::new).unwrap()).unwrap();

    let mut cfg = presets::preset("fig2bc_conjugation").unwrap();
    cfg.duration_min = 40.0;
    cfg.snapshot_every = 30;
    let mut sink = MemorySink::default();
    run(&cfg.to_scenario().unwrap(), 0, &mut sink).unwrap();
    assert_eq!(Some(&stream.header), sink.header.as_ref());
    assert_eq!(stream.records, sink.records);
    assert_eq!(stream.records.len(), 21);

    let toml = fs::read_to_string(dir.join("scenario.toml")).unwrap();
    assert_eq!(pilus_core::world::config::ScenarioConfig::from_toml(&toml).unwrap(), cfg);
}

#[test]
fn summary_lists_every_replicate() {
    let tmp = TempDir::new().unwrap();
    let dir = short_run(tmp.path(), &["--replicates", "4"]);
    let csv = fs::read_to_string(dir.join("summary.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert!(rows[0].starts_with("replicate,"));
    assert_eq!(rows.len(), 1 + 4 + 2);
    assert!(rows[5].starts_with("mean,") && rows[6].starts_with("std,"));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(json["format"], "pilus-summary");
    assert_eq!(json["replicates"].as_array().unwrap().len(), 4);
}

#[test]
fn metrics_are_written_as_csv() {
    let tmp = TempDir::new().unwrap();
    let dir = short_run(tmp.path(), &["--replicates", "2"]);
    let out = tmp.path().join("m");
    let a = dir.join("rep_000.snapshots.jsonl");
    let b = dir.join("rep_001.snapshots.jsonl");
    let code = pilus(&[
        "metrics", s(&a), s(&b), "--metric", "y", "--metric", "velocity_gradient", "--metric", "counts", "--metric", "curl", "--out", s(&out),
    ]);
    assert_eq!(code, EXIT_OK);

    let y = fs::read_to_string(out.join("y.csv")).unwrap();
    let mut lines = y.lines();
    assert!(lines.next().unwrap().starts_with("# format=pilus-metrics version=1 metric=y"));
    assert_eq!(lines.next().unwrap(), "iteration,minutes,metric,mean,std,n");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r[5] == "2"));

    let vg = fs::read_to_string(out.join("velocity_gradient.csv")).unwrap();
    let first: Vec<&str> = vg.lines().skip(2).filter(|l| l.starts_with("0,")).collect();
    assert_eq!(first.len(), 20);
    assert_eq!(vg.lines().nth(1).unwrap(), "iteration,minutes,metric,bin,position,mean,std,n");
    assert!(out.join("counts.csv").exists() && out.join("curl.csv").exists());

    assert_eq!(pilus(&["metrics", s(&a), "--metric", "bogus"]), EXIT_CONFIG);
}

#[test]
fn frames_show_cells_and_pili() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = presets::preset("fig2bc_conjugation").unwrap();
    cfg.duration_min = 120.0;
    cfg.p_d = 0.05;
    cfg.snapshot_every = 15;
    let scenario = tmp.path().join("busy.toml");
    fs::write(&scenario, cfg.to_toml()).unwrap();
    assert_eq!(pilus(&["run", "--scenario", s(&scenario), "--replicates", "1", "--out", s(tmp.path())]), EXIT_OK);
    let stream = tmp.path().join("fig2bc_conjugation/rep_000.snapshots.jsonl");
    let frames = tmp.path().join("frames");
    let code = pilus(&["render", s(&stream), "--out", s(&frames), "--every", "2", "--vectors", "--color", "recipient=#0000ff"]);
    assert_eq!(code, EXIT_OK);
    let svgs = files(&frames);
    assert_eq!(svgs.len(), 61);
    let first = String::from_utf8(svgs[0].1.clone()).unwrap();
    assert!(first.starts_with("<svg") || first.starts_with("<?xml"));
    assert!(first.contains("#000000"));
    assert!(first.contains("#0000ff"));
    assert!(first.contains("#d62728"));
    let with_pilus = svgs
        .iter()
        .filter(|(_, b)| String::from_utf8_lossy(b).contains("#00ff00"))
        .count();
    assert!(with_pilus > 0);

    assert_eq!(pilus(&["render", s(&stream), "--out", s(&frames), "--color", "recipient=blue"]), EXIT_CONFIG);
}
