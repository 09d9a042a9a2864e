//! `pilus metrics`: snapshot streams to long-form CSV.
//!
//! Scalar metrics are written as `iteration,minutes,metric,mean,std,n`,
//! profiles as `iteration,minutes,metric,bin,position,mean,std,n` and
//! vector fields as `iteration,minutes,metric,ix,iy,x,y,vx,vy,n`. With
//! several input files, `mean`, `std` and `n` aggregate over the files that
//! define the value at that iteration.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use pilus_core::metrics::{self, BinGrid, Stats};
use pilus_core::physics::{Rect, Vec2};
use pilus_core::snapshot::{read_stream, SnapshotHeader, SnapshotRecord, SnapshotStream, FORMAT_VERSION};

use crate::error::CliError;

pub const DEFAULT_BINS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricKind {
    Density,
    Ordering,
    Y,
    Isolation,
    Counts,
    VelocityGradient,
    VectorField,
    Curl,
}

impl MetricKind {
    pub const ALL: [MetricKind; 8] = [
        MetricKind::Density,
        MetricKind::Ordering,
        MetricKind::Y,
        MetricKind::Isolation,
        MetricKind::Counts,
        MetricKind::VelocityGradient,
        MetricKind::VectorField,
        MetricKind::Curl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Density => "density",
            MetricKind::Ordering => "ordering",
            MetricKind::Y => "y",
            MetricKind::Isolation => "isolation",
            MetricKind::Counts => "counts",
            MetricKind::VelocityGradient => "velocity_gradient",
            MetricKind::VectorField => "vector_field",
            MetricKind::Curl => "curl",
        }
    }

    pub fn parse(name: &str) -> Result<MetricKind, CliError> {
        let alias = match name {
            "conjugation_frequency" => "y",
            "isolation_index" => "isolation",
            other => other,
        };
        MetricKind::ALL.into_iter().find(|k| k.name() == alias).ok_or_else(|| {
            let known: Vec<_> = MetricKind::ALL.iter().map(|k| k.name()).collect();
            CliError::Config(format!("unknown metric `{name}`; known metrics: {}", known.join(", ")))
        })
    }
}

pub fn read_file(path: &Path) -> Result<SnapshotStream, CliError> {
    let file = File::open(path).map_err(CliError::io(path))?;
    read_stream(BufReader::new(file)).map_err(|e| CliError::snapshot(path, e))
}

/// Smallest rectangle holding every growth region.
pub fn growth_extent(header: &SnapshotHeader) -> Rect {
    let regions = &header.geometry.growth_regions;
    let mut r = regions.first().copied().unwrap_or(header.geometry.bounds);
    for g in regions.iter().skip(1) {
        r = Rect {
            min: r.min.min(g.min),
            max: r.max.max(g.max),
        };
    }
    r
}

/// Longitudinal bins spanning the growth area along the channel axis.
pub fn profile_bins(header: &SnapshotHeader, bins: usize) -> Result<BinGrid, CliError> {
    let r = growth_extent(header);
    let axis = header.geometry.axis;
    let corners = [r.min, r.max, Vec2::new(r.min.x, r.max.y), Vec2::new(r.max.x, r.min.y)];
    let along: Vec<f64> = corners.iter().map(|c| c.dot(axis)).collect();
    let lo = along.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = along.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    metrics::axis_bins(lo, hi, bins).map_err(|e| CliError::Config(e.to_string()))
}

/// Square bins over `region`, `bins` along its longer side.
pub fn field_bins(region: &Rect, bins: usize) -> Result<BinGrid, CliError> {
    let side = region.width().max(region.height()) / bins.max(1) as f64;
    BinGrid::covering(region, side).map_err(|e| CliError::Config(e.to_string()))
}

/// One value keyed for aggregation: metric name plus an optional bin label.
type Key = (String, Vec<u64>);

#[derive(Default)]
struct Table {
    /// iteration -> (minutes, key -> values)
    rows: BTreeMap<u64, (f64, BTreeMap<Key, Vec<f64>>)>,
}

impl Table {
    fn push(&mut self, s: &SnapshotRecord, key: Key, value: f64) {
        let row = self.rows.entry(s.iteration).or_insert_with(|| (s.minutes, BTreeMap::new()));
        row.1.entry(key).or_default().push(value);
    }
}

fn fmt_stats(values: &[f64]) -> String {
    match Stats::of(values) {
        Some(s) => format!("{},{},{}", s.mean, s.std, s.n),
        None => ",,0".into(),
    }
}

fn scalar_values(kind: MetricKind, header: &SnapshotHeader, s: &SnapshotRecord, bins: usize) -> Result<Vec<(String, Option<f64>)>, CliError> {
    Ok(match kind {
        MetricKind::Density => vec![("density".into(), Some(metrics::density(s, &header.geometry.monitor_region)))],
        MetricKind::Ordering => vec![("ordering".into(), metrics::ordering(s, header.geometry.axis).ok())],
        MetricKind::Y => vec![("y".into(), metrics::conjugation_frequency(s).ok())],
        MetricKind::Isolation => vec![("isolation".into(), metrics::isolation_index(s, header.contact_radius, header.width).ok())],
        MetricKind::Counts => {
            let [d, r, t] = s.counts();
            vec![
                ("donors".into(), Some(d as f64)),
                ("recipients".into(), Some(r as f64)),
                ("transconjugants".into(), Some(t as f64)),
            ]
        }
        MetricKind::Curl => {
            let mut out = Vec::new();
            let whole = field_bins(&growth_extent(header), bins)?;
            out.push(("curl".into(), metrics::mean_curl(&metrics::vector_field(s, &whole), &whole)));
            for (k, trap) in header.geometry.traps.iter().enumerate() {
                let g = field_bins(trap, bins)?;
                out.push((format!("curl_trap{k}"), metrics::mean_curl(&metrics::vector_field(s, &g), &g)));
            }
            out
        }
        MetricKind::VelocityGradient | MetricKind::VectorField => unreachable!("not scalar"),
    })
}

/// CSV text for one metric over `streams`.
pub fn metric_csv(kind: MetricKind, streams: &[SnapshotStream], bins: Option<usize>) -> Result<String, CliError> {
    let bins = bins.unwrap_or(DEFAULT_BINS);
    if bins == 0 {
        return Err(CliError::Config("--bins must be at least 1".into()));
    }
    let mut table = Table::default();
    let mut out = format!("# format=pilus-metrics version={FORMAT_VERSION} metric={}", kind.name());
    if let Some(first) = streams.first() {
        let m = first.header.geometry.monitor_region;
        if kind == MetricKind::Density {
            out.push_str(&format!(" monitor={},{},{},{}", m.min.x, m.min.y, m.max.x, m.max.y));
        }
    }
    out.push('\n');
    match kind {
        MetricKind::VelocityGradient => {
            out.push_str("iteration,minutes,metric,bin,position,mean,std,n\n");
            let mut positions = BTreeMap::new();
            for st in streams {
                let grid = profile_bins(&st.header, bins)?;
                for s in &st.records {
                    let Ok(profile) = metrics::velocity_gradient(s, &grid, st.header.geometry.axis) else {
                        continue;
                    };
                    for (k, b) in profile.iter().enumerate() {
                        positions.insert(k as u64, b.position);
                        if let Some(v) = b.value {
                            table.push(s, (kind.name().into(), vec![k as u64]), v);
                        } else {
                            table.rows.entry(s.iteration).or_insert_with(|| (s.minutes, BTreeMap::new()));
                        }
                    }
                }
            }
            for (it, (minutes, row)) in &table.rows {
                for (k, pos) in &positions {
                    let values = row.get(&(kind.name().to_string(), vec![*k])).map(Vec::as_slice).unwrap_or(&[]);
                    out.push_str(&format!("{it},{minutes},{},{k},{pos},{}\n", kind.name(), fmt_stats(values)));
                }
            }
        }
        MetricKind::VectorField => {
            out.push_str("iteration,minutes,metric,ix,iy,x,y,vx,vy,n\n");
            let mut grid_used = None;
            let mut rows: BTreeMap<u64, (f64, BTreeMap<(usize, usize), Vec<Vec2>>)> = BTreeMap::new();
            for st in streams {
                let grid = field_bins(&growth_extent(&st.header), bins)?;
                grid_used.get_or_insert(grid);
                for s in &st.records {
                    let field = metrics::vector_field(s, &grid);
                    let row = rows.entry(s.iteration).or_insert_with(|| (s.minutes, BTreeMap::new()));
                    for (k, v) in field.iter().enumerate() {
                        if let Some(v) = v {
                            row.1.entry((k % grid.nx, k / grid.nx)).or_default().push(*v);
                        }
                    }
                }
            }
            if let Some(grid) = grid_used {
                for (it, (minutes, row)) in &rows {
                    for ((ix, iy), vs) in row {
                        let c = grid.bin_center(*ix, *iy);
                        let mean = vs.iter().fold(Vec2::ZERO, |a, v| a + *v) / vs.len() as f64;
                        out.push_str(&format!("{it},{minutes},vector_field,{ix},{iy},{},{},{},{},{}\n", c.x, c.y, mean.x, mean.y, vs.len()));
                    }
                }
            }
        }
        _ => {
            out.push_str("iteration,minutes,metric,mean,std,n\n");
            let mut names: Vec<String> = Vec::new();
            for st in streams {
                for s in &st.records {
                    for (name, v) in scalar_values(kind, &st.header, s, bins)? {
                        if !names.contains(&name) {
                            names.push(name.clone());
                        }
                        match v {
                            Some(v) => table.push(s, (name, Vec::new()), v),
                            None => {
                                table.rows.entry(s.iteration).or_insert_with(|| (s.minutes, BTreeMap::new()));
                            }
                        }
                    }
                }
            }
            for (it, (minutes, row)) in &table.rows {
                for name in &names {
                    let values = row.get(&(name.clone(), Vec::new())).map(Vec::as_slice).unwrap_or(&[]);
                    out.push_str(&format!("{it},{minutes},{name},{}\n", fmt_stats(values)));
                }
            }
        }
    }
    Ok(out)
}

/// Read `files` and write one CSV per metric into `out`.
pub fn write_metrics(files: &[PathBuf], names: &[String], bins: Option<usize>, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let kinds = names.iter().map(|n| MetricKind::parse(n)).collect::<Result<Vec<_>, _>>()?;
    let streams = files.iter().map(|f| read_file(f)).collect::<Result<Vec<_>, _>>()?;
    fs::create_dir_all(out).map_err(CliError::io(out))?;
    let mut written = Vec::new();
    for kind in kinds {
        let path = out.join(format!("{}.csv", kind.name()));
        fs::write(&path, metric_csv(kind, &streams, bins)?).map_err(CliError::io(&path))?;
        written.push(path);
    }
    Ok(written)
}
