//! `pilus render`: SVG frames in the figure conventions (donors red,
//! recipients yellow, transconjugants green, pili as green lines, program
//! readout as green intensity).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use pilus_core::cells::Role;
use pilus_core::metrics;
use pilus_core::physics::Vec2;
use pilus_core::snapshot::{CellRecord, SnapshotHeader, SnapshotRecord};

use crate::error::CliError;
use crate::measure::{field_bins, growth_extent, read_file, DEFAULT_BINS};

#[derive(Clone, Debug, PartialEq)]
pub struct Palette {
    pub donor: String,
    pub recipient: String,
    pub transconjugant: String,
    pub pilus: String,
    pub wall: String,
    pub background: String,
}

impl Default for Palette {
    fn default() -> Self {
        Palette {
            donor: "#d62728".into(),
            recipient: "#f2c80f".into(),
            transconjugant: "#2ca02c".into(),
            pilus: "#00ff00".into(),
            wall: "#404040".into(),
            background: "#000000".into(),
        }
    }
}

impl Palette {
    /// Apply overrides of the form `key=#RRGGBB`.
    pub fn with_overrides(mut self, specs: &[String]) -> Result<Self, CliError> {
        for spec in specs {
            let (key, color) = spec
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("color `{spec}` should look like donor=#ff0000")))?;
            let valid = color.len() == 7 && color.starts_with('#') && color[1..].chars().all(|c| c.is_ascii_hexdigit());
            if !valid {
                return Err(CliError::Config(format!("color `{color}` is not #RRGGBB")));
            }
            let slot = match key {
                "donor" => &mut self.donor,
                "recipient" => &mut self.recipient,
                "transconjugant" => &mut self.transconjugant,
                "pilus" => &mut self.pilus,
                "wall" => &mut self.wall,
                "background" => &mut self.background,
                other => return Err(CliError::Config(format!("unknown palette key `{other}`"))),
            };
            *slot = color.to_string();
        }
        Ok(self)
    }

    fn role(&self, role: Role) -> &str {
        match role {
            Role::Donor => &self.donor,
            Role::Recipient => &self.recipient,
            Role::Transconjugant => &self.transconjugant,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RenderOptions {
    pub palette: Palette,
    pub vectors: bool,
    pub bins: usize,
    pub every: usize,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            palette: Palette::default(),
            vectors: false,
            bins: DEFAULT_BINS,
            every: 1,
        }
    }
}

fn poles(c: &CellRecord) -> (Vec2, Vec2) {
    let d = Vec2::from_angle(c.angle) * c.half_length;
    (c.center - d, c.center + d)
}

fn nearest_poles(a: &CellRecord, b: &CellRecord) -> (Vec2, Vec2) {
    let (a0, a1) = poles(a);
    let (b0, b1) = poles(b);
    let mut best = (a0, b0);
    for (p, q) in [(a0, b1), (a1, b0), (a1, b1)] {
        if p.distance(q) < best.0.distance(best.1) {
            best = (p, q);
        }
    }
    best
}

/// Green shade for a readout in `[0, 1]` of the stream maximum.
fn readout_color(level: f64) -> String {
    let g = (60.0 + 195.0 * level.clamp(0.0, 1.0)).round() as u8;
    format!("#00{g:02x}00")
}

/// One frame. `readout_max` scales the readout shading; pass zero to use
/// plain role colors.
pub fn frame_svg(header: &SnapshotHeader, record: &SnapshotRecord, options: &RenderOptions, readout_max: f64) -> String {
    let b = header.geometry.bounds;
    let (w, h) = (b.width(), b.height());
    let scale = (1200.0 / w.max(h)).min(4.0);
    let p = &options.palette;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="{} {} {} {}">"#,
        w * scale,
        h * scale,
        b.min.x,
        b.min.y,
        w,
        h
    );
    let _ = writeln!(s, r#"<rect x="{}" y="{}" width="{w}" height="{h}" fill="{}"/>"#, b.min.x, b.min.y, p.background);
    // flip so that y grows upward as in the simulation
    let _ = writeln!(s, r#"<g transform="matrix(1 0 0 -1 0 {})">"#, b.min.y + b.max.y);
    for wall in header.geometry.walls.iter().chain(&header.geometry.obstacles) {
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{}" stroke-width="1"/>"#,
            wall.a.x, wall.a.y, wall.b.x, wall.b.y, p.wall
        );
    }
    let shaded = readout_max > 0.0 && header.program != "none";
    for c in &record.cells {
        let (a, z) = poles(c);
        let color = if shaded && c.role != Role::Recipient {
            readout_color(c.program_readout / readout_max)
        } else {
            p.role(c.role).to_string()
        };
        let _ = writeln!(
            s,
            r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="{color}" stroke-width="{:.3}" stroke-linecap="round"/>"#,
            a.x,
            a.y,
            z.x,
            z.y,
            2.0 * c.radius
        );
    }
    for spring in &record.springs {
        let find = |id| record.cells.iter().find(|c| c.id == id);
        if let (Some(g), Some(r)) = (find(spring.giver), find(spring.receiver)) {
            let (a, z) = nearest_poles(g, r);
            let _ = writeln!(
                s,
                r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="{}" stroke-width="1"/>"#,
                a.x, a.y, z.x, z.y, p.pilus
            );
        }
    }
    if options.vectors {
        if let Ok(grid) = field_bins(&growth_extent(header), options.bins) {
            let field = metrics::vector_field(record, &grid);
            let vmax = field.iter().flatten().map(|v| v.length()).fold(0.0, f64::max);
            if vmax > 0.0 {
                let k = 0.8 * grid.bin_size / vmax;
                for (i, v) in field.iter().enumerate() {
                    let Some(v) = v else { continue };
                    let c = grid.bin_center(i % grid.nx, i / grid.nx);
                    let tip = c + *v * k;
                    let _ = writeln!(
                        s,
                        r##"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="#4060ff" stroke-width="1"/><circle cx="{:.3}" cy="{:.3}" r="1" fill="#4060ff"/>"##,
                        c.x, c.y, tip.x, tip.y, tip.x, tip.y
                    );
                }
            }
        }
    }
    s.push_str("</g>\n");
    let _ = writeln!(
        s,
        r##"<text x="{}" y="{}" font-family="sans-serif" font-size="{:.1}" fill="#ffffff">{} min</text>"##,
        b.min.x + 0.01 * w,
        b.min.y + 0.04 * h,
        0.03 * h,
        (record.minutes * 10.0).round() / 10.0
    );
    s.push_str("</svg>\n");
    s
}

/// Render every `options.every`-th record of `file` into `out`.
pub fn render_file(file: &Path, out: &Path, options: &RenderOptions) -> Result<Vec<PathBuf>, CliError> {
    let stream = read_file(file)?;
    fs::create_dir_all(out).map_err(CliError::io(out))?;
    let readout_max = stream
        .records
        .iter()
        .flat_map(|r| r.cells.iter().map(|c| c.program_readout))
        .fold(0.0, f64::max);
    let mut written = Vec::new();
    for record in stream.records.iter().step_by(options.every.max(1)) {
        let path = out.join(format!("frame_{:08}.svg", record.iteration));
        fs::write(&path, frame_svg(&stream.header, record, options, readout_max)).map_err(CliError::io(&path))?;
        written.push(path);
    }
    Ok(written)
}
