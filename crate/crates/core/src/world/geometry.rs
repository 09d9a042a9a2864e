//! Static world layouts: channel walls, obstacles, washout zones and flow.

use serde::{Deserialize, Serialize};

use crate::physics::{FlowField, Rect, Vec2, Wall};

/// A fully built layout.
///
/// Walls are one-sided: free space lies to the left of `a -> b`, so channel
/// outlines run counter-clockwise around their interior and solid obstacles
/// run clockwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldGeometry {
    pub bounds: Rect,
    pub walls: Vec<Wall>,
    pub obstacles: Vec<Wall>,
    pub washout_regions: Vec<Rect>,
    pub flow_fields: Vec<FlowField>,
    /// Where cells live; manual mixing scatters them over these rectangles.
    pub growth_regions: Vec<Rect>,
    /// Longitudinal axis for ordering and velocity profiles.
    pub axis: Vec2,
    /// Default area for density monitoring.
    pub monitor_region: Rect,
    /// Rectangles of interest for vector fields (trap interiors).
    #[serde(default)]
    pub traps: Vec<Rect>,
}

impl WorldGeometry {
    /// Walls and obstacles in one list, the order the solver indexes them.
    pub fn all_walls(&self) -> Vec<Wall> {
        self.walls.iter().chain(self.obstacles.iter()).copied().collect()
    }

    pub fn in_washout(&self, aabb: &Rect) -> bool {
        self.washout_regions.iter().any(|r| r.contains_rect(aabb))
    }

    pub fn growth_area(&self) -> f64 {
        self.growth_regions.iter().map(Rect::area).sum()
    }

    /// Checks that every region is non-degenerate and inside the bounds.
    pub fn validate(&self) -> Result<(), String> {
        if !(self.bounds.width() > 0.0 && self.bounds.height() > 0.0) {
            return Err("geometry bounds must have positive area".into());
        }
        for w in self.walls.iter().chain(&self.obstacles) {
            if !w.a.is_finite() || !w.b.is_finite() || w.a.distance(w.b) <= 0.0 {
                return Err(format!("degenerate wall {:?} -> {:?}", w.a, w.b));
            }
        }
        if self.growth_regions.is_empty() {
            return Err("geometry needs at least one growth region".into());
        }
        for r in self.growth_regions.iter().chain(&self.washout_regions) {
            if r.area() <= 0.0 {
                return Err("regions must have positive area".into());
            }
            if !self.bounds.inflate(1e-9).contains_rect(r) {
                return Err(format!("region {:?}..{:?} lies outside the bounds", r.min, r.max));
            }
        }
        if (self.axis.length() - 1.0).abs() > 1e-9 {
            return Err("axis must be a unit vector".into());
        }
        Ok(())
    }
}

/// Walls along consecutive points of a polyline.
fn polyline(points: &[Vec2]) -> Vec<Wall> {
    points.windows(2).map(|w| Wall::new(w[0], w[1])).collect()
}

/// A solid square obstacle centered on `c`, wound clockwise.
fn square_obstacle(c: Vec2, size: f64) -> Vec<Wall> {
    let h = 0.5 * size;
    let pts = [
        Vec2::new(c.x - h, c.y - h),
        Vec2::new(c.x - h, c.y + h),
        Vec2::new(c.x + h, c.y + h),
        Vec2::new(c.x + h, c.y - h),
        Vec2::new(c.x - h, c.y - h),
    ];
    polyline(&pts)
}

fn default_pad() -> f64 {
    60.0
}

/// Parametric description of a layout, as written in scenario files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeometrySpec {
    StraightChannel(ChannelSpec),
    CrossChannel(CrossSpec),
    ColumnsChannel(ColumnsSpec),
    ZigzagChannel(ZigzagSpec),
    SideTraps(TrapsSpec),
    OpenPlate(PlateSpec),
    Custom(WorldGeometry),
}

/// A horizontal channel open at both short ends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelSpec {
    /// Open-ended extent along x.
    pub length: f64,
    /// Wall-to-wall extent along y.
    pub width: f64,
    /// Washout depth beyond each open end.
    pub pad: f64,
}

impl Default for ChannelSpec {
    fn default() -> Self {
        // 50 x 30 um at five lattice squares per um
        ChannelSpec {
            length: 250.0,
            width: 150.0,
            pad: default_pad(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CrossSpec {
    /// Extent of each arm beyond the central square.
    pub arm_length: f64,
    pub arm_width: f64,
    pub pad: f64,
}

impl Default for CrossSpec {
    fn default() -> Self {
        CrossSpec {
            arm_length: 200.0,
            arm_width: 60.0,
            pad: default_pad(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ColumnsSpec {
    pub length: f64,
    pub width: f64,
    pub pad: f64,
    pub columns: usize,
    pub column_size: f64,
}

impl Default for ColumnsSpec {
    fn default() -> Self {
        let c = ChannelSpec::default();
        ColumnsSpec {
            length: c.length,
            width: c.width,
            pad: c.pad,
            columns: 4,
            column_size: 20.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ZigzagSpec {
    pub length: f64,
    pub width: f64,
    pub pad: f64,
    /// Distance between neighboring tooth tips.
    pub pitch: f64,
    /// How far each tooth reaches into the channel.
    pub depth: f64,
}

impl ColumnsSpec {
    pub fn channel(&self) -> ChannelSpec {
        ChannelSpec {
            length: self.length,
            width: self.width,
            pad: self.pad,
        }
    }
}

impl ZigzagSpec {
    pub fn channel(&self) -> ChannelSpec {
        ChannelSpec {
            length: self.length,
            width: self.width,
            pad: self.pad,
        }
    }
}

impl Default for ZigzagSpec {
    fn default() -> Self {
        let c = ChannelSpec::default();
        ZigzagSpec {
            length: c.length,
            width: c.width,
            pad: c.pad,
            pitch: 50.0,
            depth: 15.0,
        }
    }
}

/// Square traps hanging below a horizontal flow channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrapsSpec {
    pub traps: usize,
    pub trap_size: f64,
    /// Wall thickness between neighboring traps and at the channel ends.
    pub spacing: f64,
    pub channel_width: f64,
    pub pad: f64,
    /// Acceleration of cells inside the flow channel, along +x.
    pub flow: f64,
    /// Solid-rotation acceleration per unit radius inside each trap;
    /// negative turns clockwise. Zero disables it.
    pub vortex: f64,
}

impl Default for TrapsSpec {
    fn default() -> Self {
        TrapsSpec {
            traps: 2,
            trap_size: 150.0,
            spacing: 50.0,
            channel_width: 40.0,
            pad: default_pad(),
            flow: 0.02,
            vortex: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlateSpec {
    pub width: f64,
    pub height: f64,
}

impl Default for PlateSpec {
    fn default() -> Self {
        PlateSpec {
            width: 1000.0,
            height: 1000.0,
        }
    }
}

impl GeometrySpec {
    pub fn name(&self) -> &'static str {
        match self {
            GeometrySpec::StraightChannel(_) => "straight_channel",
            GeometrySpec::CrossChannel(_) => "cross_channel",
            GeometrySpec::ColumnsChannel(_) => "columns_channel",
            GeometrySpec::ZigzagChannel(_) => "zigzag_channel",
            GeometrySpec::SideTraps(_) => "side_traps",
            GeometrySpec::OpenPlate(_) => "open_plate",
            GeometrySpec::Custom(_) => "custom",
        }
    }

    /// Default parameters for a named layout.
    pub fn preset(name: &str) -> Option<GeometrySpec> {
        Some(match name {
            "straight_channel" => GeometrySpec::StraightChannel(ChannelSpec::default()),
            "cross_channel" => GeometrySpec::CrossChannel(CrossSpec::default()),
            "columns_channel" => GeometrySpec::ColumnsChannel(ColumnsSpec::default()),
            "zigzag_channel" => GeometrySpec::ZigzagChannel(ZigzagSpec::default()),
            "side_traps" => GeometrySpec::SideTraps(TrapsSpec::default()),
            "open_plate" => GeometrySpec::OpenPlate(PlateSpec::default()),
            _ => return None,
        })
    }

    pub fn validate(&self) -> Result<(), (String, String)> {
        let positive = |field: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err((format!("geometry.{field}"), "must be positive".to_string()))
            }
        };
        let channel = |c: &ChannelSpec| {
            positive("length", c.length)?;
            positive("width", c.width)?;
            positive("pad", c.pad)
        };
        match self {
            GeometrySpec::StraightChannel(c) => channel(c),
            GeometrySpec::CrossChannel(c) => {
                positive("arm_length", c.arm_length)?;
                positive("arm_width", c.arm_width)?;
                positive("pad", c.pad)
            }
            GeometrySpec::ColumnsChannel(c) => {
                channel(&c.channel())?;
                positive("column_size", c.column_size)?;
                if c.column_size >= c.width {
                    return Err(("geometry.column_size".into(), "must be narrower than the channel".into()));
                }
                Ok(())
            }
            GeometrySpec::ZigzagChannel(c) => {
                channel(&c.channel())?;
                positive("pitch", c.pitch)?;
                positive("depth", c.depth)?;
                if 2.0 * c.depth >= c.width {
                    return Err(("geometry.depth".into(), "teeth would close the channel".into()));
                }
                Ok(())
            }
            GeometrySpec::SideTraps(t) => {
                if t.traps == 0 {
                    return Err(("geometry.traps".into(), "must be at least 1".into()));
                }
                positive("trap_size", t.trap_size)?;
                positive("spacing", t.spacing)?;
                positive("channel_width", t.channel_width)?;
                positive("pad", t.pad)?;
                if !t.flow.is_finite() || !t.vortex.is_finite() {
                    return Err(("geometry.flow".into(), "must be finite".into()));
                }
                Ok(())
            }
            GeometrySpec::OpenPlate(p) => {
                positive("width", p.width)?;
                positive("height", p.height)
            }
            GeometrySpec::Custom(g) => g.validate().map_err(|e| ("geometry".to_string(), e)),
        }
    }

    pub fn build(&self) -> WorldGeometry {
        match self {
            GeometrySpec::StraightChannel(c) => straight_channel(c),
            GeometrySpec::CrossChannel(c) => cross_channel(c),
            GeometrySpec::ColumnsChannel(c) => columns_channel(c),
            GeometrySpec::ZigzagChannel(c) => zigzag_channel(c),
            GeometrySpec::SideTraps(t) => side_traps(t),
            GeometrySpec::OpenPlate(p) => open_plate(p),
            GeometrySpec::Custom(g) => g.clone(),
        }
    }
}

/// Channel spanning `[0, length] x [0, width]`, walled along y and washed
/// out beyond both ends.
pub fn straight_channel(c: &ChannelSpec) -> WorldGeometry {
    let (l, w, pad) = (c.length, c.width, c.pad);
    let bounds = Rect::from_corners(Vec2::new(-pad, 0.0), Vec2::new(l + pad, w));
    let walls = vec![
        Wall::new(Vec2::new(-pad, 0.0), Vec2::new(l + pad, 0.0)),
        Wall::new(Vec2::new(l + pad, w), Vec2::new(-pad, w)),
    ];
    let interior = Rect::from_corners(Vec2::new(0.0, 0.0), Vec2::new(l, w));
    WorldGeometry {
        bounds,
        walls,
        obstacles: Vec::new(),
        washout_regions: vec![
            Rect::from_corners(Vec2::new(-pad, 0.0), Vec2::new(0.0, w)),
            Rect::from_corners(Vec2::new(l, 0.0), Vec2::new(l + pad, w)),
        ],
        flow_fields: Vec::new(),
        growth_regions: vec![interior],
        axis: Vec2::X,
        monitor_region: Rect::from_corners(Vec2::new(l / 3.0, 0.0), Vec2::new(2.0 * l / 3.0, w)),
        traps: Vec::new(),
    }
}

/// Four arms around a central square at the origin, every arm open at its
/// far end.
pub fn cross_channel(c: &CrossSpec) -> WorldGeometry {
    let h = 0.5 * c.arm_width;
    let reach = h + c.arm_length;
    let e = reach + c.pad;
    let v = Vec2::new;
    let corner_runs = [
        [v(h, -e), v(h, -h), v(e, -h)],
        [v(e, h), v(h, h), v(h, e)],
        [v(-h, e), v(-h, h), v(-e, h)],
        [v(-e, -h), v(-h, -h), v(-h, -e)],
    ];
    let walls = corner_runs.iter().flat_map(|run| polyline(run)).collect();
    let washout_regions = vec![
        Rect::from_corners(v(reach, -h), v(e, h)),
        Rect::from_corners(v(-e, -h), v(-reach, h)),
        Rect::from_corners(v(-h, reach), v(h, e)),
        Rect::from_corners(v(-h, -e), v(h, -reach)),
    ];
    let growth_regions = vec![Rect::from_corners(v(-reach, -h), v(reach, h)), Rect::from_corners(v(-h, -reach), v(h, -h)), Rect::from_corners(v(-h, h), v(h, reach))];
    WorldGeometry {
        bounds: Rect::from_corners(v(-e, -e), v(e, e)),
        walls,
        obstacles: Vec::new(),
        washout_regions,
        flow_fields: Vec::new(),
        growth_regions,
        axis: Vec2::X,
        monitor_region: Rect::from_corners(v(-h, -h), v(h, h)),
        traps: Vec::new(),
    }
}

/// Straight channel with a row of square columns along its centerline.
pub fn columns_channel(c: &ColumnsSpec) -> WorldGeometry {
    let mut g = straight_channel(&c.channel());
    let (l, w) = (c.length, c.width);
    for k in 0..c.columns {
        let x = l * (k as f64 + 1.0) / (c.columns as f64 + 1.0);
        g.obstacles.extend(square_obstacle(Vec2::new(x, 0.5 * w), c.column_size));
    }
    g
}

/// Straight channel whose two walls carry facing triangular teeth, so the
/// pipe narrows and widens periodically.
pub fn zigzag_channel(c: &ZigzagSpec) -> WorldGeometry {
    let mut g = straight_channel(&c.channel());
    let (l, w, pad) = (c.length, c.width, c.pad);
    let mut bottom = vec![Vec2::new(-pad, 0.0), Vec2::new(0.0, 0.0)];
    let mut x = 0.0;
    while x + c.pitch <= l + 1e-9 {
        bottom.push(Vec2::new(x + 0.5 * c.pitch, c.depth));
        bottom.push(Vec2::new(x + c.pitch, 0.0));
        x += c.pitch;
    }
    if x < l {
        bottom.push(Vec2::new(l, 0.0));
    }
    bottom.push(Vec2::new(l + pad, 0.0));
    let top: Vec<Vec2> = bottom.iter().rev().map(|p| Vec2::new(p.x, w - p.y)).collect();
    g.walls = polyline(&bottom);
    g.walls.extend(polyline(&top));
    g
}

/// A flow channel along the top with `traps` square chambers opening into
/// it from below. Trap `k` spans `[x_k, x_k + size] x [0, size]`.
pub fn side_traps(t: &TrapsSpec) -> WorldGeometry {
    let s = t.trap_size;
    let top = s + t.channel_width;
    let length = t.traps as f64 * (s + t.spacing) + t.spacing;
    let (x0, x1) = (-t.pad, length + t.pad);
    let v = Vec2::new;
    let mut bottom = vec![v(x0, s), v(t.spacing, s)];
    let mut traps = Vec::new();
    for k in 0..t.traps {
        let left = t.spacing + k as f64 * (s + t.spacing);
        bottom.extend([v(left, 0.0), v(left + s, 0.0), v(left + s, s)]);
        let next = left + s + t.spacing;
        bottom.push(v(next, s));
        traps.push(Rect::from_corners(v(left, 0.0), v(left + s, s)));
    }
    bottom.pop();
    bottom.push(v(x1, s));
    let mut walls = polyline(&bottom);
    walls.push(Wall::new(v(x1, top), v(x0, top)));
    let channel = Rect::from_corners(v(x0, s), v(x1, top));
    let mut flow_fields = Vec::new();
    if t.flow != 0.0 {
        flow_fields.push(FlowField::Uniform {
            region: channel,
            acceleration: v(t.flow, 0.0),
        });
    }
    if t.vortex != 0.0 {
        for r in &traps {
            flow_fields.push(FlowField::Vortex {
                region: *r,
                center: r.center(),
                strength: t.vortex,
            });
        }
    }
    WorldGeometry {
        bounds: Rect::from_corners(v(x0, 0.0), v(x1, top)),
        walls,
        obstacles: Vec::new(),
        washout_regions: vec![Rect::from_corners(v(x0, s), v(0.0, top)), Rect::from_corners(v(length, s), v(x1, top))],
        flow_fields,
        growth_regions: traps.clone(),
        axis: Vec2::Y,
        monitor_region: traps[0],
        traps,
    }
}

/// Unbounded-looking surface: no walls, nothing washed out.
pub fn open_plate(p: &PlateSpec) -> WorldGeometry {
    let bounds = Rect::from_corners(Vec2::new(-0.5 * p.width, -0.5 * p.height), Vec2::new(0.5 * p.width, 0.5 * p.height));
    WorldGeometry {
        bounds,
        walls: Vec::new(),
        obstacles: Vec::new(),
        washout_regions: Vec::new(),
        flow_fields: Vec::new(),
        growth_regions: vec![bounds],
        axis: Vec2::X,
        monitor_region: Rect::from_corners(bounds.min * 0.2, bounds.max * 0.2),
        traps: Vec::new(),
    }
}
