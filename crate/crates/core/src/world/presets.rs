//! Built-in scenarios, one per published experiment plus the bare layouts.
//!
//! Lattice scale is five lattice squares per micrometre, so the default
//! cell (width 5, length 15) is 1 x 3 um.

use std::f64::consts::FRAC_PI_2;

use super::config::{uniform_seed, ScenarioConfig};
use super::geometry::{ChannelSpec, ColumnsSpec, CrossSpec, GeometrySpec, PlateSpec, TrapsSpec, ZigzagSpec};
use super::scenario::{Arrangement, CircuitSpec, Intervention, InterventionKind, Pose, StrainSeed};
use crate::cells::Role;
use crate::circuit::OscillatorParams;
use crate::physics::{Rect, Vec2};

pub const LAYOUTS: [&str; 6] = ["straight_channel", "cross_channel", "columns_channel", "zigzag_channel", "side_traps", "open_plate"];

pub const EXPERIMENTS: [&str; 15] = [
    "fig2bc_conjugation",
    "fig2_channel_test1",
    "fig2_channel_test2",
    "fig2_channel_test3",
    "fig3_oscillator_cross",
    "fig4a",
    "fig4b",
    "fig4c",
    "fig4d",
    "fig4e",
    "fig5_unmixed_1x3",
    "fig5_mixed_1x3",
    "fig5_unmixed_1x2",
    "fig5_mixed_1x2",
    "performance",
];

/// Every preset name, layouts first.
pub fn names() -> Vec<&'static str> {
    LAYOUTS.iter().chain(EXPERIMENTS.iter()).copied().collect()
}

pub fn preset(name: &str) -> Option<ScenarioConfig> {
    if let Some(geometry) = GeometrySpec::preset(name) {
        return Some(layout(name, geometry));
    }
    Some(match name {
        "fig2bc_conjugation" => fig2bc(),
        "fig2_channel_test1" => channel_test(name, Arrangement::CenterWeighted),
        "fig2_channel_test2" => channel_test(name, Arrangement::Centered),
        "fig2_channel_test3" => channel_test(name, Arrangement::Uniform),
        "fig3_oscillator_cross" => fig3(),
        "fig4a" => fig4_pipe(name, pipe_geometry(PipeKind::Straight)),
        "fig4b" => fig4_pipe(name, pipe_geometry(PipeKind::Columns)),
        "fig4c" => fig4_pipe(name, pipe_geometry(PipeKind::Zigzag)),
        "fig4d" => fig4_traps(name, false),
        "fig4e" => fig4_traps(name, true),
        "fig5_unmixed_1x3" => fig5(name, 15.0, false),
        "fig5_mixed_1x3" => fig5(name, 15.0, true),
        "fig5_unmixed_1x2" => fig5(name, 10.0, false),
        "fig5_mixed_1x2" => fig5(name, 10.0, true),
        "performance" => performance(),
        _ => return None,
    })
}

fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Rect {
    Rect::new(x0, y0, x1, y1)
}

/// A bare layout with a few donors and recipients spread over it.
fn layout(name: &str, geometry: GeometrySpec) -> ScenarioConfig {
    ScenarioConfig {
        name: name.into(),
        duration_min: 300.0,
        number_donors: 4,
        number_recipients: 8,
        geometry,
        seeds: vec![uniform_seed(Role::Donor, 0), uniform_seed(Role::Recipient, 1)],
        ..Default::default()
    }
}

/// Neighboring donor and recipient microcolonies on an open surface.
fn fig2bc() -> ScenarioConfig {
    let gap = 30.0;
    ScenarioConfig {
        name: "fig2bc_conjugation".into(),
        duration_min: 240.0,
        width: 5.0,
        length: 15.0,
        growth_speed: 30,
        p_d: 0.001,
        p_t1: 0.02,
        p_t2: 0.05,
        c_time: 450,
        number_donors: 2,
        number_recipients: 4,
        geometry: GeometrySpec::OpenPlate(PlateSpec {
            width: 1200.0,
            height: 1200.0,
        }),
        seeds: vec![
            StrainSeed::new(Role::Donor, 0, 2, rect(-gap - 20.0, -20.0, -gap, 20.0), Arrangement::Centered),
            StrainSeed::new(Role::Recipient, 1, 4, rect(gap, -30.0, gap + 30.0, 30.0), Arrangement::Centered),
        ],
        ..Default::default()
    }
}

/// The 30 x 50 um channel packed from different starting distributions.
fn channel_test(name: &str, arrangement: Arrangement) -> ScenarioConfig {
    let channel = ChannelSpec::default();
    let region = match arrangement {
        Arrangement::Centered => {
            let c = Vec2::new(0.5 * channel.length, 0.5 * channel.width);
            rect(c.x - 30.0, c.y - 30.0, c.x + 30.0, c.y + 30.0)
        }
        _ => rect(0.0, 0.0, channel.length, channel.width),
    };
    ScenarioConfig {
        name: name.into(),
        duration_min: 400.0,
        width: 5.0,
        length: 24.0,
        growth_speed: 30,
        number_donors: 0,
        number_recipients: 10,
        geometry: GeometrySpec::StraightChannel(channel),
        seeds: vec![StrainSeed::new(Role::Recipient, 0, 10, region, arrangement)],
        ..Default::default()
    }
}

/// Donors running the oscillator in the left arm of a cross, recipients in
/// the right arm.
fn fig3() -> ScenarioConfig {
    let cross = CrossSpec::default();
    let h = 0.5 * cross.arm_width;
    let far = h + cross.arm_length;
    let mut donors = StrainSeed::new(Role::Donor, 0, 3, rect(-far + 20.0, -h, -far + 70.0, h), Arrangement::Uniform);
    donors.angle = Some(0.0);
    let mut recipients = StrainSeed::new(Role::Recipient, 1, 3, rect(far - 70.0, -h, far - 20.0, h), Arrangement::Uniform);
    recipients.angle = Some(0.0);
    ScenarioConfig {
        name: "fig3_oscillator_cross".into(),
        duration_min: 1000.0,
        snapshot_every: 75,
        p_d: 0.001,
        p_t1: 0.02,
        p_t2: 0.05,
        c_time: 450,
        network_steps: 18,
        number_donors: 3,
        number_recipients: 3,
        circuit: CircuitSpec::Oscillator(OscillatorParams::default()),
        geometry: GeometrySpec::CrossChannel(cross),
        seeds: vec![donors, recipients],
        ..Default::default()
    }
}

enum PipeKind {
    Straight,
    Columns,
    Zigzag,
}

const PIPE_LENGTH: f64 = 500.0;
const PIPE_WIDTH: f64 = 90.0;

fn pipe_geometry(kind: PipeKind) -> GeometrySpec {
    let base = ChannelSpec {
        length: PIPE_LENGTH,
        width: PIPE_WIDTH,
        pad: 60.0,
    };
    match kind {
        PipeKind::Straight => GeometrySpec::StraightChannel(base),
        PipeKind::Columns => GeometrySpec::ColumnsChannel(ColumnsSpec {
            length: base.length,
            width: base.width,
            pad: base.pad,
            columns: 4,
            column_size: 20.0,
        }),
        PipeKind::Zigzag => GeometrySpec::ZigzagChannel(ZigzagSpec {
            length: base.length,
            width: base.width,
            pad: base.pad,
            pitch: 60.0,
            depth: 15.0,
        }),
    }
}

/// Three strains packed in lanes along the pipe: strain 0 along the bottom
/// wall, a thinner band of strain 1 down the middle, strain 2 along the top.
fn fig4_pipe(name: &str, geometry: GeometrySpec) -> ScenarioConfig {
    let base = ScenarioConfig::default();
    let rows = (PIPE_WIDTH / base.width).floor() as usize;
    let band = rows / 4;
    let side = (rows - band) / 2;
    let pitch = base.length + 1.0;
    let mut seeds: Vec<StrainSeed> = (0..3)
        .map(|k| {
            let mut s = StrainSeed::new(Role::Recipient, k, 0, rect(0.0, 0.0, PIPE_LENGTH, PIPE_WIDTH), Arrangement::Explicit);
            s.count = None;
            s.region = None;
            s
        })
        .collect();
    for row in 0..rows {
        let strain = if row < side {
            0
        } else if row < side + band {
            1
        } else {
            2
        };
        let y = (row as f64 + 0.5) * PIPE_WIDTH / rows as f64;
        let shift = if row % 2 == 0 { 0.0 } else { 0.5 * pitch };
        let mut x = 0.5 * pitch + shift;
        while x + 0.5 * pitch <= PIPE_LENGTH {
            seeds[strain].poses.push(Pose {
                center: Vec2::new(x, y),
                angle: 0.0,
            });
            x += pitch;
        }
    }
    ScenarioConfig {
        name: name.into(),
        duration_min: 400.0,
        number_donors: 0,
        number_recipients: 0,
        track_strain_contacts: true,
        geometry,
        seeds,
        ..Default::default()
    }
}

/// Two traps under a flow channel, three strains per trap.
fn fig4_traps(name: &str, turbulent: bool) -> ScenarioConfig {
    let spec = TrapsSpec {
        traps: 2,
        trap_size: 150.0,
        spacing: 50.0,
        channel_width: 40.0,
        pad: 60.0,
        flow: if turbulent { 0.1 } else { 0.02 },
        vortex: if turbulent { -0.002 } else { 0.0 },
    };
    let mut seeds = Vec::new();
    for t in 0..2 {
        let left = spec.spacing + t as f64 * (spec.trap_size + spec.spacing);
        for k in 0..3 {
            let x = left + spec.trap_size * (k as f64 + 0.5) / 3.0;
            let mut s = StrainSeed::new(Role::Recipient, 3 * t + k, 2, rect(x - 15.0, 10.0, x + 15.0, 40.0), Arrangement::Uniform);
            s.angle = Some(FRAC_PI_2);
            seeds.push(s);
        }
    }
    ScenarioConfig {
        name: name.into(),
        duration_min: 400.0,
        number_donors: 0,
        number_recipients: 2,
        track_strain_contacts: true,
        geometry: GeometrySpec::SideTraps(spec),
        seeds,
        ..Default::default()
    }
}

/// Donors and recipients (D/R = 1/2) in a single trap; transconjugants do
/// not pass the plasmid on.
fn fig5(name: &str, length: f64, mixed: bool) -> ScenarioConfig {
    let spec = TrapsSpec {
        traps: 1,
        trap_size: 150.0,
        spacing: 50.0,
        channel_width: 40.0,
        pad: 60.0,
        flow: 0.02,
        vortex: 0.0,
    };
    let trap = rect(spec.spacing, 0.0, spec.spacing + spec.trap_size, spec.trap_size);
    ScenarioConfig {
        name: name.into(),
        duration_min: 560.0,
        length,
        p_d: 0.001,
        p_t1: 0.02,
        p_t2: 0.05,
        c_time: 450,
        transconjugants_conjugate: false,
        number_donors: 4,
        number_recipients: 8,
        geometry: GeometrySpec::SideTraps(spec),
        seeds: vec![
            StrainSeed::new(Role::Donor, 0, 4, trap, Arrangement::Uniform),
            StrainSeed::new(Role::Recipient, 1, 8, trap, Arrangement::Uniform),
        ],
        interventions: if mixed {
            vec![Intervention {
                kind: InterventionKind::ManualMix,
                at_minutes: 420.0,
            }]
        } else {
            Vec::new()
        },
        ..Default::default()
    }
}

/// About a thousand cells at steady state in a washed-out channel.
fn performance() -> ScenarioConfig {
    let channel = ChannelSpec {
        length: 700.0,
        width: 200.0,
        pad: 60.0,
    };
    ScenarioConfig {
        name: "performance".into(),
        duration_min: 10_000.0 / 15.0,
        snapshot_every: 1000,
        number_donors: 100,
        number_recipients: 900,
        geometry: GeometrySpec::StraightChannel(channel),
        seeds: vec![uniform_seed(Role::Donor, 0), uniform_seed(Role::Recipient, 1)],
        ..Default::default()
    }
}
