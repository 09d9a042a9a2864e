use std::f64::consts::PI;

use pilus_core::cells::{try_divide, try_elongate, Cell, GrowthParams, IdSource, Role};
use pilus_core::circuit::{Oscillator, OscillatorParams, Program, ProgramClock, ProgramState};
use pilus_core::metrics::{conjugation_frequency, density, isolation_index, ordering};
use pilus_core::physics::{capsule_capsule, detect_contacts, solve_step, surface_distance, CapsuleBody, Rect, SolverParams, Vec2};
use pilus_core::snapshot::{write_line, CellRecord, SnapshotRecord, SpringRecord};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn body() -> impl Strategy<Value = CapsuleBody> {
    (-30.0..30.0f64, -30.0..30.0f64, -PI..PI, 0.0..10.0f64, 0.5..3.0f64)
        .prop_map(|(x, y, a, h, r)| CapsuleBody::new(Vec2::new(x, y), a, h, r, 1.0, 0.0))
}

/// Two bodies placed so that they overlap.
fn overlapping_pair() -> impl Strategy<Value = (CapsuleBody, CapsuleBody)> {
    (body(), -PI..PI, -1.0..1.0f64, 0.05..0.9f64).prop_map(|(a, angle, along, squeeze)| {
        let mut b = a.clone();
        b.angle = angle;
        let axis = a.axis();
        b.center = a.center + axis * (along * a.half_length) + axis.perp() * ((a.radius + b.radius) * (1.0 - squeeze));
        (a, b)
    })
}

fn max_depth(bodies: &[CapsuleBody]) -> f64 {
    detect_contacts(bodies, &[]).iter().map(|c| c.penetration_depth).fold(0.0, f64::max)
}

fn frictionless(mut b: CapsuleBody) -> CapsuleBody {
    b.friction = 0.0;
    b
}

fn record(cells: Vec<(f64, f64, f64, u8)>) -> SnapshotRecord {
    SnapshotRecord {
        iteration: 10,
        minutes: 10.0 / 15.0,
        cells: cells
            .into_iter()
            .enumerate()
            .map(|(i, (x, y, angle, role))| CellRecord {
                id: i as u64,
                strain: role as u32,
                center: Vec2::new(x, y),
                angle,
                half_length: 7.5,
                radius: 2.5,
                velocity: Vec2::new(0.1 * x, -0.05 * y),
                role: Role::try_from(role).unwrap(),
                conjugating: i % 3 == 0,
                program_readout: 0.25 * i as f64,
                program: vec![x.abs(), y.abs()],
            })
            .collect(),
        springs: vec![SpringRecord {
            giver: 0,
            receiver: 1,
            remaining: 17,
        }],
    }
}

fn population() -> impl Strategy<Value = Vec<(f64, f64, f64, u8)>> {
    prop::collection::vec((0.0..200.0f64, 0.0..60.0f64, -PI..PI, 0u8..3), 1..60)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn contacts_are_symmetric_with_unit_normals(a in body(), b in body()) {
        let ab = capsule_capsule(0, &a, 1, &b);
        let ba = capsule_capsule(1, &b, 0, &a);
        prop_assert_eq!(ab.is_some(), ba.is_some());
        if let (Some(x), Some(y)) = (ab, ba) {
            prop_assert!(x.penetration_depth >= 0.0);
            prop_assert!((x.normal.length() - 1.0).abs() < 1e-9);
            prop_assert!((x.penetration_depth - y.penetration_depth).abs() < 1e-9);
            prop_assert!((x.penetration_depth + surface_distance(&a, &b)).abs() < 1e-9);
        } else {
            prop_assert!(surface_distance(&a, &b) >= -1e-12);
        }
    }

    #[test]
    fn resolving_a_pair_conserves_momentum((a, b) in overlapping_pair(), va in (-1.0..1.0f64, -1.0..1.0f64), vb in (-1.0..1.0f64, -1.0..1.0f64)) {
        let mut bodies = vec![frictionless(a), frictionless(b)];
        bodies[0].linear_velocity = Vec2::new(va.0, va.1);
        bodies[1].linear_velocity = Vec2::new(vb.0, vb.1);
        let momentum = |bs: &[CapsuleBody]| bs.iter().fold(Vec2::ZERO, |p, b| p + b.linear_velocity * b.mass);
        let before = momentum(&bodies);
        let params = SolverParams { velocity_damping: 1.0, ..Default::default() };
        solve_step(&mut bodies, &[], &[], &params).unwrap();
        let after = momentum(&bodies);
        let scale = bodies.iter().map(|b| b.mass).sum::<f64>() * (1.0 + before.length());
        prop_assert!((after - before).length() <= 1e-6 * scale, "{:?} -> {:?}", before, after);
    }

    #[test]
    fn a_static_pair_never_overlaps_more((a, b) in overlapping_pair()) {
        let mut bodies = vec![a, b];
        let params = SolverParams::default();
        let mut last = max_depth(&bodies);
        for _ in 0..20 {
            solve_step(&mut bodies, &[], &[], &params).unwrap();
            let d = max_depth(&bodies);
            prop_assert!(d <= last + 1e-9, "{} -> {}", last, d);
            last = d;
        }
    }

    #[test]
    fn solving_is_deterministic(bodies in prop::collection::vec(body(), 2..30)) {
        let params = SolverParams::default();
        let mut a = bodies.clone();
        let mut b = bodies;
        for _ in 0..3 {
            solve_step(&mut a, &[], &[], &params).unwrap();
            solve_step(&mut b, &[], &[], &params).unwrap();
        }
        prop_assert_eq!(a, b);
    }

    #[test]
    fn cells_never_outgrow_division_length(pressures in prop::collection::vec(0.0..2.0f64, 1..2000)) {
        let g = GrowthParams::default();
        let mut cell = Cell::new(1, 0, Role::Recipient, g.new_body(Vec2::ZERO, 0.0), ProgramState::empty());
        for p in pressures {
            try_elongate(&mut cell, &g, p);
            prop_assert!(cell.length() <= 2.0 * g.length + 2.0 * g.increment() + 1e-9);
        }
    }

    #[test]
    fn held_cells_divide_later_than_their_twin(k in 1u64..400) {
        let g = GrowthParams::default();
        let fresh = || Cell::new(1, 0, Role::Recipient, g.new_body(Vec2::ZERO, 0.0), ProgramState::empty());
        let divides_at = |hold: u64| {
            let mut c = fresh();
            let mut ids = IdSource::starting_at(2);
            for t in 0..10 * g.gt as u64 {
                if try_divide(&c, &mut ids, &g, [0.0, 0.0]).is_some() {
                    return t;
                }
                let p = if t < hold { g.max_overlap + 0.5 } else { 0.0 };
                try_elongate(&mut c, &g, p);
            }
            u64::MAX
        };
        prop_assert!(divides_at(k) >= divides_at(0) + k);
    }

    #[test]
    fn division_conserves_length(angle in -PI..PI, x in -50.0..50.0f64, y in -50.0..50.0f64, molecules in prop::collection::vec(0.0..5.0f64, 0..3)) {
        let g = GrowthParams::default();
        let mut body = g.new_body(Vec2::new(x, y), angle);
        body.set_half_length(g.max_half_length());
        let mother = Cell::new(7, 2, Role::Donor, body, ProgramState::new(molecules));
        let mut ids = IdSource::starting_at(8);
        let (a, b) = try_divide(&mother, &mut ids, &g, [0.0, 0.0]).unwrap();
        prop_assert!((a.length() + b.length() - mother.length()).abs() < 1e-9);
        let outer = mother.body.aabb();
        for d in [&a, &b] {
            let r = d.body.aabb();
            prop_assert!(r.min.x >= outer.min.x - 1e-9 && r.min.y >= outer.min.y - 1e-9);
            prop_assert!(r.max.x <= outer.max.x + 1e-9 && r.max.y <= outer.max.y + 1e-9);
            prop_assert_eq!(&d.program, &mother.program);
            prop_assert_eq!(d.role, mother.role);
            prop_assert_eq!(d.plasmid, mother.plasmid);
            prop_assert!(d.check_invariants().is_ok());
        }
    }

    #[test]
    fn clock_meets_network_steps_every_gt(steps in 1u32..2000, gt in 1u32..2000) {
        let clock = ProgramClock::new(steps, gt);
        let mut state = ProgramState::empty();
        let mut due = 0;
        for _ in 0..gt {
            due += clock.tick(&mut state);
        }
        prop_assert_eq!(due, steps as u64);
        prop_assert_eq!(state.carry, 0);
    }

    #[test]
    fn ordering_is_bounded(cells in population()) {
        let s = record(cells);
        let v = ordering(&s, Vec2::X).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
        prop_assert_eq!(v.to_bits(), ordering(&s, Vec2::X).unwrap().to_bits());
    }

    #[test]
    fn aligned_populations_order_perfectly(cells in population(), flips in prop::collection::vec(0u8..2, 60)) {
        let mut s = record(cells);
        for (c, f) in s.cells.iter_mut().zip(flips) {
            c.angle = f as f64 * PI;
        }
        prop_assert!((ordering(&s, Vec2::X).unwrap() - 1.0).abs() < 1e-12);
        s.cells[0].angle = 0.3;
        prop_assert!(ordering(&s, Vec2::X).unwrap() < 1.0);
    }

    #[test]
    fn metric_values_are_pure_and_bounded(cells in population()) {
        let s = record(cells);
        let region = Rect { min: Vec2::new(0.0, 0.0), max: Vec2::new(200.0, 60.0) };
        let d = density(&s, &region);
        prop_assert!(d >= 0.0);
        prop_assert_eq!(d.to_bits(), density(&s, &region).to_bits());
        if let Ok(y) = conjugation_frequency(&s) {
            prop_assert!((0.0..=1.0).contains(&y));
        }
        if let Ok(i) = isolation_index(&s, 1.0, 5.0) {
            prop_assert!((0.0..=1.0).contains(&i));
        }
    }

    #[test]
    fn snapshot_records_round_trip(cells in population()) {
        let s = record(cells);
        let mut line = Vec::new();
        write_line(&mut line, &s).unwrap();
        let back: SnapshotRecord = serde_json::from_slice(&line).unwrap();
        prop_assert_eq!(back, s);
    }
}

fn crowd() -> Vec<CapsuleBody> {
    let mut bodies = Vec::new();
    for row in 0..6 {
        for col in 0..6 {
            let jiggle = ((row * 7 + col * 3) % 5) as f64 * 0.3;
            bodies.push(CapsuleBody::new(
                Vec2::new(col as f64 * 13.0 + jiggle, row as f64 * 3.5),
                0.1 * ((row + col) % 3) as f64,
                7.5,
                2.5,
                1.0,
                0.5,
            ));
        }
    }
    bodies
}

#[test]
fn more_solver_iterations_leave_less_overlap() {
    let residual = |iterations: u32| {
        let mut bodies = crowd();
        let params = SolverParams {
            solver_iterations: iterations,
            ..Default::default()
        };
        for _ in 0..5 {
            solve_step(&mut bodies, &[], &[], &params).unwrap();
        }
        detect_contacts(&bodies, &[]).iter().map(|c| c.penetration_depth).sum::<f64>()
    };
    let start: f64 = detect_contacts(&crowd(), &[]).iter().map(|c| c.penetration_depth).sum();
    let sums: Vec<f64> = [1, 2, 5, 10, 20, 40].iter().map(|&k| residual(k)).collect();
    assert!(sums[0] < start);
    assert!(sums.windows(2).all(|p| p[1] <= p[0] + 1e-9), "{sums:?}");
}

#[test]
fn isolated_oscillator_keeps_oscillating() {
    let osc = Oscillator::new(OscillatorParams::default());
    let clock = ProgramClock::new(osc.params.network_steps, 450);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut state = osc.initial_state();
    let mut xs = Vec::new();
    // 1000 simulated minutes at 15 iterations per minute.
    for _ in 0..15_000 {
        for _ in 0..clock.tick(&mut state) {
            osc.step(&mut state, &mut rng).unwrap();
        }
        xs.push(osc.reporter(&state));
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let crossings = xs.windows(2).filter(|p| (p[0] - mean) * (p[1] - mean) < 0.0).count();
    assert!(crossings >= 4, "{crossings} mean crossings");
}
