use std::collections::{HashMap, HashSet};

use pilus_core::cells::Role;
use pilus_core::physics::{Rect, Vec2};
use pilus_core::metrics::{conjugation_frequency, isolation_index};
use pilus_core::snapshot::{read_stream, write_line, SnapshotRecord};
use pilus_core::world::config::ScenarioConfig;
use pilus_core::world::run::{run, run_world, MemorySink, NullSink, StopReason};
use pilus_core::world::{presets, Arrangement, Event, Phase, Scenario, StrainSeed, World};

fn config(name: &str) -> ScenarioConfig {
    presets::preset(name).unwrap()
}

fn short(name: &str, minutes: f64) -> Scenario {
    let mut cfg = config(name);
    cfg.duration_min = minutes;
    cfg.to_scenario().unwrap()
}

fn step_all(world: &mut World, iterations: u64, mut f: impl FnMut(&World)) {
    for _ in 0..iterations {
        world.step().unwrap();
        f(world);
    }
}

#[test]
fn phases_run_in_fixed_order() {
    let mut cfg = config("fig2bc_conjugation");
    cfg.record_phases = true;
    let sc = cfg.to_scenario().unwrap();
    let mut w = World::new(&sc, 0);
    let expected = [
        Phase::Springs,
        Phase::Division,
        Phase::Elongation,
        Phase::Conjugation,
        Phase::Program,
        Phase::Physics,
        Phase::Washout,
    ];
    step_all(&mut w, 30, |w| {
        let phases: Vec<Phase> = w
            .events
            .iter()
            .filter_map(|e| match e {
                Event::Phase { phase, .. } => Some(*phase),
                _ => None,
            })
            .collect();
        assert_eq!(phases, expected);
        assert!(w.events.iter().all(|e| e.iteration() == w.iteration - 1));
    });
}

#[test]
fn population_bookkeeping_balances() {
    let sc = short("fig2_channel_test3", 300.0);
    let mut w = World::new(&sc, 1);
    let initial = w.cells.len() as u64;
    step_all(&mut w, sc.total_iterations(), |w| {
        assert_eq!(w.cells.len() as u64, initial + w.totals.divisions - w.totals.washouts);
        assert!(w.cells.windows(2).all(|p| p[0].id < p[1].id));
    });
    assert!(w.totals.divisions > 0);
    assert!(w.totals.washouts > 0, "the channel should overflow by now");
}

#[test]
fn washed_out_cells_leave_through_open_ends() {
    let sc = short("fig2_channel_test3", 300.0);
    let mut sink = MemorySink::default();
    let mut w = World::new(&sc, 0);
    run_world(&mut w, &sc, 0, &mut sink).unwrap();
    let removed: HashSet<u64> = sink
        .events
        .iter()
        .filter_map(|e| match e {
            Event::Washout { cell, .. } => Some(*cell),
            _ => None,
        })
        .collect();
    assert!(!removed.is_empty());
    for rec in &sink.records {
        for c in &rec.cells {
            assert!(!removed.contains(&c.id) || rec.iteration <= last_seen(&sink.events, c.id));
            assert!(w.geometry.bounds.contains(c.center), "cell {} escaped to {:?}", c.id, c.center);
        }
    }
}

fn last_seen(events: &[Event], id: u64) -> u64 {
    events
        .iter()
        .find_map(|e| match e {
            Event::Washout { cell, iteration, .. } if *cell == id => Some(*iteration),
            _ => None,
        })
        .unwrap_or(u64::MAX)
}

#[test]
fn a_cell_holds_at_most_one_pilus() {
    let sc = config("fig2bc_conjugation").to_scenario().unwrap();
    let mut w = World::new(&sc, 2);
    let mut max_springs = 0;
    step_all(&mut w, sc.total_iterations(), |w| {
        let mut seen = HashSet::new();
        for s in &w.springs {
            assert!(seen.insert(s.giver), "cell {} in two springs", s.giver);
            assert!(seen.insert(s.receiver), "cell {} in two springs", s.receiver);
        }
        for c in &w.cells {
            assert_eq!(c.conjugating, seen.contains(&c.id));
        }
        max_springs = max_springs.max(w.springs.len());
    });
    assert!(max_springs > 0);
}

#[test]
fn transfers_take_c_time_and_respect_entry_exclusion() {
    let sc = config("fig2bc_conjugation").to_scenario().unwrap();
    let c_time = sc.params.conjugation.c_time as u64;
    let mut w = World::new(&sc, 3);
    let mut roles: HashMap<u64, Role> = w.cells.iter().map(|c| (c.id, c.role)).collect();
    let mut transfers = 0;
    for _ in 0..sc.total_iterations() {
        w.step().unwrap();
        for e in &w.events {
            if let Event::Transfer { iteration, created_at, receiver, .. } = e {
                assert_eq!(iteration - created_at, c_time);
                assert_eq!(roles.get(receiver), Some(&Role::Recipient));
                transfers += 1;
            }
        }
        roles = w.cells.iter().map(|c| (c.id, c.role)).collect();
    }
    assert!(transfers > 0);
}

#[test]
fn conjugation_frequency_never_falls_while_growth_is_frozen() {
    let mut cfg = config("fig2bc_conjugation");
    cfg.p_d = 0.05;
    cfg.number_donors = 4;
    cfg.number_recipients = 8;
    let patch = Rect {
        min: Vec2::new(-40.0, -40.0),
        max: Vec2::new(40.0, 40.0),
    };
    cfg.seeds = vec![
        StrainSeed::new(Role::Donor, 0, 4, patch, Arrangement::Uniform),
        StrainSeed::new(Role::Recipient, 1, 8, patch, Arrangement::Uniform),
    ];
    let mut sc = cfg.to_scenario().unwrap();
    // Every cell counts as pressured, so none elongates.
    sc.params.growth.max_overlap = -1.0;
    let mut sink = MemorySink::default();
    run(&sc, 4, &mut sink).unwrap();
    let ys: Vec<f64> = sink.records.iter().map(|r| conjugation_frequency(r).unwrap()).collect();
    assert!(ys.windows(2).all(|p| p[1] >= p[0]), "{ys:?}");
    assert!(*ys.last().unwrap() > 0.0);
}

#[test]
fn roles_only_flow_from_recipient_to_transconjugant() {
    let sc = config("fig2bc_conjugation").to_scenario().unwrap();
    let mut w = World::new(&sc, 5);
    let mut roles: HashMap<u64, Role> = w.cells.iter().map(|c| (c.id, c.role)).collect();
    let mut last = w.counts();
    step_all(&mut w, sc.total_iterations(), |w| {
        let mut parent: HashMap<u64, u64> = HashMap::new();
        for e in &w.events {
            if let Event::Division { mother, daughters, .. } = e {
                for d in daughters {
                    parent.insert(*d, *mother);
                }
            }
        }
        for c in &w.cells {
            let before = roles.get(&c.id).or_else(|| parent.get(&c.id).and_then(|m| roles.get(m)));
            match (before, c.role) {
                (Some(a), b) if *a == b => {}
                (Some(Role::Recipient), Role::Transconjugant) => {}
                other => panic!("cell {} changed role {other:?}", c.id),
            }
        }
        let now = w.counts();
        assert!(now[0] >= last[0] && now[2] >= last[2]);
        last = now;
        roles = w.cells.iter().map(|c| (c.id, c.role)).collect();
    });
    assert_eq!(w.totals.washouts, 0);
    assert!(last[2] > 0);
}

#[test]
fn replicates_are_reproducible_and_distinct() {
    let sc = short("fig2bc_conjugation", 60.0);
    let stream = |rep| {
        let mut sink = MemorySink::default();
        run(&sc, rep, &mut sink).unwrap();
        let mut bytes = Vec::new();
        write_line(&mut bytes, sink.header.as_ref().unwrap()).unwrap();
        for r in &sink.records {
            write_line(&mut bytes, r).unwrap();
        }
        bytes
    };
    assert_eq!(stream(0), stream(0));
    assert_ne!(stream(0), stream(1));
}

#[test]
fn snapshot_stream_round_trips() {
    let sc = short("fig3_oscillator_cross", 30.0);
    let mut sink = MemorySink::default();
    run(&sc, 0, &mut sink).unwrap();
    let mut bytes = Vec::new();
    write_line(&mut bytes, sink.header.as_ref().unwrap()).unwrap();
    for r in &sink.records {
        write_line(&mut bytes, r).unwrap();
    }
    let back = read_stream(bytes.as_slice()).unwrap();
    assert_eq!(&back.header, sink.header.as_ref().unwrap());
    assert_eq!(back.records, sink.records);
    assert!(back.partial.is_none());
    assert!(back.records.iter().any(|r| r.cells.iter().any(|c| c.program_readout > 0.0)));
}

#[test]
fn manual_mix_scatters_cells_inside_growth_regions() {
    let sc = short("fig5_unmixed_1x3", 300.0);
    let mut w = World::new(&sc, 0);
    step_all(&mut w, sc.total_iterations(), |_| {});
    let radius = w.params.conjugation.contact_radius;
    let width = w.params.growth.width;
    let before = isolation_index(&SnapshotRecord::capture(&w), radius, width).unwrap();
    let counts = w.counts();
    let ids: Vec<u64> = w.cells.iter().map(|c| c.id).collect();
    w.manual_mix().unwrap();
    let after = isolation_index(&SnapshotRecord::capture(&w), radius, width).unwrap();
    assert_eq!(w.counts(), counts);
    assert_eq!(w.cells.iter().map(|c| c.id).collect::<Vec<_>>(), ids);
    assert!(w.springs.is_empty());
    assert!(w.cells.iter().all(|c| !c.conjugating));
    for c in &w.cells {
        assert!(w.geometry.bounds.contains(c.body.center), "cell {} left the world", c.id);
    }
    assert!(after < before, "isolation {before} -> {after}");
}

#[test]
fn population_cap_stops_the_run() {
    let mut cfg = config("fig2bc_conjugation");
    cfg.population_cap = 20;
    let sc = cfg.to_scenario().unwrap();
    let mut sink = MemorySink::default();
    let summary = run(&sc, 0, &mut sink).unwrap();
    assert_eq!(summary.stop, StopReason::PopulationCap);
    assert!(sink.aborted.is_some());
    assert!(summary.iterations < sc.total_iterations());
}

#[test]
fn every_preset_survives_its_first_iterations() {
    for name in presets::names() {
        let sc = short(name, 5.0);
        let summary = run(&sc, 0, &mut NullSink).unwrap();
        assert_eq!(summary.stop, StopReason::Completed, "{name}");
        assert_eq!(summary.iterations, sc.total_iterations());
    }
}

#[test]
fn channel_cells_stay_sound() {
    let sc = short("fig2_channel_test1", 300.0);
    let g = sc.params.growth.clone();
    let mut w = World::new(&sc, 0);
    step_all(&mut w, sc.total_iterations(), |w| {
        for c in &w.cells {
            assert!(c.length() <= 2.0 * g.length + 2.0 * g.increment() + 1e-9);
            c.check_invariants().unwrap();
            let aabb = c.body.aabb();
            assert!(!w.geometry.washout_regions.iter().any(|r| r.contains_rect(&aabb)), "cell {} left in washout", c.id);
        }
    });
}

#[test]
fn daughters_inherit_program_state() {
    let sc = short("fig3_oscillator_cross", 120.0);
    let mut w = World::new(&sc, 0);
    let mut divisions = 0;
    step_all(&mut w, sc.total_iterations(), |w| {
        for e in &w.events {
            if let Event::Division { daughters, .. } = e {
                let (Some(a), Some(b)) = (w.cell(daughters[0]), w.cell(daughters[1])) else { continue };
                let bits = |c: &pilus_core::cells::Cell| c.program.molecules.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
                assert_eq!(bits(a), bits(b));
                assert_eq!(a.program.local_step, b.program.local_step);
                divisions += 1;
            }
        }
    });
    assert!(divisions > 0);
}

#[test]
fn crowded_channel_flows_out_from_the_centre() {
    let sc = short("fig2_channel_test3", 400.0);
    let mid = 0.5 * (sc.geometry.monitor_region.min.x + sc.geometry.monitor_region.max.x);
    let mut w = World::new(&sc, 0);
    let (mut left, mut right) = ((0.0, 0usize), (0.0, 0usize));
    let settle = sc.total_iterations() / 2;
    step_all(&mut w, sc.total_iterations(), |w| {
        if w.iteration < settle || w.iteration % 15 != 0 {
            return;
        }
        for c in &w.cells {
            let slot = if c.body.center.x < mid { &mut left } else { &mut right };
            slot.0 += c.body.linear_velocity.x;
            slot.1 += 1;
        }
    });
    let (l, r) = (left.0 / left.1 as f64, right.0 / right.1 as f64);
    assert!(l < 0.0 && r > 0.0, "left {l}, right {r}");
}

#[test]
fn new_transconjugants_appear_next_to_old_ones() {
    let sc = config("fig2bc_conjugation").to_scenario().unwrap();
    let (mut near, mut random, mut n) = (0.0, 0.0, 0usize);
    for rep in 0..4 {
        let mut w = World::new(&sc, rep);
        let mut previous: Vec<(u64, Vec2)> = Vec::new();
        step_all(&mut w, sc.total_iterations(), |w| {
            for e in &w.events {
                let Event::Transfer { receiver, .. } = e else { continue };
                let Some(p) = w.cell(*receiver).map(|c| c.body.center) else { continue };
                let others: Vec<Vec2> = previous.iter().filter(|(id, _)| id != receiver).map(|(_, q)| *q).collect();
                if others.is_empty() {
                    continue;
                }
                near += others.iter().map(|q| p.distance(*q)).fold(f64::INFINITY, f64::min);
                let all: Vec<f64> = w.cells.iter().filter(|c| c.id != *receiver).map(|c| p.distance(c.body.center)).collect();
                random += all.iter().sum::<f64>() / all.len() as f64;
                n += 1;
            }
            previous = w.cells.iter().filter(|c| c.role == Role::Transconjugant).map(|c| (c.id, c.body.center)).collect();
        });
    }
    assert!(n > 10);
    let (near, random) = (near / n as f64, random / n as f64);
    assert!(near < random, "nearest {near} vs random {random}");
}

#[test]
fn density_stays_near_one_when_crowded() {
    let sc = short("fig2_channel_test3", 400.0);
    let mut sink = MemorySink::default();
    run(&sc, 0, &mut sink).unwrap();
    let region = sc.geometry.monitor_region;
    let slack = sc.params.growth.max_overlap / sc.params.growth.width;
    let peak = sink.records.iter().map(|r| pilus_core::metrics::density(r, &region)).fold(0.0, f64::max);
    assert!(peak > 0.8 && peak <= 1.0 + slack, "peak density {peak}");
}
