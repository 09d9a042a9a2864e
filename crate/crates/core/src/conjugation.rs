//! Conjugation decisions, mate selection, and pilus lifecycle.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cells::{Cell, CellId, Role};
use crate::circuit::Program;
use crate::physics::{surface_distance, DampedSpring, Vec2};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConjugationError {
    #[error("transfer to cell {receiver} rejected: it is a {role:?}, not a recipient")]
    ReceiverNotRecipient { receiver: CellId, role: Role },
    #[error("transfer references missing cell {0}")]
    MissingCell(CellId),
}

/// How trial probabilities are scheduled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialMode {
    /// One trial per iteration at the configured probability.
    #[default]
    PerIteration,
    /// Rescale the probability by `width * length / Gt`, treating that
    /// product as the number of trials per lifetime.
    LifetimeScaled,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConjugationParams {
    pub p_d: f64,
    pub p_t1: f64,
    pub p_t2: f64,
    pub c_time: u32,
    pub infancy_iterations: u64,
    /// Surface-to-surface reach of a pilus.
    pub contact_radius: f64,
    pub transconjugants_conjugate: bool,
    pub transconjugants_receive: bool,
    pub trial_mode: TrialMode,
    /// `width * length`, used by [`TrialMode::LifetimeScaled`].
    pub lifetime_trials: f64,
    pub gt: u32,
    pub spring_rest_length: f64,
    pub spring_stiffness: f64,
    pub spring_damping: f64,
}

impl Default for ConjugationParams {
    fn default() -> Self {
        ConjugationParams {
            p_d: 0.001,
            p_t1: 0.02,
            p_t2: 0.05,
            c_time: 450,
            infancy_iterations: 45,
            contact_radius: 1.0,
            transconjugants_conjugate: true,
            transconjugants_receive: false,
            trial_mode: TrialMode::PerIteration,
            lifetime_trials: 75.0,
            gt: 450,
            spring_rest_length: 5.0,
            spring_stiffness: 0.05,
            spring_damping: 0.1,
        }
    }
}

/// Per-iteration probability that `cell` initiates a transfer.
pub fn conjugation_probability(cell: &Cell, params: &ConjugationParams) -> f64 {
    if cell.conjugating || cell.age < params.infancy_iterations {
        return 0.0;
    }
    let base = match (cell.role, cell.partner_role) {
        (Role::Donor, _) => params.p_d,
        (Role::Recipient, _) => 0.0,
        (Role::Transconjugant, _) if !params.transconjugants_conjugate => 0.0,
        (Role::Transconjugant, Some(Role::Transconjugant)) => params.p_t2,
        (Role::Transconjugant, _) => params.p_t1,
    };
    match params.trial_mode {
        TrialMode::PerIteration => base,
        TrialMode::LifetimeScaled => (base * params.lifetime_trials / params.gt.max(1) as f64).min(1.0),
    }
}

/// Whether `candidate` may receive a plasmid from `giver`.
pub fn is_valid_mate(giver: &Cell, candidate: &Cell, params: &ConjugationParams) -> bool {
    if candidate.id == giver.id || candidate.conjugating {
        return false;
    }
    match candidate.role {
        Role::Recipient => true,
        Role::Transconjugant => params.transconjugants_receive,
        Role::Donor => false,
    }
}

/// Valid mates among `neighbors` whose surfaces lie within the pilus reach.
pub fn mates_in_range<'a>(giver: &Cell, neighbors: impl IntoIterator<Item = &'a Cell>, params: &ConjugationParams) -> Vec<CellId> {
    neighbors
        .into_iter()
        .filter(|n| is_valid_mate(giver, n, params))
        .filter(|n| surface_distance(&giver.body, &n.body) <= params.contact_radius)
        .map(|n| n.id)
        .collect()
}

/// Draw one trial for `cell` and, on success, a mate uniformly from the
/// valid neighbors in range. `None` when the trial fails or no mate exists;
/// either way the trial is spent. No random number is drawn for cells whose
/// probability is zero.
pub fn attempt_conjugation<'a, R: Rng + ?Sized>(
    cell: &Cell,
    neighbors: impl IntoIterator<Item = &'a Cell>,
    rng: &mut R,
    params: &ConjugationParams,
) -> Option<CellId> {
    if !trial(cell, rng, params) {
        return None;
    }
    choose_mate(cell, neighbors, rng, params)
}

/// The Bernoulli half of [`attempt_conjugation`].
pub fn trial<R: Rng + ?Sized>(cell: &Cell, rng: &mut R, params: &ConjugationParams) -> bool {
    let p = conjugation_probability(cell, params);
    p > 0.0 && rng.random::<f64>() < p
}

/// The mate-selection half of [`attempt_conjugation`].
pub fn choose_mate<'a, R: Rng + ?Sized>(
    cell: &Cell,
    neighbors: impl IntoIterator<Item = &'a Cell>,
    rng: &mut R,
    params: &ConjugationParams,
) -> Option<CellId> {
    let mates = mates_in_range(cell, neighbors, params);
    if mates.is_empty() {
        return None;
    }
    Some(mates[rng.random_range(0..mates.len())])
}

/// A live pilus linking a plasmid giver to a receiver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PilusSpring {
    pub id: u64,
    pub giver: CellId,
    pub receiver: CellId,
    /// Which cap of each cell the pilus is fixed to (+1 or -1 along the axis).
    pub giver_pole: f64,
    pub receiver_pole: f64,
    pub remaining: u32,
    pub created_at: u64,
    pub rest_length: f64,
    pub stiffness: f64,
    pub damping: f64,
}

impl PilusSpring {
    /// Spring constraint between body indices `a` (giver) and `b` (receiver),
    /// anchored at the current cap centers.
    pub fn damped(&self, a: usize, giver: &Cell, b: usize, receiver: &Cell) -> DampedSpring {
        DampedSpring {
            body_a: a,
            body_b: b,
            anchor_a: Vec2::new(self.giver_pole * giver.body.half_length, 0.0),
            anchor_b: Vec2::new(self.receiver_pole * receiver.body.half_length, 0.0),
            rest_length: self.rest_length,
            stiffness: self.stiffness,
            damping: self.damping,
        }
    }
}

/// Pick the pair of nearest cap centers.
pub fn nearest_poles(giver: &Cell, receiver: &Cell) -> (f64, f64) {
    let mut best = (1.0, 1.0);
    let mut best_d = f64::INFINITY;
    for sa in [-1.0, 1.0] {
        for sb in [-1.0, 1.0] {
            let d = giver.body.pole(sa).distance(receiver.body.pole(sb));
            if d < best_d {
                best_d = d;
                best = (sa, sb);
            }
        }
    }
    best
}

/// Attach a pilus between the two cells and flag both as conjugating.
pub fn connect(spring_id: u64, giver: &mut Cell, receiver: &mut Cell, iteration: u64, params: &ConjugationParams) -> PilusSpring {
    let (giver_pole, receiver_pole) = nearest_poles(giver, receiver);
    giver.conjugating = true;
    giver.pending_spring = Some(spring_id);
    receiver.conjugating = true;
    receiver.pending_spring = Some(spring_id);
    PilusSpring {
        id: spring_id,
        giver: giver.id,
        receiver: receiver.id,
        giver_pole,
        receiver_pole,
        remaining: params.c_time,
        created_at: iteration,
        rest_length: params.spring_rest_length,
        stiffness: params.spring_stiffness,
        damping: params.spring_damping,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transfer {
    pub spring: u64,
    pub giver: CellId,
    pub receiver: CellId,
    pub giver_role: Role,
    pub created_at: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbortReason {
    GiverGone,
    ReceiverGone,
    Mixed,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SpringOutcome {
    Completed(Transfer),
    Aborted { spring: PilusSpring, reason: AbortReason },
}

fn index_of(cells: &[Cell], id: CellId) -> Option<usize> {
    cells.binary_search_by_key(&id, |c| c.id).ok()
}

fn release(cells: &mut [Cell], id: CellId) {
    if let Some(i) = index_of(cells, id) {
        cells[i].conjugating = false;
        cells[i].pending_spring = None;
    }
}

fn missing_endpoint(s: &PilusSpring, cells: &[Cell]) -> Option<AbortReason> {
    if index_of(cells, s.giver).is_none() {
        Some(AbortReason::GiverGone)
    } else if index_of(cells, s.receiver).is_none() {
        Some(AbortReason::ReceiverGone)
    } else {
        None
    }
}

/// Abort springs whose giver or receiver no longer exists and release the
/// surviving endpoint. `cells` must be sorted by id.
pub fn prune_springs(springs: &mut Vec<PilusSpring>, cells: &mut [Cell]) -> Vec<SpringOutcome> {
    let mut outcomes = Vec::new();
    springs.retain(|s| match missing_endpoint(s, cells) {
        Some(reason) => {
            outcomes.push(SpringOutcome::Aborted { spring: s.clone(), reason });
            false
        }
        None => true,
    });
    for o in &outcomes {
        if let SpringOutcome::Aborted { spring, .. } = o {
            release(cells, spring.giver);
            release(cells, spring.receiver);
        }
    }
    outcomes
}

/// Abort every spring, releasing both endpoints.
pub fn abort_all(springs: &mut Vec<PilusSpring>, cells: &mut [Cell], reason: AbortReason) -> Vec<SpringOutcome> {
    springs
        .drain(..)
        .map(|s| {
            release(cells, s.giver);
            release(cells, s.receiver);
            SpringOutcome::Aborted { spring: s, reason }
        })
        .collect()
}

/// Age every spring by one iteration. Springs whose endpoints no longer
/// exist are aborted first; springs that run out complete. `cells` must be
/// sorted by id. Completed transfers still leave both cells flagged until
/// [`apply_transfer`] runs.
pub fn step_springs(springs: &mut Vec<PilusSpring>, cells: &mut [Cell]) -> Vec<SpringOutcome> {
    let mut outcomes = prune_springs(springs, cells);
    let mut kept = Vec::with_capacity(springs.len());
    for mut s in springs.drain(..) {
        s.remaining = s.remaining.saturating_sub(1);
        if s.remaining == 0 {
            let giver_role = cells[index_of(cells, s.giver).expect("pruned")].role;
            outcomes.push(SpringOutcome::Completed(Transfer {
                spring: s.id,
                giver: s.giver,
                receiver: s.receiver,
                giver_role,
                created_at: s.created_at,
            }));
        } else {
            kept.push(s);
        }
    }
    *springs = kept;
    outcomes
}

/// Install the plasmid in the receiver: it becomes a transconjugant whose
/// program restarts from the initial state. Both cells are released.
pub fn apply_transfer(
    transfer: &Transfer,
    cells: &mut [Cell],
    program: &dyn Program,
    params: &ConjugationParams,
) -> Result<(), ConjugationError> {
    let r = index_of(cells, transfer.receiver).ok_or(ConjugationError::MissingCell(transfer.receiver))?;
    let role = cells[r].role;
    let allowed = role == Role::Recipient || (role == Role::Transconjugant && params.transconjugants_receive);
    if !allowed {
        return Err(ConjugationError::ReceiverNotRecipient {
            receiver: transfer.receiver,
            role,
        });
    }
    let receiver = &mut cells[r];
    receiver.role = Role::Transconjugant;
    receiver.plasmid = true;
    receiver.partner_role = Some(transfer.giver_role);
    receiver.program = program.initial_state();
    release(cells, transfer.receiver);
    release(cells, transfer.giver);
    Ok(())
}
