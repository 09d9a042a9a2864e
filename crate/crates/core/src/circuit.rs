//! Per-cell genetic programs.
//!
//! A [`Program`] owns its parameters and advances a [`ProgramState`] one
//! integration step at a time. [`ProgramClock`] spreads `network_steps`
//! integration steps evenly over every `Gt` world iterations using integer
//! carry arithmetic, so the count per doubling time is exact.

use std::fmt::Debug;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cells::{Cell, CellId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("integration of {program} failed for cell {cell:?}: molecule {molecule} became {value}")]
    IntegrationFailure {
        program: &'static str,
        cell: Option<CellId>,
        molecule: usize,
        value: f64,
    },
    #[error("no plasmid-bearing cells to read out")]
    EmptyPopulation,
    #[error("invalid circuit parameter {field}: {reason}")]
    InvalidParams { field: &'static str, reason: &'static str },
}

/// State of one cell's program.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProgramState {
    pub molecules: Vec<f64>,
    /// Integration steps taken since the program was installed.
    pub local_step: u64,
    /// Fractional-step accumulator, in units of `1/Gt` integration steps.
    pub carry: u64,
}

impl ProgramState {
    pub fn new(molecules: Vec<f64>) -> Self {
        ProgramState {
            molecules,
            local_step: 0,
            carry: 0,
        }
    }

    pub fn empty() -> Self {
        Self::default()
    }
}

/// A replaceable intracellular program.
pub trait Program: Send + Sync + Debug {
    fn name(&self) -> &'static str;

    fn initial_state(&self) -> ProgramState;

    /// Advance by exactly one integration step. Deterministic programs ignore `rng`.
    fn step(&self, state: &mut ProgramState, rng: &mut dyn RngCore) -> Result<(), CircuitError>;

    /// Raw level of the reporter molecule.
    fn reporter(&self, state: &ProgramState) -> f64;
}

/// Program for strains that carry no circuit.
#[derive(Debug, Clone, Default)]
pub struct NoProgram;

impl Program for NoProgram {
    fn name(&self) -> &'static str {
        "none"
    }

    fn initial_state(&self) -> ProgramState {
        ProgramState::empty()
    }

    fn step(&self, state: &mut ProgramState, _rng: &mut dyn RngCore) -> Result<(), CircuitError> {
        state.local_step += 1;
        Ok(())
    }

    fn reporter(&self, _state: &ProgramState) -> f64 {
        0.0
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    Euler,
    #[default]
    Rk4,
}

/// Parameters of the two-component activator/repressor oscillator.
///
/// The defaults are not taken from any published parameter set; they were
/// picked because they give a stable limit cycle of roughly 100 integration
/// steps at `dt = 0.04`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OscillatorParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub sigma: f64,
    /// Timescale factor Δ.
    pub delta: f64,
    pub dt: f64,
    pub network_steps: u32,
    pub integrator: Integrator,
    /// Apply Δ to the whole right-hand side of the repressor equation
    /// instead of only its production term.
    pub delta_on_full_repressor: bool,
}

impl Default for OscillatorParams {
    fn default() -> Self {
        OscillatorParams {
            alpha: 5.0,
            beta: 1.0,
            gamma: 0.1,
            sigma: 2.0,
            delta: 5.0,
            dt: 0.04,
            network_steps: 18,
            integrator: Integrator::Rk4,
            delta_on_full_repressor: false,
        }
    }
}

impl OscillatorParams {
    pub fn validate(&self) -> Result<(), CircuitError> {
        let positive = [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("sigma", self.sigma),
            ("delta", self.delta),
            ("dt", self.dt),
        ];
        for (field, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CircuitError::InvalidParams {
                    field,
                    reason: "must be positive and finite",
                });
            }
        }
        if self.network_steps < 1 {
            return Err(CircuitError::InvalidParams {
                field: "network_steps",
                reason: "must be at least 1",
            });
        }
        Ok(())
    }
}

/// Right-hand side of the oscillator at `(x, y)`.
///
/// `dx/dt = Δ(β(1+αx²)/(1+x²+σy²) − x)` and `dy/dt = Δγ(1+αx²)/(1+x²) − y`,
/// with Δ only on the production term of the second equation unless
/// `delta_on_full_repressor` is set.
pub fn oscillator_derivative(state: [f64; 2], p: &OscillatorParams) -> [f64; 2] {
    let [x, y] = state;
    let x2 = x * x;
    let activation = 1.0 + p.alpha * x2;
    let dx = p.delta * (p.beta * activation / (1.0 + x2 + p.sigma * y * y) - x);
    let dy = if p.delta_on_full_repressor {
        p.delta * (p.gamma * activation / (1.0 + x2) - y)
    } else {
        p.delta * p.gamma * activation / (1.0 + x2) - y
    };
    [dx, dy]
}

/// One fixed step of the chosen integrator.
pub fn integrate_step(state: [f64; 2], h: f64, p: &OscillatorParams) -> [f64; 2] {
    let f = |s: [f64; 2]| oscillator_derivative(s, p);
    let add = |s: [f64; 2], k: [f64; 2], w: f64| [s[0] + w * k[0], s[1] + w * k[1]];
    match p.integrator {
        Integrator::Euler => add(state, f(state), h),
        Integrator::Rk4 => {
            let k1 = f(state);
            let k2 = f(add(state, k1, 0.5 * h));
            let k3 = f(add(state, k2, 0.5 * h));
            let k4 = f(add(state, k3, h));
            [
                state[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                state[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
            ]
        }
    }
}

/// Clamp tiny negative round-off to zero; anything else non-physical fails.
fn check_concentration(program: &'static str, molecule: usize, value: f64) -> Result<f64, CircuitError> {
    if !value.is_finite() || value < -1e-9 {
        return Err(CircuitError::IntegrationFailure {
            program,
            cell: None,
            molecule,
            value,
        });
    }
    Ok(value.max(0.0))
}

#[derive(Clone, Debug, Default)]
pub struct Oscillator {
    pub params: OscillatorParams,
}

impl Oscillator {
    pub fn new(params: OscillatorParams) -> Self {
        Oscillator { params }
    }
}

impl Program for Oscillator {
    fn name(&self) -> &'static str {
        "oscillator"
    }

    /// Both molecules start from zero.
    fn initial_state(&self) -> ProgramState {
        ProgramState::new(vec![0.0, 0.0])
    }

    fn step(&self, state: &mut ProgramState, _rng: &mut dyn RngCore) -> Result<(), CircuitError> {
        let current = match state.molecules.as_slice() {
            [x, y] => [*x, *y],
            _ => {
                return Err(CircuitError::IntegrationFailure {
                    program: self.name(),
                    cell: None,
                    molecule: state.molecules.len(),
                    value: f64::NAN,
                })
            }
        };
        let next = integrate_step(current, self.params.dt, &self.params);
        state.molecules[0] = check_concentration(self.name(), 0, next[0])?;
        state.molecules[1] = check_concentration(self.name(), 1, next[1])?;
        state.local_step += 1;
        Ok(())
    }

    fn reporter(&self, state: &ProgramState) -> f64 {
        state.molecules.first().copied().unwrap_or(0.0)
    }
}

/// Schedules integration steps against world iterations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProgramClock {
    pub network_steps: u64,
    pub gt: u64,
}

impl ProgramClock {
    pub fn new(network_steps: u32, gt: u32) -> Self {
        ProgramClock {
            network_steps: network_steps as u64,
            gt: gt.max(1) as u64,
        }
    }

    /// Advance the carry by one iteration and return how many integration
    /// steps fall due.
    pub fn tick(&self, state: &mut ProgramState) -> u64 {
        state.carry += self.network_steps;
        let due = state.carry / self.gt;
        state.carry %= self.gt;
        due
    }
}

/// Advance `cell`'s program by one world iteration. Cells without the
/// plasmid are left untouched.
pub fn step_program(
    cell: &mut Cell,
    program: &dyn Program,
    clock: &ProgramClock,
    rng: &mut dyn RngCore,
) -> Result<(), CircuitError> {
    if !cell.plasmid {
        return Ok(());
    }
    let due = clock.tick(&mut cell.program);
    for _ in 0..due {
        program.step(&mut cell.program, rng).map_err(|e| match e {
            CircuitError::IntegrationFailure {
                program,
                molecule,
                value,
                ..
            } => CircuitError::IntegrationFailure {
                program,
                cell: Some(cell.id),
                molecule,
                value,
            },
            other => other,
        })?;
    }
    Ok(())
}

/// The plasmid-bearing cell with the highest reporter level. Ties go to the
/// lowest id.
pub fn max_readout(cells: &[Cell], program: &dyn Program) -> Result<(CellId, f64), CircuitError> {
    let mut best: Option<(CellId, f64)> = None;
    for c in cells.iter().filter(|c| c.plasmid) {
        let level = program.reporter(&c.program);
        match best {
            Some((id, b)) if level < b || (level == b && c.id > id) => {}
            _ => best = Some((c.id, level)),
        }
    }
    best.ok_or(CircuitError::EmptyPopulation)
}

/// Normalizes reporter levels by the running maximum seen so far.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ReadoutScale {
    pub reference: f64,
}

impl ReadoutScale {
    pub fn observe(&mut self, level: f64) {
        if level > self.reference {
            self.reference = level;
        }
    }

    pub fn intensity(&self, level: f64) -> f64 {
        if self.reference > 0.0 {
            (level / self.reference).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }
}
