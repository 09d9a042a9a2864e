//! Cell lifecycle: pressure-gated elongation, division, and the mapping
//! between iterations and minutes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::ProgramState;
use crate::physics::{CapsuleBody, Contact, ContactTarget, Vec2};

pub type CellId = u64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Role {
    Donor = 0,
    Recipient = 1,
    Transconjugant = 2,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::Donor, Role::Recipient, Role::Transconjugant];

    pub fn name(self) -> &'static str {
        match self {
            Role::Donor => "donor",
            Role::Recipient => "recipient",
            Role::Transconjugant => "transconjugant",
        }
    }
}

impl From<Role> for u8 {
    fn from(r: Role) -> u8 {
        r as u8
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("role code {0} is not 0 (donor), 1 (recipient) or 2 (transconjugant)")]
pub struct InvalidRole(pub u8);

impl TryFrom<u8> for Role {
    type Error = InvalidRole;
    fn try_from(v: u8) -> Result<Role, InvalidRole> {
        match v {
            0 => Ok(Role::Donor),
            1 => Ok(Role::Recipient),
            2 => Ok(Role::Transconjugant),
            other => Err(InvalidRole(other)),
        }
    }
}

/// Static growth parameters (the Table-2 names live in the config layer).
#[derive(Clone, Debug, PartialEq)]
pub struct GrowthParams {
    pub width: f64,
    /// Birth length of the rod segment; division happens at twice this.
    pub length: f64,
    pub growth_speed: u32,
    pub max_overlap: f64,
    pub cell_infancy: f64,
    pub gt: u32,
    pub real_gt: f64,
    pub bac_mass: f64,
    pub bac_friction: f64,
    /// Standard deviation of the angle noise added to daughters (radians).
    pub division_jitter: f64,
    /// Stop elongating while attached to a pilus.
    pub pause_elongation_while_conjugating: bool,
    /// Hold division until an active transfer finishes.
    pub defer_division_while_conjugating: bool,
}

impl Default for GrowthParams {
    fn default() -> Self {
        GrowthParams {
            width: 5.0,
            length: 15.0,
            growth_speed: 30,
            max_overlap: 1.0,
            cell_infancy: 0.1,
            gt: 450,
            real_gt: 30.0,
            bac_mass: 1.0,
            bac_friction: 0.5,
            division_jitter: 0.0,
            pause_elongation_while_conjugating: false,
            defer_division_while_conjugating: true,
        }
    }
}

impl GrowthParams {
    pub fn radius(&self) -> f64 {
        0.5 * self.width
    }

    pub fn birth_half_length(&self) -> f64 {
        0.5 * self.length
    }

    pub fn max_half_length(&self) -> f64 {
        self.length
    }

    /// Elongation events in one doubling time, `Gt / growth_speed`.
    pub fn events_per_doubling(&self) -> f64 {
        self.gt as f64 / self.growth_speed as f64
    }

    /// Half-length gained per elongation event.
    pub fn increment(&self) -> f64 {
        self.length / (2.0 * self.events_per_doubling())
    }

    pub fn infancy_iterations(&self) -> u64 {
        (self.cell_infancy * self.gt as f64).round() as u64
    }

    /// Iterations per simulated minute, `Gt / real_Gt`.
    pub fn iterations_per_minute(&self) -> f64 {
        self.gt as f64 / self.real_gt
    }

    pub fn new_body(&self, center: Vec2, angle: f64) -> CapsuleBody {
        CapsuleBody::new(
            center,
            angle,
            self.birth_half_length(),
            self.radius(),
            self.bac_mass,
            self.bac_friction,
        )
    }
}

/// A mobile rod-shaped cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub id: CellId,
    /// Lineage label inherited at division; used to track seeded strains.
    pub strain: u32,
    pub body: CapsuleBody,
    /// Elongation events applied at each pole since birth.
    pub elongation: [u32; 2],
    pub role: Role,
    pub plasmid: bool,
    pub conjugating: bool,
    /// Role of the cell the plasmid came from (transconjugants only).
    pub partner_role: Option<Role>,
    /// Iterations since birth.
    pub age: u64,
    /// Iterations spent below the pressure tolerance, offset by the seeding
    /// phase. Elongation fires when it crosses a multiple of `growth_speed`.
    pub growth_clock: u64,
    pub program: ProgramState,
    pub pending_spring: Option<u64>,
    /// Largest residual overlap measured after the latest physics step.
    pub pressure: f64,
}

impl Cell {
    pub fn new(id: CellId, strain: u32, role: Role, body: CapsuleBody, program: ProgramState) -> Self {
        Cell {
            id,
            strain,
            body,
            elongation: [0, 0],
            role,
            plasmid: matches!(role, Role::Donor | Role::Transconjugant),
            conjugating: false,
            partner_role: None,
            age: 0,
            growth_clock: 0,
            program,
            pending_spring: None,
            pressure: 0.0,
        }
    }

    /// Rod segment length, `2 * half_length`.
    pub fn length(&self) -> f64 {
        2.0 * self.body.half_length
    }

    pub fn speed(&self) -> f64 {
        self.body.linear_velocity.length()
    }

    /// Checks the coupling between role, plasmid, partner and spring state.
    pub fn check_invariants(&self) -> Result<(), String> {
        let expects_plasmid = matches!(self.role, Role::Donor | Role::Transconjugant);
        if self.plasmid != expects_plasmid {
            return Err(format!("cell {}: plasmid={} but role={:?}", self.id, self.plasmid, self.role));
        }
        if self.conjugating != self.pending_spring.is_some() {
            return Err(format!("cell {}: conjugating flag disagrees with spring", self.id));
        }
        if self.partner_role.is_some() != (self.role == Role::Transconjugant) {
            return Err(format!("cell {}: partner_role set for role {:?}", self.id, self.role));
        }
        Ok(())
    }
}

/// Monotone id allocator.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdSource {
    next: CellId,
}

impl IdSource {
    pub fn starting_at(next: CellId) -> Self {
        IdSource { next }
    }

    pub fn next_id(&mut self) -> CellId {
        let id = self.next;
        self.next += 1;
        id
    }

    pub fn peek(&self) -> CellId {
        self.next
    }
}

/// Largest penetration depth among contacts touching body `index`.
pub fn pressure(index: usize, contacts: &[Contact]) -> f64 {
    contacts
        .iter()
        .filter(|c| c.body_a == index || c.body_b == ContactTarget::Body(index))
        .map(|c| c.penetration_depth)
        .fold(0.0, f64::max)
}

/// Pressure for every body at once.
pub fn pressures(count: usize, contacts: &[Contact]) -> Vec<f64> {
    let mut out = vec![0.0_f64; count];
    for c in contacts {
        if c.body_a < count {
            out[c.body_a] = out[c.body_a].max(c.penetration_depth);
        }
        if let ContactTarget::Body(j) = c.body_b {
            if j < count {
                out[j] = out[j].max(c.penetration_depth);
            }
        }
    }
    out
}

/// Advance the cell's growth clock unless it is under pressure, and elongate
/// when the clock reaches a multiple of `growth_speed`. Returns whether the
/// cell grew.
pub fn try_elongate(cell: &mut Cell, params: &GrowthParams, pressure: f64) -> bool {
    if pressure > params.max_overlap {
        return false;
    }
    if cell.conjugating && params.pause_elongation_while_conjugating {
        return false;
    }
    cell.growth_clock += 1;
    if cell.growth_clock % params.growth_speed as u64 != 0 {
        return false;
    }
    let max = params.max_half_length();
    if cell.body.half_length >= max {
        return false;
    }
    cell.elongation[0] += 1;
    cell.elongation[1] += 1;
    let grown = params.birth_half_length() + cell.elongation[0] as f64 * params.increment();
    cell.body.set_half_length(grown.min(max));
    true
}

pub fn ready_to_divide(cell: &Cell, params: &GrowthParams) -> bool {
    cell.body.half_length >= params.max_half_length() * (1.0 - 1e-12)
}

/// Split a full-length cell into two end-to-end daughters. Returns `None`
/// when the cell is too short or is held by an unfinished transfer.
///
/// `jitter` is the angle perturbation applied to the two daughters.
pub fn try_divide(cell: &Cell, ids: &mut IdSource, params: &GrowthParams, jitter: [f64; 2]) -> Option<(Cell, Cell)> {
    if !ready_to_divide(cell, params) {
        return None;
    }
    if cell.conjugating && params.defer_division_while_conjugating {
        return None;
    }
    let axis = cell.body.axis();
    let half = 0.5 * cell.body.half_length;
    let make = |id: CellId, sign: f64, dtheta: f64| {
        let mut body = cell.body.clone();
        body.center = cell.body.center + axis * (sign * half);
        body.angle = cell.body.angle + dtheta;
        body.set_half_length(half);
        Cell {
            id,
            strain: cell.strain,
            body,
            elongation: [0, 0],
            role: cell.role,
            plasmid: cell.plasmid,
            conjugating: false,
            partner_role: cell.partner_role,
            age: 0,
            growth_clock: 0,
            program: cell.program.clone(),
            pending_spring: None,
            pressure: 0.0,
        }
    };
    let a = make(ids.next_id(), -1.0, jitter[0]);
    let b = make(ids.next_id(), 1.0, jitter[1]);
    Some((a, b))
}

/// Simulated minutes elapsed at `iteration`.
pub fn minutes(iteration: u64, params: &GrowthParams) -> f64 {
    iteration as f64 * params.real_gt / params.gt as f64
}

/// First iteration at or after `minutes`.
pub fn iteration_at(minutes: f64, params: &GrowthParams) -> u64 {
    (minutes * params.iterations_per_minute()).round().max(0.0) as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::detect_contacts;

    fn params() -> GrowthParams {
        GrowthParams::default()
    }

    fn cell(id: CellId, role: Role) -> Cell {
        Cell::new(id, 0, role, params().new_body(Vec2::ZERO, 0.0), ProgramState::empty())
    }

    #[test]
    fn pressure_is_max_depth() {
        let contacts = [
            Contact {
                body_a: 0,
                body_b: ContactTarget::Body(1),
                normal: Vec2::X,
                penetration_depth: 0.2,
                contact_point: Vec2::ZERO,
            },
            Contact {
                body_a: 2,
                body_b: ContactTarget::Body(0),
                normal: Vec2::X,
                penetration_depth: 0.7,
                contact_point: Vec2::ZERO,
            },
        ];
        assert_eq!(pressure(0, &contacts), 0.7);
        assert_eq!(pressure(1, &contacts), 0.2);
        assert_eq!(pressure(5, &contacts), 0.0);
        assert_eq!(pressures(3, &contacts), vec![0.7, 0.2, 0.7]);
    }

    #[test]
    fn blocked_gate_leaves_cell_unchanged() {
        let p = params();
        let mut c = cell(0, Role::Donor);
        c.growth_clock = 29;
        let before = c.clone();
        assert!(!try_elongate(&mut c, &p, p.max_overlap + 1e-9));
        assert_eq!(c, before);
    }

    #[test]
    fn fifteen_half_unit_events_per_doubling() {
        let p = GrowthParams {
            gt: 450,
            growth_speed: 30,
            length: 15.0,
            ..params()
        };
        assert_eq!(p.events_per_doubling(), 15.0);
        assert_eq!(p.increment(), 0.5);
        let mut c = cell(0, Role::Recipient);
        let mut events = 0;
        for _ in 0..450 {
            let before = c.body.half_length;
            if try_elongate(&mut c, &p, 0.0) {
                events += 1;
                assert!((c.body.half_length - before - 0.5).abs() < 1e-12);
            }
        }
        assert_eq!(events, 15);
        assert_eq!(c.elongation, [15, 15]);
        assert_eq!(c.length(), 30.0);
        assert!(ready_to_divide(&c, &p));
    }

    #[test]
    fn non_integer_increment_still_reaches_full_length() {
        let p = GrowthParams {
            length: 24.0,
            ..params()
        };
        let mut c = cell(0, Role::Recipient);
        for _ in 0..449 {
            try_elongate(&mut c, &p, 0.0);
            assert!(!ready_to_divide(&c, &p));
        }
        try_elongate(&mut c, &p, 0.0);
        assert!(ready_to_divide(&c, &p));
        assert!(c.length() <= 2.0 * p.length);
    }

    #[test]
    fn growth_stops_at_division_length() {
        let p = params();
        let mut c = cell(0, Role::Donor);
        for _ in 0..2000 {
            try_elongate(&mut c, &p, 0.0);
        }
        assert_eq!(c.body.half_length, p.max_half_length());
    }

    #[test]
    fn short_cell_does_not_divide() {
        let p = params();
        let mut c = cell(0, Role::Donor);
        c.body.set_half_length(p.length - 1e-6);
        assert!(try_divide(&c, &mut IdSource::default(), &p, [0.0; 2]).is_none());
    }

    #[test]
    fn daughters_split_end_to_end() {
        let p = params();
        let theta = 0.7;
        let mut c = Cell::new(9, 3, Role::Donor, p.new_body(Vec2::new(10.0, -4.0), theta), ProgramState::new(vec![0.25, 1.5]));
        c.body.set_half_length(p.length);
        let mut ids = IdSource::starting_at(100);
        let (a, b) = try_divide(&c, &mut ids, &p, [0.0; 2]).unwrap();
        let axis = Vec2::from_angle(theta);
        assert!((a.body.center - (c.body.center - axis * (p.length / 2.0))).length() < 1e-12);
        assert!((b.body.center - (c.body.center + axis * (p.length / 2.0))).length() < 1e-12);
        assert_eq!((a.id, b.id), (100, 101));
        for d in [&a, &b] {
            assert_eq!(d.body.angle, theta);
            assert_eq!(d.body.half_length, p.birth_half_length());
            assert_eq!(d.role, Role::Donor);
            assert!(d.plasmid);
            assert_eq!(d.strain, 3);
            assert_eq!(d.age, 0);
            assert_eq!(d.program, c.program);
            d.check_invariants().unwrap();
        }
        assert!((a.length() + b.length() - c.length()).abs() < 1e-9);
        let mother = c.body.aabb();
        assert!(mother.inflate(1e-9).contains_rect(&a.body.aabb()));
        assert!(mother.inflate(1e-9).contains_rect(&b.body.aabb()));
        // the shared cap overlaps fully right after division
        let contacts = detect_contacts(&[a.body.clone(), b.body.clone()], &[]);
        assert_eq!(contacts.len(), 1);
    }

    #[test]
    fn conjugating_mother_waits() {
        let p = params();
        let mut c = cell(0, Role::Donor);
        c.body.set_half_length(p.length);
        c.conjugating = true;
        c.pending_spring = Some(1);
        assert!(try_divide(&c, &mut IdSource::default(), &p, [0.0; 2]).is_none());
    }

    #[test]
    fn minutes_conversion() {
        let p = params();
        assert_eq!(minutes(0, &p), 0.0);
        assert_eq!(minutes(450, &p), 30.0);
        assert_eq!(minutes(2400, &p), 160.0);
        assert_eq!(iteration_at(420.0, &p), 6300);
    }

    #[test]
    fn role_codes_round_trip() {
        for r in Role::ALL {
            assert_eq!(Role::try_from(u8::from(r)).unwrap(), r);
        }
        assert_eq!(Role::try_from(3), Err(InvalidRole(3)));
        assert_eq!(serde_json::to_string(&Role::Transconjugant).unwrap(), "2");
    }
}
