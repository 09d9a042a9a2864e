//! Population observables computed from snapshot records. Every function is
//! pure: the same record always gives the same bits.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cells::Role;
use crate::physics::{capsule_area, surface_distance, Rect, SpatialGrid, Vec2};
use crate::snapshot::SnapshotRecord;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("snapshot at iteration {0} has no cells")]
    Empty(u64),
    #[error("conjugation frequency is undefined without recipients or transconjugants (iteration {0})")]
    UndefinedFrequency(u64),
    #[error("snapshot at iteration {0} has no recipients")]
    NoRecipients(u64),
    #[error("no cells fall inside the bins")]
    NoBinnedCells,
    #[error("invalid bins: {0}")]
    InvalidBins(&'static str),
}

/// Regular grid of square bins.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinGrid {
    pub origin: Vec2,
    pub bin_size: f64,
    pub nx: usize,
    pub ny: usize,
}

impl BinGrid {
    pub fn new(origin: Vec2, bin_size: f64, nx: usize, ny: usize) -> Result<Self, MetricError> {
        if !(bin_size > 0.0 && bin_size.is_finite()) {
            return Err(MetricError::InvalidBins("bin_size must be positive"));
        }
        if nx == 0 || ny == 0 {
            return Err(MetricError::InvalidBins("need at least one bin per axis"));
        }
        Ok(BinGrid { origin, bin_size, nx, ny })
    }

    /// Square bins of side `bin_size` covering `region`.
    pub fn covering(region: &Rect, bin_size: f64) -> Result<Self, MetricError> {
        let nx = (region.width() / bin_size).ceil().max(1.0) as usize;
        let ny = (region.height() / bin_size).ceil().max(1.0) as usize;
        BinGrid::new(region.min, bin_size, nx, ny)
    }

    pub fn bin_of(&self, p: Vec2) -> Option<(usize, usize)> {
        let fx = (p.x - self.origin.x) / self.bin_size;
        let fy = (p.y - self.origin.y) / self.bin_size;
        if fx < 0.0 || fy < 0.0 {
            return None;
        }
        let (ix, iy) = (fx as usize, fy as usize);
        (ix < self.nx && iy < self.ny).then_some((ix, iy))
    }

    pub fn bin_center(&self, ix: usize, iy: usize) -> Vec2 {
        self.origin + Vec2::new((ix as f64 + 0.5) * self.bin_size, (iy as f64 + 0.5) * self.bin_size)
    }
}

/// Population counts: donors, recipients, transconjugants.
pub fn role_counts(s: &SnapshotRecord) -> [usize; 3] {
    s.counts()
}

const QUADRATURE: usize = 8;

/// Fraction of `region` covered by cells. Capsules straddling the region
/// edge are clipped with an 8 x 8 point rule over their bounding box.
pub fn density(s: &SnapshotRecord, region: &Rect) -> f64 {
    let area = region.area();
    if area <= 0.0 {
        return 0.0;
    }
    let mut covered = 0.0;
    for c in &s.cells {
        let body = c.body();
        let full = capsule_area(c.half_length, c.radius);
        let aabb = body.aabb();
        if region.contains_rect(&aabb) {
            covered += full;
            continue;
        }
        if !region.intersects(&aabb) {
            continue;
        }
        let (a, b) = body.segment();
        let (mut inside, mut total) = (0usize, 0usize);
        for i in 0..QUADRATURE {
            for j in 0..QUADRATURE {
                let u = (i as f64 + 0.5) / QUADRATURE as f64;
                let v = (j as f64 + 0.5) / QUADRATURE as f64;
                let local = Vec2::new((2.0 * u - 1.0) * (c.half_length + c.radius), (2.0 * v - 1.0) * c.radius);
                let p = body.local_to_world(local);
                let ab = b - a;
                let len2 = ab.dot(ab);
                let t = if len2 > 0.0 { ((p - a).dot(ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
                if p.distance(a + ab * t) <= c.radius {
                    total += 1;
                    if region.contains(p) {
                        inside += 1;
                    }
                }
            }
        }
        if total > 0 {
            covered += full * inside as f64 / total as f64;
        }
    }
    covered / area
}

/// One bin of a longitudinal profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileBin {
    /// Bin center along the axis.
    pub position: f64,
    /// Absent when the bin holds no cells.
    pub value: Option<f64>,
    pub n: usize,
}

/// Mean axial velocity per bin along the grid's x direction, minus the mean
/// of the middle bin. When the middle bin is empty the mean over all binned
/// cells is the reference instead. The grid should have `ny = 1` and span
/// the channel; `axis` is the channel direction.
pub fn velocity_gradient(s: &SnapshotRecord, bins: &BinGrid, axis: Vec2) -> Result<Vec<ProfileBin>, MetricError> {
    let mut sum = vec![0.0; bins.nx];
    let mut n = vec![0usize; bins.nx];
    for c in &s.cells {
        let along = c.center.dot(axis);
        let p = Vec2::new(along, bins.origin.y);
        if let Some((ix, _)) = bins.bin_of(p) {
            sum[ix] += c.velocity.dot(axis);
            n[ix] += 1;
        }
    }
    let binned: usize = n.iter().sum();
    if binned == 0 {
        return Err(MetricError::NoBinnedCells);
    }
    let mid = bins.nx / 2;
    let reference = if n[mid] > 0 {
        sum[mid] / n[mid] as f64
    } else {
        sum.iter().sum::<f64>() / binned as f64
    };
    Ok((0..bins.nx)
        .map(|ix| ProfileBin {
            position: bins.origin.x + (ix as f64 + 0.5) * bins.bin_size,
            value: (n[ix] > 0).then(|| sum[ix] / n[ix] as f64 - reference),
            n: n[ix],
        })
        .collect())
}

/// Default longitudinal bins: `count` bins spanning `[start, end]` along x.
pub fn axis_bins(start: f64, end: f64, count: usize) -> Result<BinGrid, MetricError> {
    if !(end > start) {
        return Err(MetricError::InvalidBins("profile span must be positive"));
    }
    BinGrid::new(Vec2::new(start, 0.0), (end - start) / count.max(1) as f64, count.max(1), 1)
}

/// Mean `|cos|` of cell orientation against `axis`.
pub fn ordering(s: &SnapshotRecord, axis: Vec2) -> Result<f64, MetricError> {
    if s.cells.is_empty() {
        return Err(MetricError::Empty(s.iteration));
    }
    let a = axis.y.atan2(axis.x);
    let total: f64 = s.cells.iter().map(|c| (c.angle - a).cos().abs()).sum();
    Ok((total / s.cells.len() as f64).clamp(0.0, 1.0))
}

/// Per-bin mean velocity, row-major with x fastest; empty bins are `None`.
pub fn vector_field(s: &SnapshotRecord, grid: &BinGrid) -> Vec<Option<Vec2>> {
    let mut sum = vec![Vec2::ZERO; grid.nx * grid.ny];
    let mut n = vec![0usize; grid.nx * grid.ny];
    for c in &s.cells {
        if let Some((ix, iy)) = grid.bin_of(c.center) {
            let k = iy * grid.nx + ix;
            sum[k] += c.velocity;
            n[k] += 1;
        }
    }
    sum.into_iter().zip(n).map(|(v, k)| (k > 0).then(|| v / k as f64)).collect()
}

/// Mean central-difference curl over bins whose four neighbors are all
/// occupied. `None` when no bin qualifies.
pub fn mean_curl(field: &[Option<Vec2>], grid: &BinGrid) -> Option<f64> {
    let at = |ix: usize, iy: usize| field[iy * grid.nx + ix];
    let h = grid.bin_size;
    let mut total = 0.0;
    let mut n = 0usize;
    for iy in 1..grid.ny.saturating_sub(1) {
        for ix in 1..grid.nx.saturating_sub(1) {
            let (Some(e), Some(w), Some(nn), Some(so)) = (at(ix + 1, iy), at(ix - 1, iy), at(ix, iy + 1), at(ix, iy - 1)) else {
                continue;
            };
            total += (e.y - w.y) / (2.0 * h) - (nn.x - so.x) / (2.0 * h);
            n += 1;
        }
    }
    (n > 0).then(|| total / n as f64)
}

/// `T / (R + T)`.
pub fn conjugation_frequency(s: &SnapshotRecord) -> Result<f64, MetricError> {
    let [_, r, t] = s.counts();
    if r + t == 0 {
        return Err(MetricError::UndefinedFrequency(s.iteration));
    }
    Ok(t as f64 / (r + t) as f64)
}

/// Fraction of recipients with no donor surface within
/// `contact_radius + width`.
pub fn isolation_index(s: &SnapshotRecord, contact_radius: f64, width: f64) -> Result<f64, MetricError> {
    let reach = contact_radius + width;
    let recipients: Vec<_> = s.cells.iter().filter(|c| c.role == Role::Recipient).collect();
    if recipients.is_empty() {
        return Err(MetricError::NoRecipients(s.iteration));
    }
    let donors: Vec<_> = s.cells.iter().filter(|c| c.role == Role::Donor).map(|c| c.body()).collect();
    if donors.is_empty() {
        return Ok(1.0);
    }
    let max_r = donors.iter().map(|b| b.bounding_radius()).fold(0.0, f64::max);
    let mut grid = SpatialGrid::new();
    grid.rebuild(donors.iter().map(|b| b.center), 2.0 * max_r + reach);
    let mut isolated = 0usize;
    for r in &recipients {
        let body = r.body();
        let mut found = false;
        grid.for_each_near(body.center, body.bounding_radius() + max_r + reach, |j| {
            if !found && surface_distance(&body, &donors[j]) <= reach {
                found = true;
            }
        });
        if !found {
            isolated += 1;
        }
    }
    Ok(isolated as f64 / recipients.len() as f64)
}

/// Mean, sample standard deviation and count.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl Stats {
    pub fn of(values: &[f64]) -> Option<Stats> {
        if values.is_empty() {
            return None;
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(Stats { mean, std, n })
    }

    /// Standard error of the mean.
    pub fn sem(&self) -> f64 {
        if self.n > 0 {
            self.std / (self.n as f64).sqrt()
        } else {
            0.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snapshot::CellRecord;

    fn cell(id: u64, role: Role, x: f64, y: f64, angle: f64, v: Vec2) -> CellRecord {
        CellRecord {
            id,
            strain: 0,
            center: Vec2::new(x, y),
            angle,
            half_length: 7.5,
            radius: 2.5,
            velocity: v,
            role,
            conjugating: false,
            program_readout: 0.0,
            program: Vec::new(),
        }
    }

    fn snap(cells: Vec<CellRecord>) -> SnapshotRecord {
        SnapshotRecord {
            iteration: 0,
            minutes: 0.0,
            cells,
            springs: Vec::new(),
        }
    }

    #[test]
    fn density_of_one_contained_capsule() {
        let region = Rect::new(0.0, 0.0, 100.0, 100.0);
        assert_eq!(density(&snap(vec![]), &region), 0.0);
        let s = snap(vec![cell(0, Role::Donor, 50.0, 50.0, 0.3, Vec2::ZERO)]);
        let expected = capsule_area(7.5, 2.5) / 10_000.0;
        assert!((density(&s, &region) - expected).abs() < 1e-15);
    }

    #[test]
    fn density_clips_straddling_capsule_about_half() {
        let region = Rect::new(0.0, -50.0, 100.0, 50.0);
        let s = snap(vec![cell(0, Role::Donor, 0.0, 0.0, 0.0, Vec2::ZERO)]);
        let half = 0.5 * capsule_area(7.5, 2.5) / region.area();
        assert!((density(&s, &region) - half).abs() < 0.05 * half);
    }

    #[test]
    fn ordering_extremes() {
        let aligned = snap(vec![cell(0, Role::Donor, 0.0, 0.0, 0.0, Vec2::ZERO), cell(1, Role::Donor, 0.0, 9.0, std::f64::consts::PI, Vec2::ZERO)]);
        assert!((ordering(&aligned, Vec2::X).unwrap() - 1.0).abs() < 1e-12);
        let perpendicular = snap(vec![cell(0, Role::Donor, 0.0, 0.0, std::f64::consts::FRAC_PI_2, Vec2::ZERO)]);
        assert!(ordering(&perpendicular, Vec2::X).unwrap() < 1e-12);
        assert_eq!(ordering(&snap(vec![]), Vec2::X), Err(MetricError::Empty(0)));
    }

    #[test]
    fn frequency_cases() {
        let mut cells = Vec::new();
        for i in 0..100 {
            cells.push(cell(i, Role::Donor, 0.0, 0.0, 0.0, Vec2::ZERO));
        }
        for i in 100..160 {
            cells.push(cell(i, Role::Recipient, 0.0, 0.0, 0.0, Vec2::ZERO));
        }
        for i in 160..200 {
            cells.push(cell(i, Role::Transconjugant, 0.0, 0.0, 0.0, Vec2::ZERO));
        }
        assert!((conjugation_frequency(&snap(cells)).unwrap() - 0.4).abs() < 1e-15);
        let only_d = snap(vec![cell(0, Role::Donor, 0.0, 0.0, 0.0, Vec2::ZERO)]);
        assert_eq!(conjugation_frequency(&only_d), Err(MetricError::UndefinedFrequency(0)));
        let only_r = snap(vec![cell(0, Role::Recipient, 0.0, 0.0, 0.0, Vec2::ZERO)]);
        assert_eq!(conjugation_frequency(&only_r), Ok(0.0));
        let only_t = snap(vec![cell(0, Role::Transconjugant, 0.0, 0.0, 0.0, Vec2::ZERO)]);
        assert_eq!(conjugation_frequency(&only_t), Ok(1.0));
    }

    #[test]
    fn stationary_profile_is_zero_and_gaps_are_absent() {
        let cells = (0..10).map(|i| cell(i, Role::Recipient, 10.0 + 20.0 * i as f64, 5.0, 0.0, Vec2::ZERO)).collect();
        let bins = axis_bins(0.0, 400.0, 20).unwrap();
        let p = velocity_gradient(&snap(cells), &bins, Vec2::X).unwrap();
        assert_eq!(p.len(), 20);
        for b in &p[..10] {
            assert_eq!(b.value, Some(0.0));
        }
        for b in &p[10..] {
            assert_eq!(b.value, None);
        }
    }

    #[test]
    fn symmetric_expansion_gives_antisymmetric_profile() {
        let cells = (0..21)
            .map(|i| {
                let x = 5.0 + 10.0 * i as f64;
                cell(i, Role::Recipient, x, 0.0, 0.0, Vec2::new(0.01 * (x - 105.0), 0.0))
            })
            .collect();
        let bins = axis_bins(0.0, 210.0, 21).unwrap();
        let p = velocity_gradient(&snap(cells), &bins, Vec2::X).unwrap();
        for k in 0..21 {
            let (a, b) = (p[k].value.unwrap(), p[20 - k].value.unwrap());
            assert!((a + b).abs() < 1e-12);
        }
        assert!(p[0].value.unwrap() < 0.0 && p[20].value.unwrap() > 0.0);
    }

    #[test]
    fn vector_field_of_rotation_has_its_curl() {
        let c = Vec2::new(50.0, 50.0);
        let w = 0.01;
        let mut cells = Vec::new();
        let mut id = 0;
        for i in 0..20 {
            for j in 0..20 {
                let p = Vec2::new(2.5 + 5.0 * i as f64, 2.5 + 5.0 * j as f64);
                cells.push(cell(id, Role::Recipient, p.x, p.y, 0.0, (p - c).perp() * w));
                id += 1;
            }
        }
        let grid = BinGrid::covering(&Rect::new(0.0, 0.0, 100.0, 100.0), 10.0).unwrap();
        let field = vector_field(&snap(cells), &grid);
        assert!(field.iter().all(Option::is_some));
        let v = field[0].unwrap();
        assert!((v - (grid.bin_center(0, 0) - c).perp() * w).length() < 1e-12);
        let curl = mean_curl(&field, &grid).unwrap();
        assert!((curl - 2.0 * w).abs() < 1e-12, "{curl}");
    }

    #[test]
    fn isolation_cases() {
        let beside = snap(vec![
            cell(0, Role::Donor, 0.0, 0.0, 0.0, Vec2::ZERO),
            cell(1, Role::Recipient, 0.0, 6.0, 0.0, Vec2::ZERO),
        ]);
        assert_eq!(isolation_index(&beside, 1.0, 5.0), Ok(0.0));
        let walled = snap(vec![
            cell(0, Role::Donor, 0.0, 0.0, 0.0, Vec2::ZERO),
            cell(1, Role::Transconjugant, 0.0, 5.0, 0.0, Vec2::ZERO),
            cell(2, Role::Transconjugant, 0.0, 10.0, 0.0, Vec2::ZERO),
            cell(3, Role::Recipient, 0.0, 15.0, 0.0, Vec2::ZERO),
        ]);
        assert_eq!(isolation_index(&walled, 1.0, 5.0), Ok(1.0));
        assert!(isolation_index(&snap(vec![]), 1.0, 5.0).is_err());
    }

    #[test]
    fn stats_of_values() {
        let s = Stats::of(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.std, 1.0);
        assert!(Stats::of(&[]).is_none());
    }
}
