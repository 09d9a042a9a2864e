//! Uniform spatial hash over body centers.

use super::vec2::Vec2;

/// Dense uniform grid in compressed-row form, rebuilt every query round.
///
/// The cell size is coarsened when the occupied extent would need more than
/// a few cells per point, so memory stays linear in the point count.
#[derive(Debug, Default, Clone)]
pub struct SpatialGrid {
    origin: Vec2,
    cell: f64,
    nx: usize,
    ny: usize,
    starts: Vec<u32>,
    entries: Vec<u32>,
    point_cell: Vec<(u32, u32)>,
}

impl SpatialGrid {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    pub fn rebuild<I: Iterator<Item = Vec2> + Clone>(&mut self, points: I, cell_size: f64) {
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        let mut n = 0usize;
        for p in points.clone() {
            lo = lo.min(p);
            hi = hi.max(p);
            n += 1;
        }
        self.point_cell.clear();
        self.entries.clear();
        self.starts.clear();
        if n == 0 {
            self.nx = 0;
            self.ny = 0;
            return;
        }
        let mut cell = cell_size.max(1e-9);
        let max_cells = (4 * n + 64) as f64;
        loop {
            let nx = ((hi.x - lo.x) / cell).floor() + 1.0;
            let ny = ((hi.y - lo.y) / cell).floor() + 1.0;
            if nx * ny <= max_cells {
                self.nx = nx as usize;
                self.ny = ny as usize;
                break;
            }
            cell *= 2.0;
        }
        self.cell = cell;
        self.origin = lo;
        let total = self.nx * self.ny;
        self.starts.resize(total + 1, 0);
        for p in points.clone() {
            let (cx, cy) = self.cell_of(p);
            self.point_cell.push((cx as u32, cy as u32));
            self.starts[cy * self.nx + cx + 1] += 1;
        }
        for k in 0..total {
            self.starts[k + 1] += self.starts[k];
        }
        self.entries.resize(n, 0);
        let mut fill = self.starts.clone();
        for (i, &(cx, cy)) in self.point_cell.iter().enumerate() {
            let k = cy as usize * self.nx + cx as usize;
            self.entries[fill[k] as usize] = i as u32;
            fill[k] += 1;
        }
    }

    #[inline]
    fn cell_of(&self, p: Vec2) -> (usize, usize) {
        let cx = (((p.x - self.origin.x) / self.cell).floor().max(0.0) as usize).min(self.nx - 1);
        let cy = (((p.y - self.origin.y) / self.cell).floor().max(0.0) as usize).min(self.ny - 1);
        (cx, cy)
    }

    /// Visit every point stored in the 3×3 block of cells around point `i`.
    /// Includes `i` itself.
    #[inline]
    pub fn for_each_neighbor<F: FnMut(usize)>(&self, i: usize, mut f: F) {
        let (cx, cy) = self.point_cell[i];
        let (cx, cy) = (cx as usize, cy as usize);
        let x0 = cx.saturating_sub(1);
        let x1 = (cx + 1).min(self.nx - 1);
        let y0 = cy.saturating_sub(1);
        let y1 = (cy + 1).min(self.ny - 1);
        for y in y0..=y1 {
            let row = y * self.nx;
            let a = self.starts[row + x0] as usize;
            let b = self.starts[row + x1 + 1] as usize;
            for &j in &self.entries[a..b] {
                f(j as usize);
            }
        }
    }

    /// Visit every point whose cell lies within `radius` cells-worth of `p`.
    pub fn for_each_near<F: FnMut(usize)>(&self, p: Vec2, radius: f64, mut f: F) {
        if self.nx == 0 {
            return;
        }
        let reach = (radius / self.cell).ceil() as i64;
        let cx = ((p.x - self.origin.x) / self.cell).floor() as i64;
        let cy = ((p.y - self.origin.y) / self.cell).floor() as i64;
        let x0 = (cx - reach).max(0);
        let x1 = (cx + reach).min(self.nx as i64 - 1);
        let y0 = (cy - reach).max(0);
        let y1 = (cy + reach).min(self.ny as i64 - 1);
        if x0 > x1 || y0 > y1 {
            return;
        }
        for y in y0..=y1 {
            let row = y as usize * self.nx;
            let a = self.starts[row + x0 as usize] as usize;
            let b = self.starts[row + x1 as usize + 1] as usize;
            for &j in &self.entries[a..b] {
                f(j as usize);
            }
        }
    }
}
