//! Uniform-grid bucketing for fixed-radius neighbor counts.

use crate::geometry::{Domain, Point};

const MAX_CELLS_PER_AXIS: usize = 512;

/// Bucket grid over a rectangle whose cells are at least `radius` wide, so
/// every neighbor of a point lies in its own or one of the eight adjacent
/// cells.
#[derive(Debug, Clone)]
pub struct CellList {
    x0: f64,
    y0: f64,
    sx: f64,
    sy: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<u32>>,
    cell_of: Vec<usize>,
}

impl CellList {
    pub fn new(domain: &Domain, radius: f64, points: &[Point]) -> Self {
        let span = domain.width().max(domain.height());
        let side = radius.max(span / MAX_CELLS_PER_AXIS as f64);
        // floor() keeps every cell at least `side` wide
        let nx = ((domain.width() / side).floor() as usize).clamp(1, MAX_CELLS_PER_AXIS);
        let ny = ((domain.height() / side).floor() as usize).clamp(1, MAX_CELLS_PER_AXIS);
        let mut list = Self {
            x0: domain.xmin(),
            y0: domain.ymin(),
            sx: nx as f64 / domain.width(),
            sy: ny as f64 / domain.height(),
            nx,
            ny,
            cells: vec![Vec::new(); nx * ny],
            cell_of: Vec::with_capacity(points.len()),
        };
        for (i, p) in points.iter().enumerate() {
            let c = list.cell_index(*p);
            list.cells[c].push(i as u32);
            list.cell_of.push(c);
        }
        list
    }

    #[inline]
    fn coords(&self, p: Point) -> (usize, usize) {
        let ix = (((p.x - self.x0) * self.sx).floor().max(0.0) as usize).min(self.nx - 1);
        let iy = (((p.y - self.y0) * self.sy).floor().max(0.0) as usize).min(self.ny - 1);
        (ix, iy)
    }

    #[inline]
    fn cell_index(&self, p: Point) -> usize {
        let (ix, iy) = self.coords(p);
        iy * self.nx + ix
    }

    /// Number of points `j != exclude` with squared distance to `p` below `r2`.
    pub fn count_within(&self, points: &[Point], p: Point, r2: f64, exclude: Option<usize>) -> usize {
        let (ix, iy) = self.coords(p);
        let skip = exclude.map_or(u32::MAX, |e| e as u32);
        let mut count = 0;
        for cy in iy.saturating_sub(1)..=(iy + 1).min(self.ny - 1) {
            for cx in ix.saturating_sub(1)..=(ix + 1).min(self.nx - 1) {
                for &j in &self.cells[cy * self.nx + cx] {
                    if j != skip && points[j as usize].dist2(&p) < r2 {
                        count += 1;
                    }
                }
            }
        }
        count
    }

    /// Records that point `i` now sits at `to`.
    pub fn relocate(&mut self, i: usize, to: Point) {
        let new_cell = self.cell_index(to);
        let old_cell = self.cell_of[i];
        if new_cell == old_cell {
            return;
        }
        let bucket = &mut self.cells[old_cell];
        let pos = bucket
            .iter()
            .position(|&j| j as usize == i)
            .expect("cell list out of sync");
        bucket.swap_remove(pos);
        self.cells[new_cell].push(i as u32);
        self.cell_of[i] = new_cell;
    }

    /// Number of unordered pairs closer than `sqrt(r2)`.
    pub fn count_pairs(&self, points: &[Point], r2: f64) -> usize {
        let twice: usize = points
            .iter()
            .enumerate()
            .map(|(i, p)| self.count_within(points, *p, r2, Some(i)))
            .sum();
        twice / 2
    }
}
