//! Discretized stable allocation.
//!
//! Space is replaced by a grid of cells of side `h` and every center may
//! claim `quota = round(alpha / h^d)` cells. The engine grows all balls at
//! once: (cell, center) pairs are visited in increasing order of
//! `(distance, center index, cell index)` and a cell goes to the first
//! unsated center whose ball reaches it. Distances are measured from centers
//! to cell midpoints.
//!
//! Pairs are generated lazily. Each center owns a frontier of candidate cells
//! filled one Chebyshev ring at a time, and a global heap holds only the
//! current head of every active center.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use crate::error::{Error, Result};
use crate::lattice::{Mask, Shape};
use crate::pointprocess::{CenterSet, Region, Topology};

/// Uniform cell decomposition of a region.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    region: Region,
    h: f64,
    shape: Shape,
}

impl Grid {
    /// `h` must divide every side length (up to a relative `1e-9`).
    pub fn new(region: &Region, h: f64) -> Result<Grid> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::Parameter("cell size must be positive"));
        }
        let mut dims = Vec::with_capacity(region.dim());
        for &side in region.sides() {
            let n = libm::round(side / h);
            if n < 1.0 || libm::fabs(n * h - side) > 1e-9 * side {
                return Err(Error::CellSize { h, side });
            }
            dims.push(n as usize);
        }
        Ok(Grid {
            region: region.clone(),
            h,
            shape: Shape::new(&dims),
        })
    }

    #[inline]
    pub fn region(&self) -> &Region {
        &self.region
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.h
    }

    #[inline]
    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.shape.dim()
    }

    #[inline]
    pub fn cells_per_axis(&self) -> &[usize] {
        self.shape.dims()
    }

    #[inline]
    pub fn num_cells(&self) -> usize {
        self.shape.len()
    }

    pub fn cell_volume(&self) -> f64 {
        libm::pow(self.h, self.dim() as f64)
    }

    #[inline]
    pub fn axis_center(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.h
    }

    pub fn cell_center_into(&self, index: usize, out: &mut [f64]) {
        let mut rest = index;
        for (axis, &n) in self.shape.dims().iter().enumerate() {
            out[axis] = self.axis_center(rest % n);
            rest /= n;
        }
    }

    pub fn cell_center(&self, index: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.cell_center_into(index, &mut out);
        out
    }

    /// Grid coordinates of the cell containing `point`.
    pub fn cell_of(&self, point: &[f64]) -> Vec<usize> {
        point
            .iter()
            .zip(self.shape.dims())
            .map(|(&x, &n)| {
                let k = libm::floor(x / self.h);
                if k < 0.0 {
                    0
                } else {
                    (k as usize).min(n - 1)
                }
            })
            .collect()
    }
}

/// Number of cells a center with appetite `alpha` may claim.
pub fn quota_for(alpha: f64, grid: &Grid) -> u64 {
    libm::round(alpha / grid.cell_volume()) as u64
}

pub const UNCLAIMED: i32 = -1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Owner {
    Unclaimed,
    Center(usize),
    /// Held by the given center, but at least one other unsated center was at
    /// exactly the same distance when the cell was captured.
    Disputed(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    grid: Grid,
    owner: Vec<i32>,
    disputed: Vec<bool>,
    claimed: Vec<u64>,
    quota: u64,
    alpha: f64,
}

impl Allocation {
    /// Assembles an allocation from raw parts, checking the capacity
    /// invariants. Per-center counts are recomputed from `owner`.
    pub fn from_parts(
        grid: Grid,
        num_centers: usize,
        owner: Vec<i32>,
        disputed: Vec<bool>,
        quota: u64,
        alpha: f64,
    ) -> Result<Allocation> {
        if owner.len() != grid.num_cells() || disputed.len() != owner.len() {
            return Err(Error::Parameter("owner map does not match grid"));
        }
        let mut claimed = vec![0u64; num_centers];
        for (&o, &dis) in owner.iter().zip(&disputed) {
            if o == UNCLAIMED {
                if dis {
                    return Err(Error::Parameter("unclaimed cell flagged as disputed"));
                }
                continue;
            }
            if o < 0 || o as usize >= num_centers {
                return Err(Error::Parameter("owner index out of range"));
            }
            claimed[o as usize] += 1;
        }
        if claimed.iter().any(|&c| c > quota) {
            return Err(Error::Parameter("center exceeds quota"));
        }
        Ok(Allocation {
            grid,
            owner,
            disputed,
            claimed,
            quota,
            alpha,
        })
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    #[inline]
    pub fn quota(&self) -> u64 {
        self.quota
    }

    /// Appetite actually enforced after rounding the quota.
    pub fn realized_appetite(&self) -> f64 {
        self.quota as f64 * self.grid.cell_volume()
    }

    #[inline]
    pub fn num_centers(&self) -> usize {
        self.claimed.len()
    }

    #[inline]
    pub fn owner(&self, cell: usize) -> Owner {
        match self.owner[cell] {
            UNCLAIMED => Owner::Unclaimed,
            o if self.disputed[cell] => Owner::Disputed(o as usize),
            o => Owner::Center(o as usize),
        }
    }

    /// Owner per cell, `-1` for unclaimed.
    pub fn owners(&self) -> &[i32] {
        &self.owner
    }

    pub fn disputed_flags(&self) -> &[bool] {
        &self.disputed
    }

    pub fn claimed_counts(&self) -> &[u64] {
        &self.claimed
    }

    #[inline]
    pub fn is_sated(&self, center: usize) -> bool {
        self.claimed[center] == self.quota
    }

    pub fn num_disputed(&self) -> usize {
        self.disputed.iter().filter(|&&d| d).count()
    }

    pub fn num_claimed_cells(&self) -> usize {
        self.owner.iter().filter(|&&o| o != UNCLAIMED).count()
    }

    /// Cells held by `center`, disputed ones included.
    pub fn territory(&self, center: usize) -> Vec<usize> {
        let c = center as i32;
        (0..self.owner.len()).filter(|&k| self.owner[k] == c).collect()
    }
}

struct Frontier {
    home: Vec<usize>,
    lo: Vec<i64>,
    hi: Vec<i64>,
    next_ring: usize,
    max_ring: usize,
    heap: BinaryHeap<Reverse<(u64, usize)>>,
}

struct Scratch {
    offset: Vec<i64>,
    cell: Vec<f64>,
}

/// Cells at Chebyshev index distance `k` from the home cell lie at
/// Euclidean distance at least `(k - 1) h` from any point of the home cell.
#[inline]
fn ring_lower_bound2(k: usize, h: f64) -> f64 {
    if k <= 1 {
        0.0
    } else {
        let r = (k - 1) as f64 * h;
        r * r
    }
}

struct Engine<'a> {
    grid: &'a Grid,
    centers: &'a CenterSet,
    owner: Vec<i32>,
    capture: Vec<f64>,
    disputed: Vec<bool>,
    claimed: Vec<u64>,
    fronts: Vec<Frontier>,
    scratch: Scratch,
}

impl<'a> Engine<'a> {
    fn new(grid: &'a Grid, centers: &'a CenterSet) -> Self {
        let n = grid.num_cells();
        let dims = grid.cells_per_axis();
        let torus = grid.region().topology() == Topology::Torus;
        let fronts = centers
            .iter()
            .map(|p| {
                let home = grid.cell_of(p);
                let (lo, hi): (Vec<i64>, Vec<i64>) = home
                    .iter()
                    .zip(dims)
                    .map(|(&c, &n)| {
                        if torus {
                            (-(((n - 1) / 2) as i64), (n / 2) as i64)
                        } else {
                            (-(c as i64), (n - 1 - c) as i64)
                        }
                    })
                    .unzip();
                let max_ring = lo
                    .iter()
                    .zip(&hi)
                    .map(|(&l, &h)| (-l).max(h) as usize)
                    .max()
                    .unwrap_or(0);
                Frontier {
                    home,
                    lo,
                    hi,
                    next_ring: 0,
                    max_ring,
                    heap: BinaryHeap::new(),
                }
            })
            .collect();
        let d = grid.dim();
        Engine {
            grid,
            centers,
            owner: vec![UNCLAIMED; n],
            capture: vec![f64::INFINITY; n],
            disputed: vec![false; n],
            claimed: vec![0; centers.len()],
            fronts,
            scratch: Scratch {
                offset: vec![0; d],
                cell: vec![0.0; d],
            },
        }
    }

    /// Pushes ring `k` of center `c` onto its frontier, skipping cells that are
    /// already taken at a different distance (such pairs can never matter).
    fn generate_ring(&mut self, c: usize) {
        let front = &mut self.fronts[c];
        let k = front.next_ring as i64;
        front.next_ring += 1;
        let d = self.grid.dim();
        let point = self.centers.center(c);
        let region = self.grid.region();
        let dims = self.grid.cells_per_axis();
        let strides = self.grid.shape().strides();
        let off = &mut self.scratch.offset;
        let cell = &mut self.scratch.cell;

        let mut visit = |off: &[i64], heap: &mut BinaryHeap<Reverse<(u64, usize)>>, home: &[usize]| {
            let mut index = 0usize;
            for axis in 0..d {
                let n = dims[axis] as i64;
                let g = (home[axis] as i64 + off[axis]).rem_euclid(n) as usize;
                index += g * strides[axis];
                cell[axis] = (g as f64 + 0.5) * self.grid.h();
            }
            let d2 = region.dist2(point, cell);
            if self.owner[index] == UNCLAIMED || self.capture[index] == d2 {
                heap.push(Reverse((d2.to_bits(), index)));
            }
        };

        if k == 0 {
            off.iter_mut().for_each(|o| *o = 0);
            visit(off, &mut front.heap, &front.home);
            return;
        }
        for lead in 0..d {
            for sign in [-1i64, 1] {
                let v = sign * k;
                if v < front.lo[lead] || v > front.hi[lead] {
                    continue;
                }
                // axes before `lead` stay strictly inside the ring, so each
                // ring cell is produced by exactly one lead axis
                let range = |axis: usize| -> (i64, i64) {
                    let r = if axis < lead { k - 1 } else { k };
                    (front.lo[axis].max(-r), front.hi[axis].min(r))
                };
                let mut empty = false;
                for axis in 0..d {
                    if axis == lead {
                        off[axis] = v;
                    } else {
                        let (a, b) = range(axis);
                        if a > b {
                            empty = true;
                        }
                        off[axis] = a;
                    }
                }
                if empty {
                    continue;
                }
                loop {
                    visit(off, &mut front.heap, &front.home);
                    let mut axis = 0;
                    loop {
                        if axis == d {
                            break;
                        }
                        if axis == lead {
                            axis += 1;
                            continue;
                        }
                        let (a, b) = range(axis);
                        if off[axis] < b {
                            off[axis] += 1;
                            break;
                        }
                        off[axis] = a;
                        axis += 1;
                    }
                    if axis == d {
                        break;
                    }
                }
            }
        }
    }

    /// Next pair of center `c` that can still matter, with distance at most
    /// `limit`.
    fn head(&mut self, c: usize, limit: f64) -> Option<(u64, usize)> {
        let h = self.grid.h();
        loop {
            loop {
                let front = &self.fronts[c];
                if front.next_ring > front.max_ring {
                    break;
                }
                let lb = ring_lower_bound2(front.next_ring, h);
                if lb > limit {
                    break;
                }
                match front.heap.peek() {
                    Some(Reverse((top, _))) if lb > f64::from_bits(*top) => break,
                    _ => self.generate_ring(c),
                }
            }
            let front = &mut self.fronts[c];
            let &Reverse((d, cell)) = front.heap.peek()?;
            if f64::from_bits(d) > limit {
                return None;
            }
            if self.owner[cell] != UNCLAIMED && self.capture[cell].to_bits() != d {
                front.heap.pop();
                continue;
            }
            return Some((d, cell));
        }
    }

    fn run(&mut self, quota: u64) {
        let total = self.grid.num_cells();
        let mut taken = 0usize;
        let mut global: BinaryHeap<Reverse<(u64, usize, usize)>> = BinaryHeap::new();
        for c in 0..self.fronts.len() {
            if let Some((d, cell)) = self.head(c, f64::INFINITY) {
                global.push(Reverse((d, c, cell)));
            }
        }
        let mut limit = f64::INFINITY;
        while let Some(Reverse((d, c, cell))) = global.pop() {
            self.fronts[c].heap.pop();
            if self.owner[cell] == UNCLAIMED {
                self.owner[cell] = c as i32;
                self.capture[cell] = f64::from_bits(d);
                self.claimed[c] += 1;
                taken += 1;
                if taken == total {
                    // only exact ties with the last capture remain relevant
                    limit = f64::from_bits(d);
                }
            } else if self.owner[cell] != c as i32 && self.capture[cell].to_bits() == d {
                self.disputed[cell] = true;
            }
            if self.claimed[c] < quota {
                if let Some((d, next)) = self.head(c, limit) {
                    global.push(Reverse((d, c, next)));
                }
            }
        }
    }
}

/// Computes the stable allocation of `grid` to `centers` with appetite
/// `alpha`.
pub fn compute_allocation(centers: &CenterSet, grid: &Grid, alpha: f64) -> Result<Allocation> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::Appetite(alpha));
    }
    if centers.region() != grid.region() {
        return Err(Error::RegionMismatch);
    }
    let quota = quota_for(alpha, grid);
    let mut engine = Engine::new(grid, centers);
    if quota > 0 {
        engine.run(quota);
    }
    Ok(Allocation {
        grid: grid.clone(),
        owner: engine.owner,
        disputed: engine.disputed,
        claimed: engine.claimed,
        quota,
        alpha,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnstablePair {
    pub cell: usize,
    pub center: usize,
}

/// Exhaustive stability check over all (cell, center) pairs.
///
/// A cell desires a center if it is unclaimed or strictly closer to it than
/// to its owner; a center covets a cell if it is unsated or the cell is
/// strictly closer than some cell of its territory. Disputed cells are
/// exempt. Cost is `O(cells * centers)`; this is an oracle for the engine,
/// not a replacement.
pub fn verify_stability(alloc: &Allocation, centers: &CenterSet) -> Result<Vec<UnstablePair>> {
    let grid = alloc.grid();
    if centers.region() != grid.region() || centers.len() != alloc.num_centers() {
        return Err(Error::RegionMismatch);
    }
    let region = grid.region();
    let n = grid.num_cells();
    let nc = centers.len();
    let mut cell = vec![0.0; grid.dim()];

    // farthest territory distance of each sated center; unsated covets all
    let mut reach = vec![f64::NEG_INFINITY; nc];
    for k in 0..n {
        if let Owner::Center(o) = alloc.owner(k) {
            grid.cell_center_into(k, &mut cell);
            let d2 = region.dist2(centers.center(o), &cell);
            if d2 > reach[o] {
                reach[o] = d2;
            }
        }
    }
    for (c, r) in reach.iter_mut().enumerate() {
        if !alloc.is_sated(c) {
            *r = f64::INFINITY;
        }
    }

    let mut out = Vec::new();
    for k in 0..n {
        let owner = alloc.owner(k);
        if matches!(owner, Owner::Disputed(_)) {
            continue;
        }
        grid.cell_center_into(k, &mut cell);
        let own_d2 = match owner {
            Owner::Center(o) => region.dist2(centers.center(o), &cell),
            _ => f64::INFINITY,
        };
        for (c, p) in centers.iter().enumerate() {
            if owner == Owner::Center(c) {
                continue;
            }
            let d2 = region.dist2(p, &cell);
            let desires = d2 < own_d2;
            let covets = reach[c] == f64::INFINITY || d2 < reach[c];
            if desires && covets {
                out.push(UnstablePair { cell: k, center: c });
            }
        }
    }
    Ok(out)
}

/// Cells with an owner; disputed cells count as claimed.
pub fn claimed_set(alloc: &Allocation) -> Mask {
    let grid = alloc.grid();
    Mask::from_cells(
        grid.shape().clone(),
        grid.region().is_torus(),
        alloc.owners().iter().map(|&o| o != UNCLAIMED).collect(),
    )
}

/// Fraction of sated centers; `1.0` when there are no centers.
pub fn sated_fraction(alloc: &Allocation) -> f64 {
    let n = alloc.num_centers();
    if n == 0 {
        return 1.0;
    }
    (0..n).filter(|&c| alloc.is_sated(c)).count() as f64 / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointprocess::sample_poisson;

    fn torus(side: f64) -> Region {
        Region::cube(2, side, Topology::Torus).unwrap()
    }

    #[test]
    fn grid_requires_divisible_cell_size() {
        let r = torus(10.0);
        let g = Grid::new(&r, 0.05).unwrap();
        assert_eq!(g.cells_per_axis(), &[200, 200]);
        assert!((g.cell_volume() - 0.0025).abs() < 1e-15);
        assert!(matches!(Grid::new(&r, 0.3), Err(Error::CellSize { .. })));
    }

    #[test]
    fn zero_appetite_claims_nothing() {
        let r = torus(10.0);
        let g = Grid::new(&r, 0.1).unwrap();
        let c = sample_poisson(&r, 1.0, 5).unwrap();
        let a = compute_allocation(&c, &g, 0.0).unwrap();
        assert_eq!(a.quota(), 0);
        assert_eq!(a.num_claimed_cells(), 0);
        assert_eq!(sated_fraction(&a), 1.0);
        assert_eq!(claimed_set(&a).count(), 0);
    }

    #[test]
    fn negative_appetite_rejected() {
        let r = torus(10.0);
        let g = Grid::new(&r, 0.1).unwrap();
        let c = sample_poisson(&r, 1.0, 5).unwrap();
        assert_eq!(compute_allocation(&c, &g, -0.5).unwrap_err(), Error::Appetite(-0.5));
    }

    #[test]
    fn single_center_takes_nearest_cells() {
        let r = torus(10.0);
        let g = Grid::new(&r, 0.05).unwrap();
        let c = CenterSet::from_points(r.clone(), &[[0.0, 0.0]]).unwrap();
        let a = compute_allocation(&c, &g, 1.0).unwrap();
        assert_eq!(a.quota(), 400);
        assert_eq!(a.num_claimed_cells(), 400);
        let mut dists: Vec<f64> = (0..g.num_cells())
            .map(|k| r.dist2(c.center(0), &g.cell_center(k)))
            .collect();
        let taken_max = a
            .territory(0)
            .iter()
            .map(|&k| dists[k])
            .fold(0.0, f64::max);
        dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(taken_max, dists[399]);

        // compare with the disk of area 1
        let radius2 = 1.0 / core::f64::consts::PI;
        let sym = (0..g.num_cells())
            .filter(|&k| {
                let inside = r.dist2(c.center(0), &g.cell_center(k)) <= radius2;
                inside != (a.owners()[k] == 0)
            })
            .count();
        // perimeter of the disk is about 3.5, i.e. ~71 cells of side 0.05
        assert!(sym <= 71, "symmetric difference {sym}");
    }

    #[test]
    fn distant_centers_do_not_interact() {
        let r = torus(20.0);
        let g = Grid::new(&r, 0.05).unwrap();
        let c = CenterSet::from_points(r, &[[5.0, 5.0], [15.0, 5.0]]).unwrap();
        let a = compute_allocation(&c, &g, 1.0).unwrap();
        assert_eq!(a.claimed_counts(), &[400, 400]);
        assert_eq!(a.num_disputed(), 0);
        assert!(verify_stability(&a, &c).unwrap().is_empty());
    }

    #[test]
    fn overfull_center_is_unsated() {
        let r = torus(2.0);
        let g = Grid::new(&r, 0.1).unwrap();
        let c = CenterSet::from_points(r, &[[0.3, 1.1]]).unwrap();
        let a = compute_allocation(&c, &g, 8.0).unwrap();
        assert_eq!(a.num_claimed_cells(), 400);
        assert_eq!(sated_fraction(&a), 0.0);
    }

    #[test]
    fn box_topology_covers_whole_window() {
        let r = Region::cube(2, 3.0, Topology::Box).unwrap();
        let g = Grid::new(&r, 0.1).unwrap();
        let c = CenterSet::from_points(r, &[[0.05, 0.05], [2.9, 2.9]]).unwrap();
        let a = compute_allocation(&c, &g, 10.0).unwrap();
        assert_eq!(a.num_claimed_cells(), 900);
        assert!(verify_stability(&a, &c).unwrap().is_empty());
    }

    #[test]
    fn equidistant_centers_mark_disputes() {
        let r = Region::cube(2, 4.0, Topology::Box).unwrap();
        let g = Grid::new(&r, 0.5).unwrap();
        // the column of cells at x = 2.25 is equidistant from both centers
        let c = CenterSet::from_points(r.clone(), &[[1.25, 2.0], [3.25, 2.0]]).unwrap();
        let a = compute_allocation(&c, &g, 16.0).unwrap();
        assert_eq!(a.num_disputed(), 8);
        assert!(a.disputed_flags().iter().zip(a.owners()).all(|(&d, &o)| !d || o == 0));
        assert!(verify_stability(&a, &c).unwrap().is_empty());
    }

    #[test]
    fn unsated_center_and_unclaimed_cell_are_unstable() {
        let r = Region::cube(2, 1.0, Topology::Box).unwrap();
        let g = Grid::new(&r, 0.5).unwrap();
        let c = CenterSet::from_points(r, &[[0.1, 0.1]]).unwrap();
        let a = Allocation::from_parts(g, 1, vec![0, 0, 0, UNCLAIMED], vec![false; 4], 4, 1.0)
            .unwrap();
        assert!(!a.is_sated(0));
        assert_eq!(
            verify_stability(&a, &c).unwrap(),
            vec![UnstablePair { cell: 3, center: 0 }]
        );
    }

    #[test]
    fn swapping_near_and_far_cells_breaks_stability() {
        let r = torus(10.0);
        let g = Grid::new(&r, 0.1).unwrap();
        let c = CenterSet::from_points(r, &[[2.0, 5.0], [3.5, 5.0]]).unwrap();
        let a = compute_allocation(&c, &g, 1.0).unwrap();
        assert!(verify_stability(&a, &c).unwrap().is_empty());
        let cell_near0 = g.shape().index(&[19, 49]);
        let cell_far1 = g.shape().index(&[40, 50]);
        assert_eq!(a.owners()[cell_near0], 0);
        assert_eq!(a.owners()[cell_far1], 1);
        let mut owners = a.owners().to_vec();
        owners.swap(cell_near0, cell_far1);
        let broken =
            Allocation::from_parts(g, 2, owners, a.disputed_flags().to_vec(), a.quota(), 1.0)
                .unwrap();
        assert!(!verify_stability(&broken, &c).unwrap().is_empty());
    }

    #[test]
    fn mismatched_regions_rejected() {
        let g = Grid::new(&torus(10.0), 0.1).unwrap();
        let c = sample_poisson(&torus(20.0), 0.1, 1).unwrap();
        assert_eq!(compute_allocation(&c, &g, 1.0).unwrap_err(), Error::RegionMismatch);
    }
}
