//! Unit-cube majorant of the claimed set.
//!
//! The window is cut into unit cubes `K_i = [i - 1/2, i + 1/2)^d`. From the
//! cube counts `zeta_i` each nonempty cube gets a radius
//!
//! ```text
//! R_i = inf { r > 0 : sum of zeta_j over j with rho(K_i, K_j) <= beta_d r  <=  pi_d r^d }
//! ```
//!
//! and the painted set is the union of the discrete balls `B_i(R_i)`. The
//! territories of centers in `K_i` stay inside `B_i(R_i)`, so the painted
//! set dominates the claimed set. Passable cubes, the tail bound for `R_i`
//! and the locality of `{R_i <= a}` are the ingredients of the multiscale
//! argument built on top of it.

use alloc::vec;
use alloc::vec::Vec;

use crate::allocation::{claimed_set, Allocation, UNCLAIMED};
use crate::error::{Error, Result};
use crate::lattice::{Mask, Shape};
use crate::percolation::{label_clusters, Adjacency};
use crate::pointprocess::{sample_poisson, CenterSet, Region, Topology};
use crate::rng::replica_seed;
use crate::stats::{CovarianceEstimate, Proportion};

/// Volume of the unit ball in `R^d`.
pub fn pi_d(d: usize) -> f64 {
    // pi_d = 2 pi / d * pi_{d-2}
    let (mut v, start) = if d % 2 == 0 { (1.0, 2) } else { (2.0, 3) };
    let mut k = start;
    while k <= d {
        v *= 2.0 * core::f64::consts::PI / k as f64;
        k += 2;
    }
    v
}

/// `ceil(3 + 2 sqrt(d) pi_d^(1/d))`.
pub fn beta_d(d: usize) -> u32 {
    let x = 3.0 + 2.0 * libm::sqrt(d as f64) * libm::pow(pi_d(d), 1.0 / d as f64);
    libm::ceil(x) as u32
}

/// Finite block of unit cubes, possibly periodic.
///
/// Cube coordinates are global lattice indices; `lo` is the index of the
/// first cube along each axis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CubeLattice {
    lo: Vec<i64>,
    shape: Shape,
    wrap: bool,
}

impl CubeLattice {
    /// Unit cubes meeting the window. A torus needs whole-number sides so the
    /// cubes tile it; cube `0` then straddles the seam.
    pub fn for_region(region: &Region) -> Result<CubeLattice> {
        let mut dims = Vec::with_capacity(region.dim());
        for &l in region.sides() {
            match region.topology() {
                Topology::Torus => {
                    if libm::round(l) != l {
                        return Err(Error::FractionalTorus(l));
                    }
                    dims.push(l as usize);
                }
                Topology::Box => dims.push(libm::ceil(l + 0.5) as usize),
            }
        }
        Ok(CubeLattice {
            lo: vec![0; region.dim()],
            shape: Shape::new(&dims),
            wrap: region.is_torus(),
        })
    }

    /// Non-periodic block of cubes `lo .. lo + dims`.
    pub fn block(lo: &[i64], dims: &[usize]) -> CubeLattice {
        CubeLattice {
            lo: lo.to_vec(),
            shape: Shape::new(dims),
            wrap: false,
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.shape.dim()
    }

    #[inline]
    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.shape.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.shape.is_empty()
    }

    #[inline]
    pub fn lo(&self) -> &[i64] {
        &self.lo
    }

    #[inline]
    pub fn wraps(&self) -> bool {
        self.wrap
    }

    /// Linear index of the cube with global coordinates `cube`, if it lies in
    /// the block (always, after reduction, on a torus).
    pub fn index_of(&self, cube: &[i64]) -> Option<usize> {
        let mut idx = 0;
        for axis in 0..self.dim() {
            let n = self.shape.dims()[axis] as i64;
            let mut c = cube[axis] - self.lo[axis];
            if self.wrap {
                c = c.rem_euclid(n);
            } else if c < 0 || c >= n {
                return None;
            }
            idx += c as usize * self.shape.strides()[axis];
        }
        Some(idx)
    }

    pub fn cube(&self, index: usize) -> Vec<i64> {
        self.shape
            .coords(index)
            .into_iter()
            .zip(&self.lo)
            .map(|(c, lo)| c as i64 + lo)
            .collect()
    }

    /// Index of the unit cube containing `point` (half-open convention).
    pub fn cube_of_point(point: &[f64]) -> Vec<i64> {
        point.iter().map(|&x| libm::floor(x + 0.5) as i64).collect()
    }

    /// Squared set distance `rho(K_a, K_b)^2`, an integer. On a torus the
    /// minimal image is used.
    pub fn rho2(&self, a: &[i64], b: &[i64]) -> u64 {
        let mut s = 0u64;
        for axis in 0..self.dim() {
            let mut diff = (a[axis] - b[axis]).abs();
            if self.wrap {
                let n = self.shape.dims()[axis] as i64;
                diff = diff.rem_euclid(n);
                diff = diff.min(n - diff);
            }
            let gap = (diff - 1).max(0) as u64;
            s += gap * gap;
        }
        s
    }

    /// Per-axis offset range that enumerates every cube of the lattice once
    /// relative to `center`.
    fn offset_range(&self, axis: usize, center: i64, reach: i64) -> (i64, i64) {
        let n = self.shape.dims()[axis] as i64;
        if self.wrap {
            (-reach.min((n - 1) / 2), reach.min(n / 2))
        } else {
            let first = self.lo[axis] - center;
            (first.max(-reach), (first + n - 1).min(reach))
        }
    }
}

/// `rho <= r` decided from the exact integer `rho^2`.
#[inline]
fn within(rho2: u64, r: f64) -> bool {
    libm::sqrt(rho2 as f64) <= r
}

/// Center counts per unit cube.
#[derive(Debug, Clone, PartialEq)]
pub struct ZetaField {
    lattice: CubeLattice,
    counts: Vec<u32>,
    nonempty: Vec<usize>,
}

impl ZetaField {
    pub fn from_counts(lattice: CubeLattice, counts: Vec<u32>) -> ZetaField {
        assert_eq!(lattice.len(), counts.len());
        let nonempty = (0..counts.len()).filter(|&k| counts[k] > 0).collect();
        ZetaField {
            lattice,
            counts,
            nonempty,
        }
    }

    pub fn lattice(&self) -> &CubeLattice {
        &self.lattice
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    pub fn nonempty(&self) -> &[usize] {
        &self.nonempty
    }
}

/// Counts the centers of `centers` per cube of `lattice`. Centers in cubes
/// outside a non-periodic lattice are dropped.
pub fn zeta(centers: &CenterSet, lattice: &CubeLattice) -> ZetaField {
    zeta_where(centers, lattice, |_| true)
}

/// Like [`zeta`] but only counts centers inside the coordinate box `window`.
pub fn zeta_restricted(centers: &CenterSet, lattice: &CubeLattice, window: &CoordBox) -> ZetaField {
    zeta_where(centers, lattice, |p| window.contains(p))
}

fn zeta_where<F: Fn(&[f64]) -> bool>(centers: &CenterSet, lattice: &CubeLattice, keep: F) -> ZetaField {
    let mut counts = vec![0u32; lattice.len()];
    for p in centers.iter() {
        if !keep(p) {
            continue;
        }
        if let Some(k) = lattice.index_of(&CubeLattice::cube_of_point(p)) {
            counts[k] += 1;
        }
    }
    ZetaField::from_counts(lattice.clone(), counts)
}

/// Half-open coordinate box `[lo, hi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl CoordBox {
    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(&x, (&a, &b))| x >= a && x < b)
    }
}

/// `R_i` for cube index `i` of the field's lattice; `0` for empty cubes.
///
/// The count on the left is a step function of `r` that jumps where
/// `beta_d r` reaches the distance to another nonempty cube; the right side
/// is increasing. Between consecutive jumps the smallest admissible `r` is
/// `max(jump, (count / pi_d)^(1/d))`, so the infimum is found by one scan of
/// the nonempty cubes sorted by distance.
pub fn compute_r(zeta: &ZetaField, i: usize) -> f64 {
    if zeta.counts[i] == 0 {
        return 0.0;
    }
    let lattice = &zeta.lattice;
    let d = lattice.dim();
    let beta = beta_d(d) as f64;
    let pid = pi_d(d);
    let ci = lattice.cube(i);
    let mut by_dist: Vec<(u64, u32)> = zeta
        .nonempty
        .iter()
        .map(|&j| (lattice.rho2(&ci, &lattice.cube(j)), zeta.counts[j]))
        .collect();
    by_dist.sort_unstable();
    radius_from_sorted(&by_dist, beta, pid, d)
}

fn root_d(x: f64, d: usize) -> f64 {
    if d == 2 {
        libm::sqrt(x)
    } else {
        libm::pow(x, 1.0 / d as f64)
    }
}

fn radius_from_sorted(by_dist: &[(u64, u32)], beta: f64, pid: f64, d: usize) -> f64 {
    let mut cumulative = 0u64;
    let mut k = 0;
    while k < by_dist.len() {
        let t = by_dist[k].0;
        while k < by_dist.len() && by_dist[k].0 == t {
            cumulative += by_dist[k].1 as u64;
            k += 1;
        }
        let lo = libm::sqrt(t as f64) / beta;
        let hi = match by_dist.get(k) {
            Some(&(next, _)) => libm::sqrt(next as f64) / beta,
            None => f64::INFINITY,
        };
        let candidate = lo.max(root_d(cumulative as f64 / pid, d));
        if candidate < hi {
            return candidate;
        }
    }
    f64::INFINITY
}

/// `R_i` on every cube; `+inf` is kept as a sentinel but cannot occur for a
/// finite field.
#[derive(Debug, Clone, PartialEq)]
pub struct RField {
    lattice: CubeLattice,
    values: Vec<f64>,
}

impl RField {
    pub fn from_values(lattice: CubeLattice, values: Vec<f64>) -> RField {
        assert_eq!(lattice.len(), values.len());
        RField { lattice, values }
    }

    pub fn lattice(&self) -> &CubeLattice {
        &self.lattice
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

pub fn r_field(zeta: &ZetaField) -> RField {
    let mut values = vec![0.0; zeta.lattice.len()];
    for &i in &zeta.nonempty {
        values[i] = compute_r(zeta, i);
    }
    RField {
        lattice: zeta.lattice.clone(),
        values,
    }
}

/// Cubes `j` of the lattice with `rho(K_i, K_j) <= r`; empty for `r = 0`.
pub fn discrete_ball(lattice: &CubeLattice, i: &[i64], r: f64) -> Vec<usize> {
    let mut out = Vec::new();
    for_each_in_ball(lattice, i, r, |k| out.push(k));
    out
}

fn for_each_in_ball<F: FnMut(usize)>(lattice: &CubeLattice, i: &[i64], r: f64, mut f: F) {
    if !(r > 0.0) {
        return;
    }
    let d = lattice.dim();
    let reach = if r.is_finite() {
        libm::floor(r) as i64 + 1
    } else {
        i64::MAX / 4
    };
    let ranges: Vec<(i64, i64)> = (0..d).map(|a| lattice.offset_range(a, i[a], reach)).collect();
    if ranges.iter().any(|&(a, b)| a > b) {
        return;
    }
    let mut off: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    let mut cube = vec![0i64; d];
    loop {
        let mut rho2 = 0u64;
        for axis in 0..d {
            let gap = (off[axis].abs() - 1).max(0) as u64;
            rho2 += gap * gap;
            cube[axis] = i[axis] + off[axis];
        }
        if within(rho2, r) {
            if let Some(k) = lattice.index_of(&cube) {
                f(k);
            }
        }
        let mut axis = 0;
        while axis < d {
            if off[axis] < ranges[axis].1 {
                off[axis] += 1;
                break;
            }
            off[axis] = ranges[axis].0;
            axis += 1;
        }
        if axis == d {
            break;
        }
    }
}

/// Union of `B_i(R_i)` over the lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct PaintedMask {
    lattice: CubeLattice,
    mask: Mask,
}

impl PaintedMask {
    pub fn lattice(&self) -> &CubeLattice {
        &self.lattice
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }

    pub fn is_painted(&self, cube: &[i64]) -> bool {
        self.lattice.index_of(cube).is_some_and(|k| self.mask.get(k))
    }
}

/// Paints `B_i(R_i)` for every cube of `field` onto `target`, a lattice that
/// may be larger than the field's own.
pub fn painted_onto(field: &RField, target: &CubeLattice) -> Result<PaintedMask> {
    let mut mask = Mask::new(target.shape().clone(), target.wraps());
    for (i, &r) in field.values.iter().enumerate() {
        if r == f64::INFINITY {
            return Err(Error::InfiniteRadius);
        }
        if r > 0.0 {
            let ci = field.lattice.cube(i);
            for_each_in_ball(target, &ci, r, |k| mask.set(k, true));
        }
    }
    Ok(PaintedMask {
        lattice: target.clone(),
        mask,
    })
}

pub fn painted_set(field: &RField) -> Result<PaintedMask> {
    painted_onto(field, &field.lattice)
}

/// Painted set built from the centers inside `window` only.
pub fn painted_set_restricted(
    centers: &CenterSet,
    lattice: &CubeLattice,
    window: &CoordBox,
) -> Result<PaintedMask> {
    painted_set(&r_field(&zeta_restricted(centers, lattice, window)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContainmentViolation {
    pub cell: usize,
    pub center: usize,
    /// Lattice index of the center's cube.
    pub cube: usize,
}

/// Cells whose owner sits in cube `i` but which lie outside `B_i(R_i)`.
pub fn verify_containment(
    alloc: &Allocation,
    centers: &CenterSet,
    field: &RField,
) -> Result<Vec<ContainmentViolation>> {
    let grid = alloc.grid();
    if centers.region() != grid.region() || centers.len() != alloc.num_centers() {
        return Err(Error::RegionMismatch);
    }
    let lattice = &field.lattice;
    let home: Vec<Option<usize>> = centers
        .iter()
        .map(|p| lattice.index_of(&CubeLattice::cube_of_point(p)))
        .collect();
    let home_cube: Vec<Vec<i64>> = home
        .iter()
        .map(|h| h.map(|k| lattice.cube(k)).unwrap_or_default())
        .collect();
    let mut out = Vec::new();
    let mut point = vec![0.0; grid.dim()];
    for (cell, &o) in alloc.owners().iter().enumerate() {
        if o == UNCLAIMED {
            continue;
        }
        let c = o as usize;
        let Some(i) = home[c] else {
            out.push(ContainmentViolation { cell, center: c, cube: usize::MAX });
            continue;
        };
        grid.cell_center_into(cell, &mut point);
        let cube = CubeLattice::cube_of_point(&point);
        let inside = lattice.index_of(&cube).is_some()
            && within(lattice.rho2(&home_cube[c], &cube), field.values[i]);
        if !inside {
            out.push(ContainmentViolation { cell, center: c, cube: i });
        }
    }
    Ok(out)
}

/// Claimed cells coarsened to unit cubes: a cube is claimed when the
/// midpoint of one of its claimed cells falls in it.
pub fn claimed_cubes(alloc: &Allocation, lattice: &CubeLattice) -> Mask {
    let grid = alloc.grid();
    let claimed = claimed_set(alloc);
    let mut mask = Mask::new(lattice.shape().clone(), lattice.wraps());
    let mut point = vec![0.0; grid.dim()];
    for cell in 0..claimed.len() {
        if claimed.get(cell) {
            grid.cell_center_into(cell, &mut point);
            if let Some(k) = lattice.index_of(&CubeLattice::cube_of_point(&point)) {
                mask.set(k, true);
            }
        }
    }
    mask
}

/// Cubes holding claimed cells that are not painted.
pub fn verify_painted_cover(alloc: &Allocation, painted: &PaintedMask) -> Vec<usize> {
    claimed_cubes(alloc, &painted.lattice).not_contained_in(&painted.mask)
}

/// Cubes `i` for which `rho(B_i(R_i), window minus B_i(beta_d R_i)) <= R_i`.
/// Quadratic in the ball sizes; intended for small windows.
pub fn verify_separation(field: &RField) -> Vec<usize> {
    let lattice = &field.lattice;
    let beta = beta_d(lattice.dim()) as f64;
    let mut out = Vec::new();
    for (i, &r) in field.values.iter().enumerate() {
        if !(r > 0.0) {
            continue;
        }
        let ci = lattice.cube(i);
        let inner: Vec<Vec<i64>> = discrete_ball(lattice, &ci, r)
            .into_iter()
            .map(|k| lattice.cube(k))
            .collect();
        let mut outer_ball = vec![false; lattice.len()];
        for_each_in_ball(lattice, &ci, beta * r, |k| outer_ball[k] = true);
        let separated = (0..lattice.len()).filter(|&k| !outer_ball[k]).all(|k| {
            let ck = lattice.cube(k);
            inner.iter().all(|a| libm::sqrt(lattice.rho2(a, &ck) as f64) > r)
        });
        if !separated {
            out.push(i);
        }
    }
    out
}

/// Whether `{R_i <= a}` is unchanged after removing every center outside
/// `B_i(beta_d a)`. Requires `a > 0`.
pub fn verify_locality(i: &[i64], a: f64, centers: &CenterSet) -> Result<bool> {
    if !(a > 0.0) {
        return Err(Error::Parameter("locality radius must be positive"));
    }
    let lattice = CubeLattice::for_region(centers.region())?;
    let Some(idx) = lattice.index_of(i) else {
        return Err(Error::Parameter("cube outside the window"));
    };
    let ci = lattice.cube(idx);
    let beta = beta_d(lattice.dim()) as f64;
    let full = compute_r(&zeta(centers, &lattice), idx) <= a;
    let local = centers.filtered(|_, p| {
        within(lattice.rho2(&ci, &CubeLattice::cube_of_point(p)), beta * a)
    });
    let restricted = compute_r(&zeta(&local, &lattice), idx) <= a;
    Ok(full == restricted)
}

/// `g(x) = (x - 1 - ln x) / x`.
pub fn chernoff_g(x: f64) -> f64 {
    (x - 1.0 - libm::log(x)) / x
}

/// Upper bound on `P[R_i > a]` from the Poisson Chernoff inequality:
/// `exp(-lambda V g(lambda V / (pi_d a^d)))` with `V = (2 beta_d a + 3)^d`.
/// The inequality only bites when the ratio is below one; otherwise the
/// bound is clamped to `1`.
pub fn chernoff_tail_bound(a: f64, lambda: f64, d: usize) -> f64 {
    if !(a > 0.0 && lambda > 0.0) {
        return 1.0;
    }
    let beta = beta_d(d) as f64;
    let volume = libm::pow(2.0 * beta * a + 3.0, d as f64);
    let mean = lambda * volume;
    let x = mean / (pi_d(d) * libm::pow(a, d as f64));
    if !(x > 0.0 && x < 1.0) {
        return 1.0;
    }
    libm::exp(-mean * chernoff_g(x)).min(1.0)
}

/// Samples `R_i` for a fixed cube on a box window just large enough that the
/// events `{R_i > a'}` for `a' <= a` are computed exactly.
pub fn sample_r_tail(a: f64, lambda: f64, d: usize, seed: u64) -> Result<f64> {
    let beta = beta_d(d) as f64;
    let c = libm::ceil(beta * a) as i64 + 2;
    let side = (2 * c + 1) as f64;
    let region = Region::cube(d, side, Topology::Box)?;
    let centers = sample_poisson(&region, lambda, seed)?;
    let lattice = CubeLattice::for_region(&region)?;
    let field = zeta(&centers, &lattice);
    let i = lattice.index_of(&vec![c; d]).expect("center cube inside window");
    Ok(compute_r(&field, i))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PassableVerdict {
    pub cube: Vec<i64>,
    pub m: f64,
    /// The cube meets a component of diameter at least `m / 2` of the
    /// painted set built from centers in its neighbourhood.
    pub large_component: bool,
    /// Every integer point of the neighbourhood has `R < m / (6 (beta_d + 1))`.
    pub small_radii: bool,
    pub passable: bool,
}

/// The neighbourhood of `K^m_j`: the union of the `3^d` level-`m` cubes
/// around it, as a coordinate box.
pub fn neighbourhood(j: &[i64], m: f64) -> CoordBox {
    CoordBox {
        lo: j.iter().map(|&c| m * (c - 1) as f64 - m / 2.0).collect(),
        hi: j.iter().map(|&c| m * (c + 1) as f64 + m / 2.0).collect(),
    }
}

/// Painted set of the centers inside `window`, computed on an unbounded
/// lattice (the returned block is large enough to hold every ball).
pub fn restricted_painting(centers: &CenterSet, window: &CoordBox) -> Result<PaintedMask> {
    let d = centers.dim();
    let lo: Vec<i64> = window.lo.iter().map(|&x| libm::floor(x + 0.5) as i64).collect();
    let hi: Vec<i64> = window.hi.iter().map(|&x| libm::floor(x + 0.5) as i64).collect();
    let dims: Vec<usize> = (0..d).map(|a| (hi[a] - lo[a] + 1) as usize).collect();
    let source = CubeLattice::block(&lo, &dims);
    let field = r_field(&zeta_restricted(centers, &source, window));
    let pad = libm::ceil(field.max()) as i64 + 1;
    let target = CubeLattice::block(
        &lo.iter().map(|&l| l - pad).collect::<Vec<_>>(),
        &dims.iter().map(|&n| n + 2 * pad as usize).collect::<Vec<_>>(),
    );
    painted_onto(&field, &target)
}

/// Decides whether the level-`m` cube `K^m_j` is passable.
///
/// Component diameters are measured as the largest side of the bounding box
/// of the component's unit cubes. The neighbourhood must lie inside the
/// window; the radii of condition (ii) are computed from all centers of the
/// window.
pub fn is_passable(j: &[i64], m: f64, centers: &CenterSet, adjacency: Adjacency) -> Result<PassableVerdict> {
    let d = centers.dim();
    if !(m > 0.0) || j.len() != d {
        return Err(Error::Parameter("level must be positive and index match dimension"));
    }
    let region = centers.region();
    let hood = neighbourhood(j, m);
    if (0..d).any(|a| hood.lo[a] < 0.0 || hood.hi[a] > region.sides()[a]) {
        return Err(Error::WindowTooSmall { m });
    }

    // (i)
    let painted = restricted_painting(centers, &hood)?;
    let labels = label_clusters(painted.mask(), adjacency);
    let plo = painted.lattice().lo().to_vec();
    let half = (m + 1.0) / 2.0;
    let mut large_component = false;
    let mut coords = vec![0usize; d];
    for cell in 0..labels.labels().len() {
        let label = labels.label(cell);
        if label == 0 {
            continue;
        }
        labels.shape().coords_into(cell, &mut coords);
        // closed unit cube meets the closed level-m cube
        let touches = (0..d).all(|a| {
            let c = (coords[a] as i64 + plo[a]) as f64;
            libm::fabs(c - m * j[a] as f64) <= half
        });
        if touches && labels.component(label).extent() as f64 >= m / 2.0 {
            large_component = true;
            break;
        }
    }

    // (ii)
    let lattice = CubeLattice::for_region(region)?;
    let full = zeta(centers, &lattice);
    let limit = m / (6.0 * (beta_d(d) as f64 + 1.0));
    let first: Vec<i64> = hood.lo.iter().map(|&x| libm::ceil(x) as i64).collect();
    let last: Vec<i64> = hood.hi.iter().map(|&x| libm::floor(x) as i64).collect();
    let mut small_radii = true;
    for &k in full.nonempty() {
        let cube = lattice.cube(k);
        let inside = (0..d).all(|a| {
            // torus cube 0 also stands for the point L
            let n = lattice.shape().dims()[a] as i64;
            (first[a]..=last[a]).contains(&cube[a])
                || (lattice.wraps() && cube[a] == 0 && (first[a]..=last[a]).contains(&n))
        });
        if inside && compute_r(&full, k) >= limit {
            small_radii = false;
            break;
        }
    }

    Ok(PassableVerdict {
        cube: j.to_vec(),
        m,
        large_component,
        small_radii,
        passable: large_component && small_radii,
    })
}

/// Box window `[0, 5m)^d` with the test cube `j = (2, ..., 2)`, so that its
/// neighbourhood keeps a margin of `m / 2` to the walls.
pub fn passable_window(d: usize, m: f64) -> Result<(Region, Vec<i64>)> {
    Ok((Region::cube(d, 5.0 * m, Topology::Box)?, vec![2; d]))
}

pub fn passable_replica(
    d: usize,
    m: f64,
    lambda: f64,
    seed: u64,
    replica: u64,
    adjacency: Adjacency,
) -> Result<PassableVerdict> {
    let (region, j) = passable_window(d, m)?;
    let centers = sample_poisson(&region, lambda, replica_seed(seed, replica))?;
    is_passable(&j, m, &centers, adjacency)
}

/// Monte Carlo estimate of `p_m`, the probability that a fixed level-`m`
/// cube is passable, with a Wilson 95% interval.
pub fn estimate_p_m(
    d: usize,
    m: f64,
    lambda: f64,
    replicas: u64,
    seed: u64,
    adjacency: Adjacency,
) -> Result<Proportion> {
    if replicas == 0 {
        return Err(Error::Parameter("need at least one replica"));
    }
    let mut hits = 0;
    for r in 0..replicas {
        if passable_replica(d, m, lambda, seed, r, adjacency)?.passable {
            hits += 1;
        }
    }
    Ok(Proportion::new(hits, replicas))
}

/// Window `[0, 10m) x [0, 5m)^(d-1)` holding two level-`m` cubes whose
/// indices differ by 5 along the first axis.
pub fn pair_window(d: usize, m: f64) -> Result<(Region, Vec<i64>, Vec<i64>)> {
    let mut sides = vec![5.0 * m; d];
    sides[0] = 10.0 * m;
    let a = vec![2; d];
    let mut b = a.clone();
    b[0] = 7;
    Ok((Region::new(&sides, Topology::Box)?, a, b))
}

/// Passability verdicts of the two cubes of [`pair_window`] on one replica.
pub fn passable_pair_replica(
    d: usize,
    m: f64,
    lambda: f64,
    seed: u64,
    replica: u64,
    adjacency: Adjacency,
) -> Result<(PassableVerdict, PassableVerdict)> {
    let (region, a, b) = pair_window(d, m)?;
    let centers = sample_poisson(&region, lambda, replica_seed(seed, replica))?;
    Ok((
        is_passable(&a, m, &centers, adjacency)?,
        is_passable(&b, m, &centers, adjacency)?,
    ))
}

/// Covariances between the two cubes' passability and between each of the
/// two conditions separately.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairCorrelation {
    pub passable: CovarianceEstimate,
    pub large_component: CovarianceEstimate,
    pub small_radii: CovarianceEstimate,
}

pub fn pair_correlation(pairs: &[(PassableVerdict, PassableVerdict)]) -> PairCorrelation {
    let ind = |f: fn(&PassableVerdict) -> bool| -> CovarianceEstimate {
        let xs: Vec<f64> = pairs.iter().map(|(a, _)| f(a) as u8 as f64).collect();
        let ys: Vec<f64> = pairs.iter().map(|(_, b)| f(b) as u8 as f64).collect();
        crate::stats::covariance(&xs, &ys)
    };
    PairCorrelation {
        passable: ind(|v| v.passable),
        large_component: ind(|v| v.large_component),
        small_radii: ind(|v| v.small_radii),
    }
}
