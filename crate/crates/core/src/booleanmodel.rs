//! Poisson Boolean model on the cell grid and its comparison with the
//! claimed set.

use alloc::vec;
use alloc::vec::Vec;

use crate::allocation::{claimed_set, Allocation, Grid};
use crate::error::{Error, Result};
use crate::lattice::Mask;
use crate::majorant::pi_d;
use crate::pointprocess::CenterSet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BooleanParams {
    pub intensity: f64,
    pub radius: f64,
    pub dim: usize,
}

impl BooleanParams {
    pub fn new(intensity: f64, radius: f64, dim: usize) -> Result<BooleanParams> {
        if !(intensity > 0.0 && intensity.is_finite()) {
            return Err(Error::Intensity(intensity));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Parameter("boolean radius must be positive"));
        }
        if dim < 1 {
            return Err(Error::Dimension { min: 1, got: dim });
        }
        Ok(BooleanParams { intensity, radius, dim })
    }
}

/// Radius of a ball of volume `alpha`.
pub fn appetite_radius(alpha: f64, d: usize) -> f64 {
    libm::pow(alpha / pi_d(d), 1.0 / d as f64)
}

/// Cells whose midpoint lies within `radius` of some center. A non-positive
/// radius gives the empty mask.
pub fn boolean_mask(centers: &CenterSet, radius: f64, grid: &Grid) -> Mask {
    let region = grid.region();
    let torus = region.is_torus();
    let mut mask = Mask::new(grid.shape().clone(), torus);
    if !(radius > 0.0) || centers.is_empty() {
        return mask;
    }
    let d = grid.dim();
    let h = grid.h();
    let n = grid.cells_per_axis().to_vec();
    let r2 = radius * radius;
    let mut ranges = vec![(0i64, 0i64); d];
    let mut cur = vec![0i64; d];
    let mut cell = vec![0usize; d];
    let mut mid = vec![0.0; d];
    for p in centers.iter() {
        let mut empty = false;
        for a in 0..d {
            let lo = libm::floor((p[a] - radius) / h - 0.5) as i64;
            let hi = libm::ceil((p[a] + radius) / h - 0.5) as i64;
            let na = n[a] as i64;
            ranges[a] = if torus {
                if hi - lo + 1 >= na {
                    (0, na - 1)
                } else {
                    (lo, hi)
                }
            } else {
                (lo.max(0), hi.min(na - 1))
            };
            empty |= ranges[a].0 > ranges[a].1;
        }
        if empty {
            continue;
        }
        for a in 0..d {
            cur[a] = ranges[a].0;
        }
        loop {
            for a in 0..d {
                cell[a] = cur[a].rem_euclid(n[a] as i64) as usize;
                mid[a] = grid.axis_center(cell[a]);
            }
            if region.dist2(p, &mid) <= r2 {
                mask.set(grid.shape().index(&cell), true);
            }
            let mut a = 0;
            while a < d {
                if cur[a] < ranges[a].1 {
                    cur[a] += 1;
                    break;
                }
                cur[a] = ranges[a].0;
                a += 1;
            }
            if a == d {
                break;
            }
        }
    }
    mask
}

/// Cells within `(alpha / pi_d)^(1/d) - h sqrt(d)` of a center that the
/// allocation leaves unclaimed.
pub fn domination_check(alloc: &Allocation, centers: &CenterSet) -> Result<Vec<usize>> {
    let grid = alloc.grid();
    if centers.region() != grid.region() || centers.len() != alloc.num_centers() {
        return Err(Error::RegionMismatch);
    }
    let d = grid.dim();
    let radius = appetite_radius(alloc.alpha(), d) - grid.h() * libm::sqrt(d as f64);
    if !(radius > 0.0) {
        return Ok(Vec::new());
    }
    Ok(boolean_mask(centers, radius, grid).not_contained_in(&claimed_set(alloc)))
}

/// Boolean model with radius `1/2` obtained by rescaling space so that the
/// balls of volume `alpha` around rate-one points have diameter one.
pub fn equivalent_boolean_params(alpha: f64, d: usize) -> Result<BooleanParams> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Appetite(alpha));
    }
    let intensity = alpha / pi_d(d) * libm::pow(2.0, d as f64);
    BooleanParams::new(intensity, 0.5, d)
}
