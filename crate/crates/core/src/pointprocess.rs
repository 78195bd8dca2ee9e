//! Poisson configurations of centers on finite windows.
//!
//! A window is the box `[0, L_1) x ... x [0, L_d)`, either with hard walls or
//! with periodic (torus) identification.

use alloc::vec::Vec;
use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Topology {
    Torus,
    Box,
}

impl Topology {
    pub fn name(self) -> &'static str {
        match self {
            Topology::Torus => "torus",
            Topology::Box => "box",
        }
    }

    pub fn parse(s: &str) -> Option<Topology> {
        match s.trim().to_ascii_lowercase().as_str() {
            "torus" => Some(Topology::Torus),
            "box" => Some(Topology::Box),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    sides: Vec<f64>,
    topology: Topology,
}

impl Region {
    pub fn new(sides: &[f64], topology: Topology) -> Result<Self> {
        if sides.len() < 2 {
            return Err(Error::Dimension {
                min: 2,
                got: sides.len(),
            });
        }
        if let Some(&bad) = sides.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::Side(bad));
        }
        Ok(Region {
            sides: sides.to_vec(),
            topology,
        })
    }

    /// Cube `[0, side)^d`.
    pub fn cube(d: usize, side: f64, topology: Topology) -> Result<Self> {
        Region::new(&alloc::vec![side; d], topology)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.sides.len()
    }

    #[inline]
    pub fn sides(&self) -> &[f64] {
        &self.sides
    }

    #[inline]
    pub fn topology(&self) -> Topology {
        self.topology
    }

    #[inline]
    pub fn is_torus(&self) -> bool {
        self.topology == Topology::Torus
    }

    pub fn volume(&self) -> f64 {
        self.sides.iter().product()
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dim()
            && point
                .iter()
                .zip(&self.sides)
                .all(|(&x, &l)| (0.0..l).contains(&x))
    }

    /// Signed displacement `to - from` along `axis`, minimal image on a torus.
    #[inline]
    pub fn displacement(&self, axis: usize, from: f64, to: f64) -> f64 {
        let d = to - from;
        match self.topology {
            Topology::Box => d,
            Topology::Torus => {
                let l = self.sides[axis];
                d - l * libm::round(d / l)
            }
        }
    }

    #[inline]
    pub fn dist2(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut s = 0.0;
        for axis in 0..a.len() {
            let d = self.displacement(axis, a[axis], b[axis]);
            s += d * d;
        }
        s
    }

    #[inline]
    pub fn dist(&self, a: &[f64], b: &[f64]) -> f64 {
        libm::sqrt(self.dist2(a, b))
    }

    pub fn scaled(&self, b: f64) -> Region {
        Region {
            sides: self.sides.iter().map(|s| s * b).collect(),
            topology: self.topology,
        }
    }
}

/// A finite configuration of centers inside a region, stored flat with
/// `dim` coordinates per center.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterSet {
    region: Region,
    coords: Vec<f64>,
    intensity: f64,
    seed: u64,
}

impl CenterSet {
    pub fn new(region: Region, coords: Vec<f64>, intensity: f64, seed: u64) -> Result<Self> {
        let d = region.dim();
        if coords.len() % d != 0 {
            return Err(Error::Parameter("coordinate count is not a multiple of dimension"));
        }
        if !(intensity.is_finite() && intensity >= 0.0) {
            return Err(Error::Intensity(intensity));
        }
        if coords.chunks_exact(d).any(|p| !region.contains(p)) {
            return Err(Error::OutsideRegion);
        }
        Ok(CenterSet {
            region,
            coords,
            intensity,
            seed,
        })
    }

    pub fn from_points<P: AsRef<[f64]>>(region: Region, points: &[P]) -> Result<Self> {
        let coords = points.iter().flat_map(|p| p.as_ref().iter().copied()).collect();
        CenterSet::new(region, coords, 0.0, 0)
    }

    #[inline]
    pub fn region(&self) -> &Region {
        &self.region
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.region.dim()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn center(&self, k: usize) -> &[f64] {
        let d = self.dim();
        &self.coords[k * d..(k + 1) * d]
    }

    pub fn iter(&self) -> core::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim())
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    #[inline]
    pub fn intensity(&self) -> f64 {
        self.intensity
    }

    #[inline]
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Keeps the centers for which `keep` returns true, preserving order.
    pub fn filtered<F: FnMut(usize, &[f64]) -> bool>(&self, mut keep: F) -> CenterSet {
        let d = self.dim();
        let mut coords = Vec::new();
        for (k, p) in self.coords.chunks_exact(d).enumerate() {
            if keep(k, p) {
                coords.extend_from_slice(p);
            }
        }
        CenterSet {
            region: self.region.clone(),
            coords,
            intensity: self.intensity,
            seed: self.seed,
        }
    }

    /// Appends centers; the result keeps the recorded intensity and seed.
    pub fn with_centers(&self, extra: &[f64]) -> Result<CenterSet> {
        let mut coords = self.coords.clone();
        coords.extend_from_slice(extra);
        CenterSet::new(self.region.clone(), coords, self.intensity, self.seed)
    }

    /// Shifts every center by `shift`, wrapping on a torus. Fails on a box if
    /// a center leaves the window.
    pub fn translated(&self, shift: &[f64]) -> Result<CenterSet> {
        let d = self.dim();
        if shift.len() != d {
            return Err(Error::Parameter("shift has wrong dimension"));
        }
        let mut coords = self.coords.clone();
        for p in coords.chunks_exact_mut(d) {
            for axis in 0..d {
                let mut x = p[axis] + shift[axis];
                if self.region.is_torus() {
                    let l = self.region.sides()[axis];
                    x = wrap(x, l);
                }
                p[axis] = x;
            }
        }
        CenterSet::new(self.region.clone(), coords, self.intensity, self.seed)
    }
}

/// Reduces `x` into `[0, l)`.
pub(crate) fn wrap(x: f64, l: f64) -> f64 {
    let mut r = libm::fmod(x, l);
    if r < 0.0 {
        r += l;
    }
    if r >= l {
        r = 0.0;
    }
    r
}

/// Samples a homogeneous Poisson process of intensity `lambda` on `region`.
///
/// The count is Poisson(`lambda * volume`) and the positions are i.i.d.
/// uniform. The output depends only on `(region, lambda, seed)`.
pub fn sample_poisson(region: &Region, lambda: f64, seed: u64) -> Result<CenterSet> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::Intensity(lambda));
    }
    let mut rng = rng_from_seed(seed);
    let mean = lambda * region.volume();
    let n = if mean > 0.0 {
        let dist = Poisson::new(mean).map_err(|_| Error::Intensity(lambda))?;
        let draw: f64 = dist.sample(&mut rng);
        draw as usize
    } else {
        0
    };
    let d = region.dim();
    let mut coords = Vec::with_capacity(n * d);
    for _ in 0..n {
        for &l in region.sides() {
            let u: f64 = rng.random();
            let mut x = u * l;
            if x >= l {
                x = l * (1.0 - f64::EPSILON);
            }
            coords.push(x);
        }
    }
    Ok(CenterSet {
        region: region.clone(),
        coords,
        intensity: lambda,
        seed,
    })
}

/// Applies the homothety `x -> b x` to centers and window. The recorded
/// intensity becomes `lambda / b^d`.
pub fn rescale(centers: &CenterSet, b: f64) -> Result<CenterSet> {
    if !(b.is_finite() && b > 0.0) {
        return Err(Error::Scale(b));
    }
    let d = centers.dim() as i32;
    Ok(CenterSet {
        region: centers.region.scaled(b),
        coords: centers.coords.iter().map(|x| x * b).collect(),
        intensity: centers.intensity / libm::pow(b, d as f64),
        seed: centers.seed,
    })
}

/// Number of centers in the level-`m` cube `[m i - m/2, m i + m/2)^d`.
///
/// Cubes are half-open so that every center belongs to exactly one cube of a
/// given level. On a torus the cube is taken modulo the window.
pub fn count_in_cube(centers: &CenterSet, i: &[i64], m: f64) -> usize {
    let region = centers.region();
    centers
        .iter()
        .filter(|p| {
            p.iter().enumerate().all(|(axis, &x)| {
                let lo = m * i[axis] as f64 - m / 2.0;
                let mut off = x - lo;
                if region.is_torus() {
                    off = wrap(off, region.sides()[axis]);
                }
                off >= 0.0 && off < m
            })
        })
        .count()
}
