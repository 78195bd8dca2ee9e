//! Connected components of cell masks, box crossings and Monte Carlo
//! estimation of the crossing probability as a function of appetite.

use alloc::vec;
use alloc::vec::Vec;

use crate::allocation::{claimed_set, compute_allocation, Grid};
use crate::error::{Error, Result};
use crate::lattice::{Mask, Shape};
use crate::pointprocess::sample_poisson;
use crate::rng::replica_seed;
use crate::stats::{interpolate_crossing, logistic_fit, Proportion, Z95};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Adjacency {
    /// `2d` neighbours sharing a face.
    #[default]
    Face,
    /// `3^d - 1` neighbours sharing at least a corner.
    FaceCorner,
}

impl Adjacency {
    pub fn name(self) -> &'static str {
        match self {
            Adjacency::Face => "face",
            Adjacency::FaceCorner => "face_corner",
        }
    }

    pub fn parse(s: &str) -> Option<Adjacency> {
        match s.trim().to_ascii_lowercase().as_str() {
            "face" => Some(Adjacency::Face),
            "face_corner" | "face+corner" | "corner" => Some(Adjacency::FaceCorner),
            _ => None,
        }
    }

    /// Neighbour offsets in `d` dimensions.
    pub fn offsets(self, d: usize) -> Vec<Vec<i64>> {
        match self {
            Adjacency::Face => {
                let mut out = Vec::with_capacity(2 * d);
                for axis in 0..d {
                    for s in [-1, 1] {
                        let mut o = vec![0; d];
                        o[axis] = s;
                        out.push(o);
                    }
                }
                out
            }
            Adjacency::FaceCorner => {
                let total = 3usize.pow(d as u32);
                (0..total)
                    .map(|mut k| {
                        (0..d)
                            .map(|_| {
                                let v = (k % 3) as i64 - 1;
                                k /= 3;
                                v
                            })
                            .collect::<Vec<i64>>()
                    })
                    .filter(|o| o.iter().any(|&v| v != 0))
                    .collect()
            }
        }
    }
}

/// Disjoint-set forest with path halving and union by rank.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<u32>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
            rank: vec![0; n],
        }
    }

    pub fn find(&mut self, mut i: u32) -> u32 {
        while self.parent[i as usize] != i {
            let p = self.parent[i as usize];
            self.parent[i as usize] = self.parent[p as usize];
            i = p;
        }
        i
    }

    pub fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra as usize].cmp(&self.rank[rb as usize]) {
            core::cmp::Ordering::Less => self.parent[ra as usize] = rb,
            core::cmp::Ordering::Greater => self.parent[rb as usize] = ra,
            core::cmp::Ordering::Equal => {
                self.parent[rb as usize] = ra;
                self.rank[ra as usize] += 1;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub size: usize,
    /// Smallest cell index in the component.
    pub first_cell: usize,
    /// Per-axis bounding box in cell coordinates (inclusive).
    pub min: Vec<usize>,
    pub max: Vec<usize>,
}

impl Component {
    /// Largest per-axis extent of the bounding box, in cells.
    pub fn extent(&self) -> usize {
        self.min
            .iter()
            .zip(&self.max)
            .map(|(a, b)| b - a + 1)
            .max()
            .unwrap_or(0)
    }
}

/// Component labels; `0` is background, components are numbered from 1 in
/// order of their smallest cell index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterLabeling {
    shape: Shape,
    wrap: bool,
    adjacency: Adjacency,
    labels: Vec<u32>,
    components: Vec<Component>,
}

impl ClusterLabeling {
    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn wraps(&self) -> bool {
        self.wrap
    }

    pub fn adjacency(&self) -> Adjacency {
        self.adjacency
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label(&self, cell: usize) -> u32 {
        self.labels[cell]
    }

    pub fn count(&self) -> usize {
        self.components.len()
    }

    /// Component with label `label` (1-based).
    pub fn component(&self, label: u32) -> &Component {
        &self.components[label as usize - 1]
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }
}

/// Visits the in-bounds neighbours of `cell` under `offsets`.
pub(crate) fn for_each_neighbor<F: FnMut(usize)>(
    shape: &Shape,
    wrap: bool,
    coords: &[usize],
    offsets: &[Vec<i64>],
    mut f: F,
) {
    let dims = shape.dims();
    let strides = shape.strides();
    'next: for off in offsets {
        let mut idx = 0usize;
        for axis in 0..dims.len() {
            let n = dims[axis] as i64;
            let mut c = coords[axis] as i64 + off[axis];
            if c < 0 || c >= n {
                if !wrap {
                    continue 'next;
                }
                c = c.rem_euclid(n);
            }
            idx += c as usize * strides[axis];
        }
        f(idx);
    }
}

pub fn label_clusters(mask: &Mask, adjacency: Adjacency) -> ClusterLabeling {
    let shape = mask.shape().clone();
    let d = shape.dim();
    let n = mask.len();
    let offsets = adjacency.offsets(d);
    let mut uf = UnionFind::new(n);
    let mut coords = vec![0usize; d];
    for cell in 0..n {
        if !mask.get(cell) {
            continue;
        }
        shape.coords_into(cell, &mut coords);
        for_each_neighbor(&shape, mask.wraps(), &coords, &offsets, |nb| {
            if mask.get(nb) {
                uf.union(cell as u32, nb as u32);
            }
        });
    }
    let mut root_label = vec![0u32; n];
    let mut labels = vec![0u32; n];
    let mut components: Vec<Component> = Vec::new();
    for cell in 0..n {
        if !mask.get(cell) {
            continue;
        }
        shape.coords_into(cell, &mut coords);
        let root = uf.find(cell as u32) as usize;
        if root_label[root] == 0 {
            components.push(Component {
                size: 0,
                first_cell: cell,
                min: coords.clone(),
                max: coords.clone(),
            });
            root_label[root] = components.len() as u32;
        }
        let label = root_label[root];
        labels[cell] = label;
        let comp = &mut components[label as usize - 1];
        comp.size += 1;
        for axis in 0..d {
            comp.min[axis] = comp.min[axis].min(coords[axis]);
            comp.max[axis] = comp.max[axis].max(coords[axis]);
        }
    }
    ClusterLabeling {
        shape,
        wrap: mask.wraps(),
        adjacency,
        labels,
        components,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrossingReport {
    pub axis: usize,
    pub crosses: bool,
    /// Smallest label of a component touching both faces.
    pub component: Option<u32>,
}

/// Whether a component touches both extreme layers along `axis`.
pub fn crossing(labeling: &ClusterLabeling, axis: usize) -> Result<CrossingReport> {
    if labeling.wraps() {
        return Err(Error::TorusCrossing);
    }
    let shape = labeling.shape();
    let d = shape.dim();
    if axis >= d {
        return Err(Error::Axis { axis, dim: d });
    }
    let component = labeling
        .components()
        .iter()
        .position(|c| c.min[axis] == 0 && c.max[axis] == shape.dims()[axis] - 1)
        .map(|k| k as u32 + 1);
    Ok(CrossingReport {
        axis,
        crosses: component.is_some(),
        component,
    })
}

/// Crossing of the complement of `mask`.
pub fn vacant_crossing(mask: &Mask, axis: usize, adjacency: Adjacency) -> Result<CrossingReport> {
    crossing(&label_clusters(&mask.complement(), adjacency), axis)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdMethod {
    Logistic,
    Interpolation,
}

impl ThresholdMethod {
    pub fn name(self) -> &'static str {
        match self {
            ThresholdMethod::Logistic => "logistic_mle",
            ThresholdMethod::Interpolation => "linear_interpolation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdEstimate {
    pub alpha: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub method: ThresholdMethod,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub alpha: f64,
    pub crossing: Proportion,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub lambda: f64,
    pub h: f64,
    pub sides: Vec<f64>,
    pub adjacency: Adjacency,
    pub seed: u64,
    pub replicas: u64,
    pub points: Vec<SweepPoint>,
    /// `None` when the curve never reaches 1/2 and no fit converges.
    pub threshold: Option<ThresholdEstimate>,
}

/// Left-right crossing outcome of the claimed set for each appetite, on one
/// replica. All appetites share the same configuration.
pub fn crossing_replica(
    lambda: f64,
    grid: &Grid,
    alphas: &[f64],
    seed: u64,
    replica: u64,
    adjacency: Adjacency,
) -> Result<Vec<bool>> {
    let centers = sample_poisson(grid.region(), lambda, replica_seed(seed, replica))?;
    alphas
        .iter()
        .map(|&alpha| {
            let alloc = compute_allocation(&centers, grid, alpha)?;
            let labels = label_clusters(&claimed_set(&alloc), adjacency);
            Ok(crossing(&labels, 0)?.crosses)
        })
        .collect()
}

fn check_alphas(alphas: &[f64]) -> Result<()> {
    if alphas.is_empty() || alphas.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Parameter("appetites must be strictly increasing"));
    }
    Ok(())
}

/// Builds a [`SweepResult`] from per-replica outcomes, indexed
/// `outcomes[replica][alpha]`.
pub fn summarize_sweep(
    lambda: f64,
    grid: &Grid,
    alphas: &[f64],
    seed: u64,
    adjacency: Adjacency,
    outcomes: &[Vec<bool>],
) -> Result<SweepResult> {
    check_alphas(alphas)?;
    let replicas = outcomes.len() as u64;
    let points: Vec<SweepPoint> = alphas
        .iter()
        .enumerate()
        .map(|(k, &alpha)| {
            let hits = outcomes.iter().filter(|o| o[k]).count() as u64;
            SweepPoint {
                alpha,
                crossing: Proportion::new(hits, replicas),
            }
        })
        .collect();
    Ok(SweepResult {
        lambda,
        h: grid.h(),
        sides: grid.region().sides().to_vec(),
        adjacency,
        seed,
        replicas,
        threshold: estimate_threshold(&points),
        points,
    })
}

/// Logistic maximum likelihood midpoint, falling back to linear
/// interpolation of the empirical curve when the fit does not converge or
/// lands outside the swept range.
pub fn estimate_threshold(points: &[SweepPoint]) -> Option<ThresholdEstimate> {
    let xs: Vec<f64> = points.iter().map(|p| p.alpha).collect();
    let succ: Vec<u64> = points.iter().map(|p| p.crossing.successes).collect();
    let trials: Vec<u64> = points.iter().map(|p| p.crossing.trials).collect();
    let (lo, hi) = (*xs.first()?, *xs.last()?);
    if let Some(fit) = logistic_fit(&xs, &succ, &trials) {
        let t = fit.midpoint();
        if fit.slope > 0.0 && t >= lo && t <= hi {
            let se = fit.midpoint_std_error();
            return Some(ThresholdEstimate {
                alpha: t,
                ci_lo: t - Z95 * se,
                ci_hi: t + Z95 * se,
                method: ThresholdMethod::Logistic,
            });
        }
    }
    let ys: Vec<f64> = points.iter().map(|p| p.crossing.estimate).collect();
    interpolate_crossing(&xs, &ys, 0.5).map(|(t, a, b)| ThresholdEstimate {
        alpha: t,
        ci_lo: a,
        ci_hi: b,
        method: ThresholdMethod::Interpolation,
    })
}

/// Crossing probability of the claimed set for each appetite in `alphas`.
/// Replica `k` uses the configuration seeded by `replica_seed(seed, k)` for
/// every appetite, so the curve is monotone realization by realization.
pub fn sweep_alpha(
    lambda: f64,
    grid: &Grid,
    alphas: &[f64],
    replicas: u64,
    seed: u64,
    adjacency: Adjacency,
) -> Result<SweepResult> {
    check_alphas(alphas)?;
    let outcomes = (0..replicas)
        .map(|r| crossing_replica(lambda, grid, alphas, seed, r, adjacency))
        .collect::<Result<Vec<_>>>()?;
    summarize_sweep(lambda, grid, alphas, seed, adjacency, &outcomes)
}

/// On one coupled configuration, checks that a left-right crossing at
/// `alpha1` implies one at `alpha2 >= alpha1`.
pub fn monotone_crossing_check(
    lambda: f64,
    grid: &Grid,
    alpha1: f64,
    alpha2: f64,
    seed: u64,
    adjacency: Adjacency,
) -> Result<bool> {
    if alpha1 > alpha2 {
        return Err(Error::Parameter("alpha1 must not exceed alpha2"));
    }
    let centers = sample_poisson(grid.region(), lambda, seed)?;
    let cross = |alpha: f64| -> Result<bool> {
        let alloc = compute_allocation(&centers, grid, alpha)?;
        Ok(crossing(&label_clusters(&claimed_set(&alloc), adjacency), 0)?.crosses)
    };
    Ok(!cross(alpha1)? || cross(alpha2)?)
}
