//! Experiment drivers behind the CLI verbs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use stabperc_core::allocation::{
    claimed_set, compute_allocation, sated_fraction, verify_stability, Allocation, Grid,
};
use stabperc_core::booleanmodel::domination_check;
use stabperc_core::majorant::{
    beta_d, chernoff_tail_bound, painted_set, passable_replica, r_field, sample_r_tail,
    verify_containment, verify_painted_cover, zeta, CubeLattice,
};
use stabperc_core::percolation::{crossing, crossing_replica, label_clusters, summarize_sweep, SweepResult};
use stabperc_core::pointprocess::{sample_poisson, CenterSet, Region};
use stabperc_core::rng::{replica_seed, RNG_ID};
use stabperc_core::stats::Proportion;
use stabperc_core::ENGINE_VERSION;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{Error, Result};
use crate::formats::{
    allocation_from_snapshot, allocation_snapshot, centers_to_text, mask_from_snapshot,
    mask_snapshot, painted_snapshot, read_centers, rfield_snapshot, sweep_csv, threshold_block,
    write_file, Snapshot,
};
use crate::parallel::replicate;
use crate::render::{panels, render_allocation, render_mask, BLACK};

#[derive(Debug, Default, Clone)]
pub struct RunOptions {
    /// Worker threads; `0` lets rayon decide.
    pub threads: usize,
}

/// Files written and a short human-readable summary.
#[derive(Debug, Default, Clone)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub summary: String,
    /// Set when a diagnostic found violations.
    pub failed: Option<String>,
}

impl RunReport {
    fn write(&mut self, out: &Path, name: &str, bytes: &[u8]) -> Result<()> {
        let path = out.join(name);
        write_file(&path, bytes)?;
        self.files.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, out: &Path, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Runtime(e.to_string()))?;
        text.push('\n');
        self.write(out, name, text.as_bytes())
    }

    fn line(&mut self, s: impl AsRef<str>) {
        self.summary.push_str(s.as_ref());
        self.summary.push('\n');
    }
}

pub fn run(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunReport> {
    std::fs::create_dir_all(&cfg.output).map_err(|e| Error::io(&cfg.output, e))?;
    let mut report = RunReport::default();
    match cfg.kind {
        ExperimentKind::Allocate => run_allocate(cfg, &mut report)?,
        ExperimentKind::Sweep => run_sweep(cfg, opts, &mut report)?,
        ExperimentKind::PmEstimate => run_pm(cfg, opts, &mut report)?,
        ExperimentKind::TailBound => run_tailbound(cfg, opts, &mut report)?,
        ExperimentKind::Diagnostics => run_diagnostics(cfg, opts, &mut report)?,
        ExperimentKind::Render => run_render(cfg, &mut report)?,
    }
    let manifest = manifest_text(cfg, &report.files);
    report.write(&cfg.output, "manifest.txt", manifest.as_bytes())?;
    Ok(report)
}

/// Comment lines with provenance followed by a re-runnable configuration.
pub fn manifest_text(cfg: &ExperimentConfig, files: &[PathBuf]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# engine = {ENGINE_VERSION}");
    let _ = writeln!(s, "# rng = {RNG_ID}");
    let _ = writeln!(s, "# output = {}", cfg.output.display());
    for f in files {
        if let Some(name) = f.file_name() {
            let _ = writeln!(s, "# file = {}", name.to_string_lossy());
        }
    }
    s.push_str(&cfg.to_text());
    s
}

fn region_of(cfg: &ExperimentConfig) -> Result<Region> {
    Ok(Region::new(&cfg.sides, cfg.topology)?)
}

/// The configured center file, or a Poisson sample with the master seed.
fn configuration(cfg: &ExperimentConfig, region: &Region) -> Result<CenterSet> {
    match &cfg.centers {
        Some(path) => {
            let c = read_centers(path)?;
            if c.region() != region {
                return Err(Error::Format {
                    path: path.clone(),
                    message: "center file window differs from the configured window".into(),
                });
            }
            Ok(c)
        }
        None => Ok(sample_poisson(region, cfg.lambda, cfg.seed)?),
    }
}

fn pixel_scale(grid: &Grid) -> usize {
    let n = grid.cells_per_axis().iter().copied().max().unwrap_or(1);
    (400 / n).max(1)
}

#[derive(Serialize)]
struct AllocationSummary {
    engine: &'static str,
    rng: &'static str,
    seed: u64,
    lambda: f64,
    alpha: f64,
    h: f64,
    centers: usize,
    cells: usize,
    quota: u64,
    realized_appetite: f64,
    claimed_fraction: f64,
    sated_fraction: f64,
    disputed_cells: usize,
    unstable_pairs: usize,
    crosses: Vec<bool>,
    containment_violations: Option<usize>,
    uncovered_cubes: Option<usize>,
    max_r: Option<f64>,
}

fn crossings(alloc: &Allocation, cfg: &ExperimentConfig) -> Result<Vec<bool>> {
    if alloc.grid().region().is_torus() {
        return Ok(Vec::new());
    }
    let labels = label_clusters(&claimed_set(alloc), cfg.adjacency);
    (0..cfg.dim).map(|a| Ok(crossing(&labels, a)?.crosses)).collect()
}

fn run_allocate(cfg: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    let region = region_of(cfg)?;
    let grid = Grid::new(&region, cfg.h)?;
    let centers = configuration(cfg, &region)?;
    let alpha = cfg.alphas[0];
    let alloc = compute_allocation(&centers, &grid, alpha)?;
    let out = &cfg.output;
    report.write(out, "centers.txt", centers_to_text(&centers).as_bytes())?;
    report.write(out, "allocation.snap", &allocation_snapshot(&alloc, &centers).to_bytes())?;
    let claimed = claimed_set(&alloc);
    report.write(out, "claimed.snap", &mask_snapshot(&claimed, &grid, "claimed").to_bytes())?;

    let (mut containment, mut uncovered, mut max_r) = (None, None, None);
    if cfg.majorant {
        let lattice = CubeLattice::for_region(&region)?;
        let field = r_field(&zeta(&centers, &lattice));
        let painted = painted_set(&field)?;
        containment = Some(verify_containment(&alloc, &centers, &field)?.len());
        uncovered = Some(verify_painted_cover(&alloc, &painted).len());
        max_r = Some(field.max());
        report.write(out, "rfield.snap", &rfield_snapshot(&field).to_bytes())?;
        report.write(out, "painted.snap", &painted_snapshot(&painted).to_bytes())?;
    }
    if cfg.render && cfg.dim == 2 {
        let img = render_allocation(&alloc, &centers, pixel_scale(&grid))?;
        report.write(out, "allocation.ppm", &img.to_ppm())?;
    }
    let summary = AllocationSummary {
        engine: ENGINE_VERSION,
        rng: RNG_ID,
        seed: centers.seed(),
        lambda: centers.intensity(),
        alpha,
        h: cfg.h,
        centers: centers.len(),
        cells: grid.num_cells(),
        quota: alloc.quota(),
        realized_appetite: alloc.realized_appetite(),
        claimed_fraction: claimed.fraction(),
        sated_fraction: sated_fraction(&alloc),
        disputed_cells: alloc.num_disputed(),
        unstable_pairs: verify_stability(&alloc, &centers)?.len(),
        crosses: crossings(&alloc, cfg)?,
        containment_violations: containment,
        uncovered_cubes: uncovered,
        max_r,
    };
    report.line(format!(
        "{} centers, quota {} cells, claimed {:.4}, sated {:.4}, unstable pairs {}",
        summary.centers, summary.quota, summary.claimed_fraction, summary.sated_fraction, summary.unstable_pairs
    ));
    report.json(out, "summary.json", &summary)
}

/// Coupled crossing sweep over `cfg.alphas`.
pub fn sweep(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<SweepResult> {
    let grid = Grid::new(&region_of(cfg)?, cfg.h)?;
    let outcomes = replicate(cfg.replicas, opts.threads, |r| {
        Ok(crossing_replica(cfg.lambda, &grid, &cfg.alphas, cfg.seed, r, cfg.adjacency)?)
    })?;
    Ok(summarize_sweep(cfg.lambda, &grid, &cfg.alphas, cfg.seed, cfg.adjacency, &outcomes)?)
}

fn run_sweep(cfg: &ExperimentConfig, opts: &RunOptions, report: &mut RunReport) -> Result<()> {
    if cfg.topology != stabperc_core::pointprocess::Topology::Box {
        return Err(Error::Runtime("crossings need a box window".into()));
    }
    let result = sweep(cfg, opts)?;
    report.write(&cfg.output, "sweep.csv", sweep_csv(&result).as_bytes())?;
    let block = threshold_block(&result);
    report.write(&cfg.output, "threshold.txt", block.as_bytes())?;
    for p in &result.points {
        report.line(format!("alpha {:<6} crossing {:.3} [{:.3}, {:.3}]", p.alpha, p.crossing.estimate, p.crossing.ci_lo, p.crossing.ci_hi));
    }
    match &result.threshold {
        Some(t) => report.line(format!("alpha_p ~ {:.4} [{:.4}, {:.4}] ({})", t.alpha, t.ci_lo, t.ci_hi, t.method.name())),
        None => report.line("alpha_p: no crossing of 1/2 inside the sweep"),
    }
    Ok(())
}

#[derive(Serialize)]
struct ProportionJson {
    successes: u64,
    trials: u64,
    estimate: f64,
    ci_lo: f64,
    ci_hi: f64,
}

impl From<Proportion> for ProportionJson {
    fn from(p: Proportion) -> Self {
        ProportionJson {
            successes: p.successes,
            trials: p.trials,
            estimate: p.estimate,
            ci_lo: p.ci_lo,
            ci_hi: p.ci_hi,
        }
    }
}

#[derive(Serialize)]
struct PmJson {
    dim: usize,
    m: f64,
    lambda: f64,
    seed: u64,
    adjacency: &'static str,
    diameter: &'static str,
    p_m: ProportionJson,
    large_component: ProportionJson,
    small_radii: ProportionJson,
}

fn run_pm(cfg: &ExperimentConfig, opts: &RunOptions, report: &mut RunReport) -> Result<()> {
    let verdicts = replicate(cfg.replicas, opts.threads, |r| {
        Ok(passable_replica(cfg.dim, cfg.m, cfg.lambda, cfg.seed, r, cfg.adjacency)?)
    })?;
    let count = |f: &dyn Fn(&stabperc_core::majorant::PassableVerdict) -> bool| {
        Proportion::new(verdicts.iter().filter(|v| f(v)).count() as u64, cfg.replicas)
    };
    let p = count(&|v| v.passable);
    let json = PmJson {
        dim: cfg.dim,
        m: cfg.m,
        lambda: cfg.lambda,
        seed: cfg.seed,
        adjacency: cfg.adjacency.name(),
        diameter: "linf",
        p_m: p.into(),
        large_component: count(&|v| v.large_component).into(),
        small_radii: count(&|v| v.small_radii).into(),
    };
    report.line(format!("p_m = {:.4} [{:.4}, {:.4}] over {} replicas", p.estimate, p.ci_lo, p.ci_hi, p.trials));
    report.json(&cfg.output, "pm.json", &json)
}

/// Per radius: replicas with `R_0 > a`, the estimate, its Monte Carlo
/// standard error and the Chernoff bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailRow {
    pub a: f64,
    pub replicas: u64,
    pub exceed: u64,
    pub p_hat: f64,
    pub mc_sigma: f64,
    pub bound: f64,
    pub within: bool,
}

pub fn tail_rows(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<TailRow>> {
    let a_max = cfg.radii.iter().copied().fold(0.0, f64::max);
    let samples = replicate(cfg.replicas, opts.threads, |r| {
        Ok(sample_r_tail(a_max, cfg.lambda, cfg.dim, replica_seed(cfg.seed, r))?)
    })?;
    Ok(cfg
        .radii
        .iter()
        .map(|&a| {
            let n = cfg.replicas;
            let exceed = samples.iter().filter(|&&r| r > a).count() as u64;
            let p_hat = exceed as f64 / n as f64;
            let mc_sigma = (p_hat * (1.0 - p_hat) / n as f64).sqrt();
            let bound = chernoff_tail_bound(a, cfg.lambda, cfg.dim);
            TailRow {
                a,
                replicas: n,
                exceed,
                p_hat,
                mc_sigma,
                bound,
                within: p_hat <= bound + 3.0 * mc_sigma,
            }
        })
        .collect())
}

fn run_tailbound(cfg: &ExperimentConfig, opts: &RunOptions, report: &mut RunReport) -> Result<()> {
    let rows = tail_rows(cfg, opts)?;
    let mut csv = String::from("a,replicas,exceed,p_hat,mc_sigma,bound,within\n");
    for r in &rows {
        let _ = writeln!(csv, "{},{},{},{},{},{},{}", r.a, r.replicas, r.exceed, r.p_hat, r.mc_sigma, r.bound, r.within);
        report.line(format!("a {:<5} P[R > a] = {:.5} +- {:.5}  bound {:.5}", r.a, r.p_hat, r.mc_sigma, r.bound));
    }
    report.write(&cfg.output, "tailbound.csv", csv.as_bytes())?;
    if rows.iter().any(|r| !r.within) {
        report.failed = Some("empirical tail above the bound".into());
    }
    Ok(())
}

/// Violation counts of one replica at one appetite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticRow {
    pub replica: u64,
    pub alpha: f64,
    pub centers: usize,
    pub unstable: usize,
    pub containment: usize,
    pub uncovered: usize,
    pub domination: usize,
}

impl DiagnosticRow {
    pub fn violations(&self) -> usize {
        self.unstable + self.containment + self.uncovered + self.domination
    }
}

pub fn diagnostic_rows(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<DiagnosticRow>> {
    let region = region_of(cfg)?;
    let grid = Grid::new(&region, cfg.h)?;
    let lattice = CubeLattice::for_region(&region)?;
    let per_replica = replicate(cfg.replicas, opts.threads, |r| {
        let centers = sample_poisson(&region, cfg.lambda, replica_seed(cfg.seed, r))?;
        let field = r_field(&zeta(&centers, &lattice));
        let painted = painted_set(&field)?;
        cfg.alphas
            .iter()
            .map(|&alpha| {
                let alloc = compute_allocation(&centers, &grid, alpha)?;
                Ok(DiagnosticRow {
                    replica: r,
                    alpha,
                    centers: centers.len(),
                    unstable: verify_stability(&alloc, &centers)?.len(),
                    containment: verify_containment(&alloc, &centers, &field)?.len(),
                    uncovered: verify_painted_cover(&alloc, &painted).len(),
                    domination: domination_check(&alloc, &centers)?.len(),
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(per_replica.into_iter().flatten().collect())
}

#[derive(Serialize)]
struct DiagnosticTotals {
    replicas: u64,
    alphas: Vec<f64>,
    beta: u32,
    unstable: usize,
    containment: usize,
    uncovered: usize,
    domination: usize,
}

fn run_diagnostics(cfg: &ExperimentConfig, opts: &RunOptions, report: &mut RunReport) -> Result<()> {
    let rows = diagnostic_rows(cfg, opts)?;
    let mut csv = String::from("replica,alpha,centers,unstable,containment,uncovered,domination\n");
    for r in &rows {
        let _ = writeln!(csv, "{},{},{},{},{},{},{}", r.replica, r.alpha, r.centers, r.unstable, r.containment, r.uncovered, r.domination);
    }
    report.write(&cfg.output, "diagnostics.csv", csv.as_bytes())?;
    let sum = |f: fn(&DiagnosticRow) -> usize| rows.iter().map(f).sum::<usize>();
    let totals = DiagnosticTotals {
        replicas: cfg.replicas,
        alphas: cfg.alphas.clone(),
        beta: beta_d(cfg.dim),
        unstable: sum(|r| r.unstable),
        containment: sum(|r| r.containment),
        uncovered: sum(|r| r.uncovered),
        domination: sum(|r| r.domination),
    };
    report.line(format!(
        "{} runs: unstable {}, containment {}, uncovered {}, domination {}",
        rows.len(), totals.unstable, totals.containment, totals.uncovered, totals.domination
    ));
    if rows.iter().any(|r| r.violations() > 0) {
        report.failed = Some("diagnostics found violations".into());
    }
    report.json(&cfg.output, "diagnostics.json", &totals)
}

fn run_render(cfg: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    let img = match &cfg.snapshot {
        Some(path) => {
            let snap = Snapshot::read(path)?;
            match snap.get("kind") {
                Some("allocation") => {
                    let (alloc, centers) = allocation_from_snapshot(&snap, path)?;
                    render_allocation(&alloc, &centers, pixel_scale(alloc.grid()))?
                }
                Some("mask") => {
                    let (mask, grid) = mask_from_snapshot(&snap, path)?;
                    render_mask(&mask, BLACK, pixel_scale(&grid))?
                }
                other => {
                    return Err(Error::Format {
                        path: path.clone(),
                        message: format!("cannot render snapshot kind {other:?}"),
                    })
                }
            }
        }
        None => {
            let region = region_of(cfg)?;
            let grid = Grid::new(&region, cfg.h)?;
            let centers = configuration(cfg, &region)?;
            let mut images = Vec::new();
            for &alpha in &cfg.alphas {
                let alloc = compute_allocation(&centers, &grid, alpha)?;
                images.push(render_allocation(&alloc, &centers, pixel_scale(&grid))?);
                report.line(format!("alpha {alpha}: claimed {:.4}", claimed_set(&alloc).fraction()));
            }
            panels(&images, 6)
        }
    };
    report.write(&cfg.output, "render.ppm", &img.to_ppm())
}
