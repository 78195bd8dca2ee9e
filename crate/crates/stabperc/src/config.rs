//! Flat `key = value` experiment configuration.
//!
//! Lines are `key = value`; `#` starts a comment and blank lines are ignored.
//! Lists are comma separated. Lengths are in model units. Unknown or
//! repeated keys are errors, reported with the file and line.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use stabperc_core::percolation::Adjacency;
use stabperc_core::pointprocess::Topology;

use crate::error::{Error, Origin, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Allocate,
    Sweep,
    PmEstimate,
    TailBound,
    Diagnostics,
    Render,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Allocate,
        ExperimentKind::Sweep,
        ExperimentKind::PmEstimate,
        ExperimentKind::TailBound,
        ExperimentKind::Diagnostics,
        ExperimentKind::Render,
    ];

    /// CLI verb and config value.
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Allocate => "allocate",
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::PmEstimate => "pm",
            ExperimentKind::TailBound => "tailbound",
            ExperimentKind::Diagnostics => "diagnostics",
            ExperimentKind::Render => "render",
        }
    }

    pub fn parse(s: &str) -> Option<ExperimentKind> {
        Self::ALL.into_iter().find(|k| k.name().eq_ignore_ascii_case(s))
    }
}

/// Fully resolved experiment parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub dim: usize,
    pub sides: Vec<f64>,
    pub topology: Topology,
    pub h: f64,
    pub lambda: f64,
    pub alphas: Vec<f64>,
    pub replicas: u64,
    pub seed: u64,
    pub adjacency: Adjacency,
    /// Level of the cube in `pm`.
    pub m: f64,
    /// Radii `a` in `tailbound`.
    pub radii: Vec<f64>,
    /// Optional center file replacing the sampled configuration.
    pub centers: Option<PathBuf>,
    /// Snapshot to draw in `render`.
    pub snapshot: Option<PathBuf>,
    pub render: bool,
    /// Dump the radius field and painted set next to an allocation.
    pub majorant: bool,
    pub output: PathBuf,
}

pub const KEYS: &[&str] = &[
    "experiment", "dim", "side", "topology", "h", "lambda", "alpha", "replicas", "seed",
    "adjacency", "m", "a", "centers", "snapshot", "render", "majorant", "output",
];

impl ExperimentConfig {
    /// Defaults for `kind`, matching the reference experiments.
    pub fn defaults(kind: ExperimentKind) -> ExperimentConfig {
        let mut c = ExperimentConfig {
            kind,
            dim: 2,
            sides: vec![20.0, 20.0],
            topology: Topology::Box,
            h: 0.05,
            lambda: 1.0,
            alphas: vec![0.6],
            replicas: 1,
            seed: 1,
            adjacency: Adjacency::Face,
            m: 7.0,
            radii: vec![1.0, 2.0, 3.0],
            centers: None,
            snapshot: None,
            render: false,
            majorant: false,
            output: PathBuf::from("."),
        };
        match kind {
            ExperimentKind::Allocate => c.render = true,
            ExperimentKind::Sweep => {
                c.alphas = vec![0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85];
                c.replicas = 200;
            }
            ExperimentKind::PmEstimate => {
                c.lambda = 0.01;
                c.replicas = 1000;
            }
            ExperimentKind::TailBound => {
                c.lambda = 0.01;
                c.replicas = 10_000;
            }
            ExperimentKind::Diagnostics => {
                c.topology = Topology::Torus;
                c.h = 0.1;
                c.alphas = vec![1.0];
                c.replicas = 100;
            }
            ExperimentKind::Render => c.alphas = vec![0.25, 0.45, 0.6, 0.8],
        }
        c
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str, origin: &Origin) -> Result<()> {
        let bad = |msg: String| Error::config(origin.clone(), msg);
        let value = value.trim();
        match key {
            "experiment" => {
                let kind = ExperimentKind::parse(value)
                    .ok_or_else(|| bad(format!("unknown experiment '{value}'")))?;
                if kind != self.kind {
                    return Err(bad(format!(
                        "experiment '{value}' does not match the requested '{}'",
                        self.kind.name()
                    )));
                }
            }
            "dim" => {
                let d: usize = parse_num(value, key, origin)?;
                if !(2..=4).contains(&d) {
                    return Err(bad(format!("dim must be 2, 3 or 4, got {d}")));
                }
                self.dim = d;
            }
            "side" => self.sides = parse_list(value, key, origin)?,
            "topology" => {
                self.topology = Topology::parse(value)
                    .ok_or_else(|| bad(format!("topology must be torus or box, got '{value}'")))?
            }
            "h" => self.h = parse_num(value, key, origin)?,
            "lambda" => self.lambda = parse_num(value, key, origin)?,
            "alpha" => self.alphas = parse_list(value, key, origin)?,
            "replicas" => self.replicas = parse_num(value, key, origin)?,
            "seed" => self.seed = parse_num(value, key, origin)?,
            "adjacency" => {
                self.adjacency = Adjacency::parse(value)
                    .ok_or_else(|| bad(format!("adjacency must be face or face_corner, got '{value}'")))?
            }
            "m" => self.m = parse_num(value, key, origin)?,
            "a" => self.radii = parse_list(value, key, origin)?,
            "centers" => self.centers = non_empty_path(value),
            "snapshot" => self.snapshot = non_empty_path(value),
            "render" => self.render = parse_bool(value, key, origin)?,
            "majorant" => self.majorant = parse_bool(value, key, origin)?,
            "output" => self.output = PathBuf::from(value),
            _ => return Err(bad(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Range checks that involve several keys. `origins` maps keys to where
    /// they were set so errors point at the offending line.
    pub fn validate(&mut self, origin_of: impl Fn(&str) -> Origin) -> Result<()> {
        let bad = |key: &str, msg: String| Error::config(origin_of(key), msg);
        if self.sides.len() == 1 {
            self.sides = vec![self.sides[0]; self.dim];
        }
        if self.sides.len() != self.dim {
            return Err(bad("side", format!("expected 1 or {} sides, got {}", self.dim, self.sides.len())));
        }
        if let Some(&l) = self.sides.iter().find(|&&l| !(l > 0.0 && l.is_finite())) {
            return Err(bad("side", format!("side must be positive, got {l}")));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(bad("h", format!("h must be positive, got {}", self.h)));
        }
        for &l in &self.sides {
            let n = (l / self.h).round();
            if n < 1.0 || (n * self.h - l).abs() > 1e-9 * l {
                return Err(bad("h", format!("h = {} does not divide side {l}", self.h)));
            }
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(bad("lambda", format!("lambda must be nonnegative, got {}", self.lambda)));
        }
        if self.alphas.is_empty() {
            return Err(bad("alpha", "at least one alpha is required".into()));
        }
        if let Some(&a) = self.alphas.iter().find(|&&a| !(a >= 0.0 && a.is_finite())) {
            return Err(bad("alpha", format!("alpha must be nonnegative, got {a}")));
        }
        match self.kind {
            ExperimentKind::Allocate if self.alphas.len() != 1 => {
                return Err(bad("alpha", "allocate takes a single alpha".into()));
            }
            ExperimentKind::Sweep | ExperimentKind::Render
                if self.alphas.windows(2).any(|w| w[0] >= w[1]) =>
            {
                return Err(bad("alpha", "alpha values must be strictly increasing".into()));
            }
            _ => {}
        }
        if self.replicas == 0 || self.replicas > 100_000_000 {
            return Err(bad("replicas", format!("replicas must be in 1..=1e8, got {}", self.replicas)));
        }
        if !(self.m > 0.0 && self.m.is_finite()) {
            return Err(bad("m", format!("m must be positive, got {}", self.m)));
        }
        if self.radii.is_empty() || self.radii.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
            return Err(bad("a", "radii must be positive".into()));
        }
        if self.kind == ExperimentKind::Render && self.dim != 2 {
            return Err(bad("dim", "render is 2D only".into()));
        }
        if self.kind == ExperimentKind::Diagnostics || self.majorant {
            let integral = self.sides.iter().all(|l| l.fract() == 0.0);
            if self.topology == Topology::Torus && !integral {
                return Err(bad("side", "unit cubes need whole-number sides on a torus".into()));
            }
        }
        Ok(())
    }

    /// `key = value` lines that reproduce this configuration. The output
    /// directory is left out so a re-run can be pointed elsewhere.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let list = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",");
        let _ = writeln!(s, "experiment = {}", self.kind.name());
        let _ = writeln!(s, "dim = {}", self.dim);
        let _ = writeln!(s, "side = {}", list(&self.sides));
        let _ = writeln!(s, "topology = {}", self.topology.name());
        let _ = writeln!(s, "h = {}", self.h);
        let _ = writeln!(s, "lambda = {}", self.lambda);
        let _ = writeln!(s, "alpha = {}", list(&self.alphas));
        let _ = writeln!(s, "replicas = {}", self.replicas);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "adjacency = {}", self.adjacency.name());
        let _ = writeln!(s, "m = {}", self.m);
        let _ = writeln!(s, "a = {}", list(&self.radii));
        if let Some(p) = &self.centers {
            let _ = writeln!(s, "centers = {}", p.display());
        }
        if let Some(p) = &self.snapshot {
            let _ = writeln!(s, "snapshot = {}", p.display());
        }
        let _ = writeln!(s, "render = {}", self.render);
        let _ = writeln!(s, "majorant = {}", self.majorant);
        s
    }
}

/// Settings collected from a file and the command line, in application order.
#[derive(Debug, Default, Clone)]
pub struct Settings {
    entries: Vec<(String, String, Origin)>,
}

impl Settings {
    pub fn from_file(path: &Path) -> Result<Settings> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Settings::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, source: &str) -> Result<Settings> {
        let mut out = Settings::default();
        for (k, raw) in text.lines().enumerate() {
            let origin = Origin::File {
                path: source.to_string(),
                line: k + 1,
            };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::config(origin, format!("expected 'key = value', got '{line}'")));
            };
            let key = key.trim().to_ascii_lowercase();
            if out.entries.iter().any(|(k2, _, o)| *k2 == key && matches!(o, Origin::File { .. })) {
                return Err(Error::config(origin, format!("duplicate key '{key}'")));
            }
            out.entries.push((key, value.trim().to_string(), origin));
        }
        Ok(out)
    }

    /// Adds a command-line override; later entries win.
    pub fn push_flag(&mut self, key: &str, value: impl Into<String>) {
        self.entries
            .push((key.to_string(), value.into(), Origin::Flag(key.to_string())));
    }

    pub fn has(&self, key: &str) -> bool {
        self.entries.iter().any(|(k, _, _)| k == key)
    }

    pub fn resolve(&self, kind: ExperimentKind) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::defaults(kind);
        for (key, value, origin) in &self.entries {
            cfg.set(key, value, origin)?;
        }
        cfg.validate(|key| {
            self.entries
                .iter()
                .rev()
                .find(|(k, _, _)| k == key)
                .map(|(_, _, o)| o.clone())
                .unwrap_or(Origin::Default)
        })?;
        Ok(cfg)
    }
}

fn parse_num<T: std::str::FromStr>(value: &str, key: &str, origin: &Origin) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(origin.clone(), format!("invalid value '{value}' for {key}")))
}

fn parse_list(value: &str, key: &str, origin: &Origin) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|v| parse_num(v.trim(), key, origin))
        .collect()
}

fn parse_bool(value: &str, key: &str, origin: &Origin) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::config(origin.clone(), format!("invalid boolean '{value}' for {key}"))),
    }
}

fn non_empty_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        for kind in ExperimentKind::ALL {
            let cfg = Settings::default().resolve(kind).unwrap();
            assert_eq!(cfg.kind, kind);
        }
    }

    #[test]
    fn errors_name_the_line() {
        let s = Settings::parse("h = 0.05\n\n# comment\nbogus = 3\n", "cfg.txt").unwrap();
        let err = s.resolve(ExperimentKind::Sweep).unwrap_err();
        assert_eq!(err.to_string(), "cfg.txt:4: unknown key 'bogus'");
        assert_eq!(err.exit_code(), 2);

        let s = Settings::parse("side = 20\nh = 0.3\n", "c").unwrap();
        assert_eq!(
            s.resolve(ExperimentKind::Allocate).unwrap_err().to_string(),
            "c:2: h = 0.3 does not divide side 20"
        );
        assert!(Settings::parse("h = 1\nh = 2\n", "c").is_err());
        assert!(Settings::parse("just text\n", "c").is_err());
    }

    #[test]
    fn flags_override_file() {
        let mut s = Settings::parse("lambda = 2\nalpha = 0.3\n", "c").unwrap();
        s.push_flag("lambda", "0.5");
        let cfg = s.resolve(ExperimentKind::Allocate).unwrap();
        assert_eq!(cfg.lambda, 0.5);
        assert_eq!(cfg.alphas, vec![0.3]);
        let mut bad = Settings::default();
        bad.push_flag("replicas", "0");
        assert_eq!(bad.resolve(ExperimentKind::Sweep).unwrap_err().to_string(), "--replicas: replicas must be in 1..=1e8, got 0");
    }

    #[test]
    fn text_round_trip() {
        let mut s = Settings::default();
        s.push_flag("alpha", "0.1,0.2,0.30000000000000004");
        s.push_flag("side", "12,8");
        s.push_flag("topology", "torus");
        s.push_flag("h", "0.25");
        let cfg = s.resolve(ExperimentKind::Sweep).unwrap();
        let again = Settings::parse(&cfg.to_text(), "m").unwrap().resolve(ExperimentKind::Sweep).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn experiment_must_match_verb() {
        let s = Settings::parse("experiment = sweep\n", "c").unwrap();
        assert!(s.resolve(ExperimentKind::Sweep).is_ok());
        assert!(s.resolve(ExperimentKind::Render).is_err());
    }
}
