use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stabperc::config::{ExperimentKind, Settings};
use stabperc::error::{Error, EXIT_RUNTIME};
use stabperc::experiments::{run, RunOptions};

/// Environment variable naming the default output directory.
const OUT_ENV: &str = "STABPERC_OUT";

#[derive(Parser)]
#[command(name = "stabperc", version, about = "Stable allocation of Poisson centers and its percolation")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Allocate one configuration and write snapshot, summary and picture.
    Allocate(Common),
    /// Crossing probability of the claimed set over a list of appetites.
    Sweep(Common),
    /// Monte Carlo estimate of the passability probability p_m.
    Pm(Common),
    /// Empirical tail of R_0 against the Chernoff bound.
    Tailbound(Common),
    /// Stability, containment and domination checks over many seeds.
    Diagnostics(Common),
    /// Draw a snapshot, or one configuration at several appetites.
    Render(Common),
}

#[derive(Args)]
struct Common {
    /// key = value file; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads (0 = all cores). Results do not depend on it.
    #[arg(long, env = "STABPERC_THREADS", default_value_t = 0)]
    threads: usize,
    #[arg(long)]
    dim: Option<String>,
    /// One side for a cube, or one per axis, comma separated.
    #[arg(long)]
    side: Option<String>,
    /// torus or box.
    #[arg(long)]
    topology: Option<String>,
    /// Cell side.
    #[arg(long = "h")]
    h: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    /// Appetite, or comma separated list.
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    replicas: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// face or face_corner.
    #[arg(long)]
    adjacency: Option<String>,
    /// Cube level for pm.
    #[arg(long = "m")]
    m: Option<String>,
    /// Radii for tailbound, comma separated.
    #[arg(long = "a")]
    a: Option<String>,
    /// Center file to use instead of sampling.
    #[arg(long)]
    centers: Option<String>,
    /// Snapshot to draw (render).
    #[arg(long)]
    snapshot: Option<String>,
    #[arg(long)]
    render: Option<String>,
    /// Also dump the radius field and painted set (allocate).
    #[arg(long)]
    majorant: Option<String>,
    /// Output directory; defaults to $STABPERC_OUT/<verb> or ./stabperc-out/<verb>.
    #[arg(long)]
    output: Option<String>,
}

impl Common {
    fn settings(&self, kind: ExperimentKind) -> Result<Settings, Error> {
        let mut s = match &self.config {
            Some(path) => Settings::from_file(path).map_err(|e| match e {
                Error::Io { path, source } => Error::config(
                    stabperc::error::Origin::Flag("config".into()),
                    format!("{}: {source}", path.display()),
                ),
                other => other,
            })?,
            None => Settings::default(),
        };
        let flags = [
            ("dim", &self.dim),
            ("side", &self.side),
            ("topology", &self.topology),
            ("h", &self.h),
            ("lambda", &self.lambda),
            ("alpha", &self.alpha),
            ("replicas", &self.replicas),
            ("seed", &self.seed),
            ("adjacency", &self.adjacency),
            ("m", &self.m),
            ("a", &self.a),
            ("centers", &self.centers),
            ("snapshot", &self.snapshot),
            ("render", &self.render),
            ("majorant", &self.majorant),
            ("output", &self.output),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                s.push_flag(key, v.clone());
            }
        }
        if !s.has("output") {
            let base = std::env::var_os(OUT_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("stabperc-out"));
            s.push_flag("output", base.join(kind.name()).to_string_lossy().into_owned());
        }
        Ok(s)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, common) = match &cli.verb {
        Verb::Allocate(c) => (ExperimentKind::Allocate, c),
        Verb::Sweep(c) => (ExperimentKind::Sweep, c),
        Verb::Pm(c) => (ExperimentKind::PmEstimate, c),
        Verb::Tailbound(c) => (ExperimentKind::TailBound, c),
        Verb::Diagnostics(c) => (ExperimentKind::Diagnostics, c),
        Verb::Render(c) => (ExperimentKind::Render, c),
    };
    let result = common
        .settings(kind)
        .and_then(|s| s.resolve(kind))
        .and_then(|cfg| run(&cfg, &RunOptions { threads: common.threads }));
    match result {
        Ok(report) => {
            print!("{}", report.summary);
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            if let Some(msg) = report.failed {
                eprintln!("error: {msg}");
                return ExitCode::from(EXIT_RUNTIME as u8);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
