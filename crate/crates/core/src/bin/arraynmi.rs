use std::error::Error;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use arraynmi::channel::SinrAveraging;
use arraynmi::experiment::{
    run_point, run_sweep_d, run_sweep_m, run_two_ray, AngleSet, ExperimentConfig, Metric, Table, DEFAULT_M_GRID,
};
use arraynmi::geometry::TopologyKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

/// Normalized mean interference of massive-MIMO array topologies.
#[derive(Parser, Debug)]
#[command(name = "arraynmi", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// NMI against the antenna count (closed form and Monte Carlo).
    SweepM(Common),
    /// NMI and MMSE SINR against the aperture diagonal.
    SweepD(Common),
    /// Two-ray interference against angular offset.
    TwoRay(Common),
    /// A single configuration.
    Point {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "nmi")]
        metric: MetricArg,
        /// Append the row to an existing CSV instead of overwriting it.
        #[arg(long)]
        append: bool,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum MetricArg {
    Nmi,
    Sinr,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum AveragingArg {
    Linear,
    Db,
}

#[derive(Args, Debug)]
struct Common {
    /// Topologies (comma separated, or "all").
    #[arg(long, value_delimiter = ',')]
    topology: Option<Vec<String>>,
    /// Antenna count(s).
    #[arg(long, value_delimiter = ',')]
    m: Option<Vec<usize>>,
    /// Fixed element spacing, wavelengths.
    #[arg(long)]
    d: Option<f64>,
    /// Aperture diagonal(s), wavelengths.
    #[arg(long = "D", value_delimiter = ',')]
    diagonal: Option<Vec<f64>>,
    /// Angular model: measured or uniform.
    #[arg(long)]
    angles: Option<AngleSet>,
    /// Monte Carlo ray pairs per NMI estimate (0 disables).
    #[arg(long)]
    mc_samples: Option<usize>,
    /// User drops per SINR estimate.
    #[arg(long)]
    sinr_drops: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Users per drop.
    #[arg(long)]
    users: Option<usize>,
    /// Include the user's own channel in the MMSE covariance.
    #[arg(long)]
    include_own: bool,
    /// Average SINR in linear units or in dB.
    #[arg(long, value_enum)]
    sinr_averaging: Option<AveragingArg>,
    /// Largest two-ray offset, degrees.
    #[arg(long)]
    max_offset_deg: Option<f64>,
    /// Two-ray offset step, degrees.
    #[arg(long)]
    step_deg: Option<f64>,
    /// Flat TOML file with parameter values; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV; a manifest is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn parse_topologies(names: &[String]) -> Result<Vec<TopologyKind>, Box<dyn Error>> {
    if names.len() == 1 && names[0].eq_ignore_ascii_case("all") {
        return Ok(TopologyKind::ALL.to_vec());
    }
    names
        .iter()
        .map(|n| n.parse::<TopologyKind>().map_err(|e| e.to_string().into()))
        .collect()
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig, Box<dyn Error>> {
        let mut cfg = match &self.config {
            Some(path) => toml::from_str(&fs::read_to_string(path)?)?,
            None => ExperimentConfig::default(),
        };
        if let Some(t) = &self.topology {
            cfg.topologies = parse_topologies(t)?;
        }
        if let Some(m) = &self.m {
            cfg.m = Some(m.clone());
        }
        // a spacing or aperture on the command line replaces the other
        if let Some(d) = self.d {
            cfg.d = Some(d);
            if self.diagonal.is_none() {
                cfg.diagonal = None;
            }
        }
        if let Some(diag) = &self.diagonal {
            cfg.diagonal = Some(diag.clone());
            if self.d.is_none() {
                cfg.d = None;
            }
        }
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field {
                    cfg.$field = v;
                }
            )*};
        }
        set!(angles, mc_samples, sinr_drops, seed, users, max_offset_deg, step_deg);
        if self.include_own {
            cfg.include_own = true;
        }
        if let Some(a) = self.sinr_averaging {
            cfg.sinr_averaging = match a {
                AveragingArg::Linear => SinrAveraging::Linear,
                AveragingArg::Db => SinrAveraging::Decibel,
            };
        }
        Ok(cfg)
    }
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn run(cli: Cli) -> Result<(), Box<dyn Error>> {
    let (common, command) = match &cli.command {
        Command::SweepM(c) => (c, "sweep-m"),
        Command::SweepD(c) => (c, "sweep-d"),
        Command::TwoRay(c) => (c, "two-ray"),
        Command::Point { common, .. } => (common, "point"),
    };
    let spec = common.resolve()?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = common.threads {
        pool = pool.num_threads(n);
    }
    let pool = pool.build()?;
    let start = Instant::now();
    let (table, failures, append): (Table, Vec<String>, bool) = pool.install(|| -> Result<_, Box<dyn Error + Send + Sync>> {
        Ok(match &cli.command {
            Command::SweepM(_) => {
                let o = run_sweep_m(&spec)?;
                (o.table(), o.failures, false)
            }
            Command::SweepD(_) => {
                let o = run_sweep_d(&spec)?;
                (o.table(), o.failures, false)
            }
            Command::TwoRay(_) => {
                let o = run_two_ray(&spec)?;
                (o.table(), o.failures, false)
            }
            Command::Point { metric, append, .. } => {
                let metric = match metric {
                    MetricArg::Nmi => Metric::Nmi,
                    MetricArg::Sinr => Metric::Sinr,
                };
                let o = run_point(&spec, metric)?;
                (o.table(), o.failures, *append)
            }
        })
    })
    .map_err(|e| e as Box<dyn Error>)?;
    let wall = start.elapsed().as_secs_f64();
    for f in &failures {
        eprintln!("warning: {f}");
    }
    let csv = table.to_csv();
    let Some(out) = &common.out else {
        print!("{csv}");
        return Ok(());
    };
    if append && out.exists() {
        let body: String = csv.lines().skip(1).map(|l| format!("{l}\n")).collect();
        OpenOptions::new().append(true).open(out)?.write_all(body.as_bytes())?;
    } else {
        fs::write(out, &csv)?;
    }
    if command == "point" {
        print!("{csv}");
    }
    let manifest = json!({
        "tool": "arraynmi",
        "version": concat!("arraynmi ", env!("CARGO_PKG_VERSION")),
        "command": command,
        "parameters": spec,
        "seed": spec.seed,
        "truncation": spec.truncation(),
        "default_m_grid": DEFAULT_M_GRID,
        "threads": pool.current_num_threads(),
        "rows": table.rows.len(),
        "failures": failures,
        "wall_time_s": wall,
    });
    fs::write(manifest_path(out), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
