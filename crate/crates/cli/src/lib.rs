//! Command-line driver: corridor simulations with CSV/JSON exports, and
//! single-zone planner queries.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use cav_core::energy_optimal::{check_inactive_constraints, solve_energy, TimedBoundary, TimedViolation};
use cav_core::export::{write_schedules, write_trajectories};
use cav_core::scenario::{Scenario, DEFAULT_SCENARIO};
use cav_core::sim::{run, RunOutput, SafetyCounts, SimConfig};
use cav_core::time_optimal::{plan_min_time, BangBangPlan, ZoneBoundary};
use cav_core::Limits;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATIONS: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

/// Environment variable holding the log filter, e.g. `CAV_LOG=debug`.
pub const LOG_ENV: &str = "CAV_LOG";

#[derive(Debug, Parser)]
#[command(
    name = "cav",
    version,
    about = "Coordinate automated vehicles through coupled intersections"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a corridor simulation and write schedules, trajectories and reports.
    Simulate(SimulateArgs),
    /// Solve a single-zone planning problem and print it as JSON.
    Plan {
        #[command(subcommand)]
        kind: PlanKind,
    },
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Scenario document; the built-in two-intersection corridor if omitted.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub cavs: Option<usize>,
    /// Safety headway in seconds.
    #[arg(long)]
    pub headway: Option<f64>,
    /// Run K consecutive seeds on worker threads, one subdirectory each.
    #[arg(long, value_name = "K")]
    pub sweep: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct BoundaryArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub p_s: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub v_s: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub p_e: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub v_e: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = Limits::default().u_min)]
    pub u_min: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = Limits::default().u_max)]
    pub u_max: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = Limits::default().v_min)]
    pub v_min: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = Limits::default().v_max)]
    pub v_max: f64,
}

impl BoundaryArgs {
    fn boundary(&self) -> ZoneBoundary {
        ZoneBoundary::new(self.p_s, self.v_s, self.p_e, self.v_e)
    }

    fn limits(&self) -> Result<Limits, String> {
        Limits::new(self.u_min, self.u_max, self.v_min, self.v_max).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Subcommand)]
pub enum PlanKind {
    /// Minimum-time bang-bang plan.
    MinTime(BoundaryArgs),
    /// Minimum-energy cubic over a fixed horizon.
    MinEnergy {
        #[command(flatten)]
        boundary: BoundaryArgs,
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
        t_entry: f64,
        #[arg(long, allow_negative_numbers = true)]
        t_exit: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifestCounts {
    pub cavs: usize,
    pub zones: usize,
    pub zone_entries: usize,
    pub violations: usize,
    pub safety: SafetyCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub version: String,
    pub seed: u64,
    pub scenario: String,
    pub scenario_sha256: String,
    pub config: SimConfig,
    pub wall_clock_s: f64,
    pub counts: Option<ManifestCounts>,
    pub error: Option<String>,
    pub exit_code: i32,
}

struct LoadedScenario {
    scenario: Scenario,
    label: String,
    sha256: String,
}

fn load_scenario(path: Option<&Path>) -> Result<LoadedScenario, String> {
    let (text, label) = match path {
        Some(p) => (
            fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?,
            p.display().to_string(),
        ),
        None => (DEFAULT_SCENARIO.to_string(), "<built-in>".to_string()),
    };
    let scenario = Scenario::parse(&text).map_err(|e| format!("{label}: {e}"))?;
    let sha256 = Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    Ok(LoadedScenario {
        scenario,
        label,
        sha256,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()
}

fn write_outputs(dir: &Path, out: &RunOutput) -> Result<(), String> {
    let err = |e: &dyn std::fmt::Display| format!("{}: {e}", dir.display());
    let schedules = File::create(dir.join("schedules.csv")).map_err(|e| err(&e))?;
    write_schedules(BufWriter::new(schedules), &out.schedules).map_err(|e| err(&e))?;
    let traj = File::create(dir.join("trajectories.csv")).map_err(|e| err(&e))?;
    write_trajectories(BufWriter::new(traj), &out.log).map_err(|e| err(&e))?;
    write_json(&dir.join("safety.json"), &out.safety).map_err(|e| err(&e))?;
    write_json(&dir.join("metrics.json"), &out.metrics).map_err(|e| err(&e))?;
    Ok(())
}

/// One simulation written to `dir`; returns the exit code.
fn simulate_one(loaded: &LoadedScenario, cfg: &SimConfig, dir: &Path) -> i32 {
    if let Err(e) = fs::create_dir_all(dir) {
        eprintln!("error: {}: {e}", dir.display());
        return EXIT_CONFIG;
    }
    let started = Instant::now();
    let result = run(&loaded.scenario.topology, cfg);
    let wall_clock_s = started.elapsed().as_secs_f64();

    let (counts, error, code) = match &result {
        Ok(out) => {
            if let Err(e) = write_outputs(dir, out) {
                eprintln!("error: {e}");
                return EXIT_CONFIG;
            }
            let counts = ManifestCounts {
                cavs: out.schedules.len(),
                zones: loaded.scenario.topology.zone_count(),
                zone_entries: out.schedules.iter().map(|s| s.entries.len()).sum(),
                violations: out.safety.counts.total,
                safety: out.safety.counts.clone(),
            };
            let code = if out.safety.is_safe() { EXIT_OK } else { EXIT_VIOLATIONS };
            if code != EXIT_OK {
                eprintln!("seed {}: {} safety violations", cfg.seed, out.safety.counts.total);
            }
            log::info!(
                "seed {}: {} vehicles, mean travel time {:.3} s, {} delayed zones",
                cfg.seed,
                counts.cavs,
                out.metrics.mean_travel_time,
                out.metrics.energy_optimal_zones
            );
            (Some(counts), None, code)
        }
        Err(e) => {
            eprintln!("error: seed {}: {e}", cfg.seed);
            let code = if e.is_infeasible() {
                EXIT_INFEASIBLE
            } else {
                EXIT_CONFIG
            };
            (None, Some(e.to_string()), code)
        }
    };
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
        scenario: loaded.label.clone(),
        scenario_sha256: loaded.sha256.clone(),
        config: cfg.clone(),
        wall_clock_s,
        counts,
        error,
        exit_code: code,
    };
    if let Err(e) = write_json(&dir.join("manifest.json"), &manifest) {
        eprintln!("error: {}: {e}", dir.display());
        return EXIT_CONFIG;
    }
    code
}

pub fn cmd_simulate(args: &SimulateArgs) -> i32 {
    let loaded = match load_scenario(args.scenario.as_deref()) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let mut cfg = SimConfig::from_scenario(&loaded.scenario);
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(n) = args.cavs {
        cfg.n_cavs = n;
    }
    if let Some(h) = args.headway {
        cfg.headway = h;
    }
    if let Err(e) = cfg.validate() {
        eprintln!("error: {e}");
        return EXIT_CONFIG;
    }

    let Some(k) = args.sweep else {
        return simulate_one(&loaded, &cfg, &args.out);
    };
    if k == 0 {
        eprintln!("error: --sweep must be at least 1");
        return EXIT_CONFIG;
    }
    let seeds: Vec<u64> = (0..k as u64).map(|i| cfg.seed.wrapping_add(i)).collect();
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(k);
    let chunks: Vec<Vec<u64>> = (0..workers)
        .map(|w| seeds.iter().copied().skip(w).step_by(workers).collect())
        .collect();
    let codes: Vec<i32> = std::thread::scope(|scope| {
        let handles: Vec<_> = chunks
            .iter()
            .map(|chunk| {
                let (loaded, cfg, out) = (&loaded, &cfg, &args.out);
                scope.spawn(move || {
                    chunk
                        .iter()
                        .map(|&seed| {
                            let cfg = SimConfig { seed, ..cfg.clone() };
                            simulate_one(loaded, &cfg, &out.join(format!("seed-{seed}")))
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    // config errors outrank infeasibility, which outranks violations
    codes
        .into_iter()
        .max_by_key(|&c| match c {
            EXIT_CONFIG => 3,
            EXIT_INFEASIBLE => 2,
            EXIT_VIOLATIONS => 1,
            _ => 0,
        })
        .unwrap_or(EXIT_OK)
}

#[derive(Serialize)]
struct MinTimeOutput<'a> {
    kind: &'static str,
    #[serde(flatten)]
    plan: &'a BangBangPlan,
}

/// Coefficients are in absolute time.
#[derive(Serialize)]
struct MinEnergyOutput {
    kind: &'static str,
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    t_entry: f64,
    t_exit: f64,
    boundary: ZoneBoundary,
    violations: Vec<TimedViolation>,
}

/// Solves the requested plan and prints it to `out`; diagnostics go to
/// standard error.
pub fn cmd_plan(kind: &PlanKind, out: &mut dyn Write) -> i32 {
    let b = match kind {
        PlanKind::MinTime(b) | PlanKind::MinEnergy { boundary: b, .. } => b,
    };
    let limits = match b.limits() {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let json = match kind {
        PlanKind::MinTime(_) => match plan_min_time(&b.boundary(), &limits) {
            Ok(plan) => serde_json::to_string_pretty(&MinTimeOutput {
                kind: "min_time",
                plan: &plan,
            }),
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_INFEASIBLE;
            }
        },
        PlanKind::MinEnergy { t_entry, t_exit, .. } => {
            let tb = TimedBoundary::new(b.boundary(), *t_entry, *t_exit);
            let local = match solve_energy(&tb) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_INFEASIBLE;
                }
            };
            let c = local.absolute();
            serde_json::to_string_pretty(&MinEnergyOutput {
                kind: "min_energy",
                a: c.a,
                b: c.b,
                c: c.c,
                d: c.d,
                t_entry: *t_entry,
                t_exit: *t_exit,
                boundary: tb.boundary,
                violations: check_inactive_constraints(&local, &tb, &limits),
            })
        }
    };
    let json = json.expect("plan output serializes");
    if writeln!(out, "{json}").is_err() {
        return EXIT_CONFIG;
    }
    EXIT_OK
}

pub fn init_logging() {
    let env = env_logger::Env::new().filter_or(LOG_ENV, "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match &cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Plan { kind } => cmd_plan(kind, &mut std::io::stdout().lock()),
    }
}
