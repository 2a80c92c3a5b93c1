//! `locache` command-line front end.
//!
//! Exit codes: 0 success, 1 delivery verification failed, 2 parse or usage
//! error, 3 infeasible allocation or schedule, 4 invalid LAPDA, 5 runtime
//! failure (I/O, solver, failed drops).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex;
use thiserror::Error;

use locache::beamforming::{diagnostics_csv, solve_wmm, WmmError};
use locache::pda::{construct_lapda, emit_lapda, parse_grid, parse_lapda, validate_mlpda, PdaError};
use locache::placement::{
    allocate_memory, allocate_single_user, arrange_cache, emit_memory, emit_rates, parse_memory, parse_rates, Placement,
    PlacementError,
};
use locache::rational::{format as fmt_ratio, parse as parse_ratio, to_f64};
use locache::scheduler::{emit_plan, parse_requests, plan_delivery, verify_decodability, verify_delivery, ScheduleError};
use locache::sim::{export_report, load_report, parse_schemes, prepare, run_experiment, ConfigError, ExperimentConfig, SimError};
use locache::{SlotChannel, WmmOptions};

#[derive(Debug, Parser)]
#[command(name = "locache", version, about = "Location-aware coded caching for multi-antenna delivery")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Debug, Args)]
struct Global {
    /// Directory for written artifacts.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Overrides the experiment seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the number of drops.
    #[arg(long, global = true)]
    drops: Option<usize>,
    /// Comma-separated scheme letters or names, e.g. `a,b,c,d`.
    #[arg(long, global = true)]
    schemes: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Per-STU memory allocation from a rate file; writes allocation.csv.
    Allocate {
        rates: PathBuf,
        /// Total normalized memory budget M.
        #[arg(long)]
        memory: f64,
        #[arg(long)]
        users: usize,
        #[arg(long)]
        antennas: usize,
        /// Ignore the coded-caching term (single-user placement).
        #[arg(long)]
        single_user: bool,
    },
    /// Cyclic-window LAPDA family from an allocation file; writes lapda.txt.
    BuildLapda {
        allocation: PathBuf,
        #[arg(long)]
        users: usize,
        #[arg(long)]
        antennas: usize,
    },
    /// Checks a LAPDA file, or a bare grid with --grid.
    Validate {
        file: PathBuf,
        /// Treat the input as a single bare array.
        #[arg(long)]
        grid: bool,
        /// Antenna budget for --grid.
        #[arg(long, default_value_t = 1)]
        antennas: usize,
    },
    /// Delivery plan for a LAPDA and a request file; writes plan.txt and verification.txt.
    Schedule { lapda: PathBuf, requests: PathBuf },
    /// Builds the plan and reports decodability and delivery checks without writing it.
    Verify { lapda: PathBuf, requests: PathBuf },
    /// Weighted max-min beamformers for one slot; writes slot.csv.
    SolveSlot { channel: PathBuf },
    /// Monte-Carlo comparison of the enabled schemes; writes cdf_<scheme>.csv, summary.json and rates.csv.
    Simulate {
        /// TOML configuration; every missing field takes its default.
        config: Option<PathBuf>,
    },
    /// Prints the summary of a previous simulation found in --out-dir.
    Report,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("invalid LAPDA: {0}")]
    InvalidLapda(String),
    #[error("{0}")]
    Runtime(String),
    #[error("verification failed:\n{0}")]
    Verification(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::InvalidLapda(_) => 4,
            CliError::Runtime(_) => 5,
        }
    }
}

impl From<PlacementError> for CliError {
    fn from(e: PlacementError) -> Self {
        match e {
            PlacementError::Parse { .. } | PlacementError::Rate(_) | PlacementError::Empty => CliError::Parse(e.to_string()),
            _ => CliError::Infeasible(e.to_string()),
        }
    }
}

impl From<ScheduleError> for CliError {
    fn from(e: ScheduleError) -> Self {
        match e {
            ScheduleError::Parse { .. }
            | ScheduleError::NoRequests
            | ScheduleError::UnknownStu { .. }
            | ScheduleError::UserCount { .. } => CliError::Parse(e.to_string()),
            _ => CliError::Infeasible(e.to_string()),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Parse(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Placement(p) => p.into(),
            SimError::Schedule(s) => s.into(),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn write(dir: &Path, name: &str, text: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn load_placement(lapda: &Path) -> Result<Placement, CliError> {
    let family = parse_lapda(&read(lapda)?).map_err(|e| CliError::Parse(format!("{}: {e}", lapda.display())))?;
    let report = family.validate_all();
    if !report.is_valid() {
        return Err(CliError::InvalidLapda(report.to_string()));
    }
    Ok(Placement::from_lapda(&family))
}

fn allocate(global: &Global, rates: &Path, memory: f64, users: usize, antennas: usize, single: bool) -> Result<(), CliError> {
    let map = parse_rates(&read(rates)?)?;
    let alloc = if single {
        allocate_single_user(&map, memory, users, antennas)?
    } else {
        allocate_memory(&map, memory, users, antennas)?
    };
    let path = write(&global.out_dir, "allocation.csv", &emit_memory(&alloc.memory))?;
    println!("gamma {} ({})", fmt_ratio(&alloc.worst_time), to_f64(&alloc.worst_time));
    println!("objective {} ({})", fmt_ratio(&alloc.objective), to_f64(&alloc.objective));
    println!("wrote {}", path.display());
    Ok(())
}

fn build_lapda(global: &Global, allocation: &Path, users: usize, antennas: usize) -> Result<(), CliError> {
    let memory = parse_memory(&read(allocation)?)?;
    let family = construct_lapda(users, antennas, &memory).map_err(|e| match e {
        PdaError::FractionalGain(_) | PdaError::GainOutOfRange { .. } => CliError::Infeasible(e.to_string()),
        other => CliError::Parse(other.to_string()),
    })?;
    let path = write(&global.out_dir, "lapda.txt", &emit_lapda(&family))?;
    println!("{} STUs, K={users}, L={antennas}", family.stu_count());
    println!("wrote {}", path.display());
    Ok(())
}

fn validate(file: &Path, grid: bool, antennas: usize) -> Result<(), CliError> {
    let text = read(file)?;
    let parse = |e: locache::pda::ParseError| CliError::Parse(format!("{}: {e}", file.display()));
    let report = if grid {
        validate_mlpda(&parse_grid(&text, antennas).map_err(parse)?)
    } else {
        parse_lapda(&text).map_err(parse)?.validate_all()
    };
    if !report.is_valid() {
        return Err(CliError::InvalidLapda(report.to_string()));
    }
    println!("valid");
    Ok(())
}

fn schedule(global: &Global, lapda: &Path, requests: &Path, write_plan: bool) -> Result<(), CliError> {
    let placement = load_placement(lapda)?;
    let requests = parse_requests(&read(requests)?)?;
    let plan = plan_delivery(&placement, &requests)?;
    let manifest = arrange_cache(&placement);
    let mut report = verify_delivery(&plan.plans(), &placement, &requests);
    for p in plan.plans() {
        report.extend(verify_decodability(p, &manifest));
    }
    if write_plan {
        write(&global.out_dir, "plan.txt", &emit_plan(&plan))?;
        write(&global.out_dir, "verification.txt", &report.to_string())?;
    }
    let dof = plan.sum_dof(&placement);
    println!(
        "reference user {} (STU {}), {} phase(s), {} slots, sum-DoF {} ({:.4})",
        plan.reference.user + 1,
        plan.reference.stu + 1,
        plan.phases.len(),
        plan.slot_count(),
        fmt_ratio(&dof),
        to_f64(&dof)
    );
    if !report.is_ok() {
        return Err(CliError::Verification(report.to_string()));
    }
    println!("verification ok");
    Ok(())
}

struct SlotFile {
    ids: Vec<usize>,
    channel: SlotChannel,
    sets: Vec<Vec<usize>>,
    sizes: Vec<f64>,
}

/// ```text
/// slot noise=1 power=10
/// user 1 size=1/2 null=2 h=1+0i,0.3-0.2i
/// user 2 size=1/4 null=- h=0.2+0.1i,1-0.5i
/// ```
fn parse_slot(text: &str) -> Result<SlotFile, String> {
    let mut header: Option<(f64, f64)> = None;
    let mut users = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let at = |m: &str| format!("line {}: {m}", i + 1);
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("slot") => {
                let (mut noise, mut power) = (None, None);
                for t in tokens {
                    match t.split_once('=') {
                        Some(("noise", v)) => noise = v.parse::<f64>().ok(),
                        Some(("power", v)) => power = v.parse::<f64>().ok(),
                        _ => return Err(at(&format!("unexpected '{t}'"))),
                    }
                }
                let (Some(n), Some(p)) = (noise, power) else {
                    return Err(at("expected 'slot noise=<float> power=<float>'"));
                };
                header = Some((n, p));
            }
            Some("user") => {
                let id: usize = tokens.next().and_then(|t| t.parse().ok()).ok_or_else(|| at("bad user id"))?;
                let (mut size, mut null, mut h) = (None, None, None);
                for t in tokens {
                    match t.split_once('=') {
                        Some(("size", v)) => size = parse_ratio(v).map(|r| to_f64(&r)).or_else(|| v.parse().ok()),
                        Some(("null", "-")) => null = Some(Vec::new()),
                        Some(("null", v)) => {
                            null = Some(v.split(',').map(str::parse::<usize>).collect::<Result<Vec<_>, _>>().map_err(|_| at("bad null list"))?)
                        }
                        Some(("h", v)) => {
                            h = Some(
                                v.split(',')
                                    .map(str::parse::<Complex<f64>>)
                                    .collect::<Result<Vec<_>, _>>()
                                    .map_err(|_| at("bad channel entry"))?,
                            )
                        }
                        _ => return Err(at(&format!("unexpected '{t}'"))),
                    }
                }
                let (Some(size), Some(null), Some(h)) = (size, null, h) else {
                    return Err(at("expected 'user <id> size=<p/q> null=<ids|-> h=<complex,...>'"));
                };
                users.push((id, size, null, h));
            }
            _ => return Err(at("expected 'slot' or 'user'")),
        }
    }
    let (noise, power) = header.ok_or("missing 'slot' header")?;
    if users.is_empty() {
        return Err("no users".into());
    }
    let ids: Vec<usize> = users.iter().map(|u| u.0).collect();
    let mut sets = Vec::with_capacity(users.len());
    for (id, _, null, _) in &users {
        let local = null
            .iter()
            .map(|n| ids.iter().position(|x| x == n).ok_or_else(|| format!("user {id}: null target {n} is not in the slot")))
            .collect::<Result<Vec<_>, _>>()?;
        sets.push(local);
    }
    let sizes = users.iter().map(|u| u.1).collect();
    let channel = SlotChannel::new(users.into_iter().map(|u| u.3).collect(), noise, power);
    Ok(SlotFile { ids, channel, sets, sizes })
}

fn solve_slot(global: &Global, path: &Path) -> Result<(), CliError> {
    let slot = parse_slot(&read(path)?).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    let sol = solve_wmm(&slot.channel, &slot.sets, &slot.sizes, &WmmOptions::default()).map_err(|e| match e {
        WmmError::NonConvergence { .. } => CliError::Runtime(e.to_string()),
        other => CliError::Parse(other.to_string()),
    })?;
    let ids: Vec<usize> = slot.ids.iter().map(|i| i.saturating_sub(1)).collect();
    let out = write(&global.out_dir, "slot.csv", &diagnostics_csv(&[(1, ids, sol.clone())]))?;
    println!("target {:.6e}, time {:.6e}, power {:.6e}, {} bisections", sol.target, sol.time, sol.total_power(), sol.bisections);
    println!("wrote {}", out.display());
    Ok(())
}

fn simulate(global: &Global, config: Option<&Path>) -> Result<(), CliError> {
    let text = match config {
        Some(p) => read(p)?,
        None => String::new(),
    };
    let (mut cfg, defaulted) = ExperimentConfig::from_toml(&text)?;
    let overridden = [
        ("experiment.seed", global.seed.is_some()),
        ("experiment.drops", global.drops.is_some()),
        ("schemes.enabled", global.schemes.is_some()),
    ];
    for field in &defaulted {
        if !overridden.iter().any(|&(name, set)| set && name == field) {
            eprintln!("config: {field} not set, using default");
        }
    }
    if let Some(seed) = global.seed {
        cfg.experiment.seed = seed;
    }
    if let Some(drops) = global.drops {
        cfg.experiment.drops = drops;
    }
    if let Some(list) = &global.schemes {
        cfg.schemes.enabled = parse_schemes(list)?;
    }
    cfg.check()?;
    let prepared = prepare(&cfg)?;
    write(&global.out_dir, "rates.csv", &emit_rates(&prepared.rates))?;
    let result = run_experiment(&prepared, cfg.experiment.drops);
    let stats = result.stats();
    export_report(&stats, &global.out_dir).map_err(|e| CliError::Runtime(e.to_string()))?;
    print_summary(&stats);
    let mut failed = 0;
    for (d, drop) in result.outcomes.iter().enumerate() {
        for (scheme, outcome) in result.schemes.iter().zip(drop) {
            if let Err(e) = &outcome.time {
                eprintln!("drop {d}, {scheme}: {e}");
                failed += 1;
            }
        }
    }
    if failed > 0 {
        return Err(CliError::Runtime(format!("{failed} failed drops; partial report written to {}", global.out_dir.display())));
    }
    Ok(())
}

fn print_summary(stats: &[locache::sim::DropStats]) {
    println!("{:<22} {:>12} {:>12} {:>12} {:>6} {:>6}", "scheme", "mean", "p50", "p95", "n", "failed");
    for s in stats {
        let sum = s.summary();
        let show = |x: Option<f64>| x.map_or_else(|| "-".to_string(), |v| format!("{v:.6e}"));
        println!(
            "{:<22} {:>12} {:>12} {:>12} {:>6} {:>6}",
            s.scheme.to_string(),
            show(sum.mean),
            show(sum.p50),
            show(sum.p95),
            sum.n,
            sum.failed
        );
    }
}

fn report(global: &Global) -> Result<(), CliError> {
    let mut stats = load_report(&global.out_dir).map_err(|e| CliError::Parse(e.to_string()))?;
    if let Some(list) = &global.schemes {
        let keep = parse_schemes(list)?;
        stats.retain(|s| keep.contains(&s.scheme));
    }
    print_summary(&stats);
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let g = &cli.global;
    match &cli.command {
        Command::Allocate { rates, memory, users, antennas, single_user } => {
            allocate(g, rates, *memory, *users, *antennas, *single_user)
        }
        Command::BuildLapda { allocation, users, antennas } => build_lapda(g, allocation, *users, *antennas),
        Command::Validate { file, grid, antennas } => validate(file, *grid, *antennas),
        Command::Schedule { lapda, requests } => schedule(g, lapda, requests, true),
        Command::Verify { lapda, requests } => schedule(g, lapda, requests, false),
        Command::SolveSlot { channel } => solve_slot(g, channel),
        Command::Simulate { config } => simulate(g, config.as_deref()),
        Command::Report => report(g),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
