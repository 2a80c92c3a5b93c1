//! Monte-Carlo drops over the four delivery schemes.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use super::report::DropStats;
use super::{apply_path_loss, sample_fading, sample_shadowing_map, ExperimentConfig, Scheme};
use crate::beamforming::{solve_wmm, SlotChannel, WmmError, WmmOptions};
use crate::pda::PdaError;
use crate::placement::{
    allocate_memory, allocate_single_user, approximate_rates, uniform_allocation, Placement, PlacementError, RateMap,
};
use crate::rational::to_f64;
use crate::scheduler::{plan_delivery, RequestVector, ScheduleError};
use crate::Rational;

const DROP_STREAMS: u64 = 1 << 40;
const FADING_STREAMS: u64 = 2 << 40;
const SHADOWING_STREAM: u64 = 3 << 40;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Placement(#[from] PlacementError),
    #[error(transparent)]
    Pda(#[from] PdaError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Beamforming(#[from] WmmError),
}

/// Per-configuration artifacts shared by all drops.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: ExperimentConfig,
    pub rates: RateMap<f64>,
    pub power: f64,
    /// Per-STU shadowing in dB, when shadowing is a property of the location.
    pub shadowing_map: Option<Vec<f64>>,
    /// Per-STU memory for each enabled scheme.
    pub memory: Vec<(Scheme, Vec<Rational>)>,
    /// Placements for the coded schemes.
    pub placements: Vec<(Scheme, Placement)>,
}

impl Prepared {
    pub fn memory(&self, scheme: Scheme) -> Option<&[Rational]> {
        self.memory.iter().find(|(s, _)| *s == scheme).map(|(_, m)| m.as_slice())
    }

    pub fn placement(&self, scheme: Scheme) -> Option<&Placement> {
        self.placements.iter().find(|(s, _)| *s == scheme).map(|(_, p)| p)
    }
}

/// `M / S` rounded to nine decimals so that round inputs stay short rationals.
fn memory_ratio(x: f64) -> Rational {
    let scaled = (x * 1e9).round();
    Rational::new((scaled as i64).into(), 1_000_000_000i64.into())
}

/// Rates, allocations and placements for every enabled scheme.
pub fn prepare(config: &ExperimentConfig) -> Result<Prepared, SimError> {
    let e = &config.experiment;
    let env = &config.environment;
    let shadowing_map = config.channel.shadowing_per_stu.then(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(e.seed);
        rng.set_stream(SHADOWING_STREAM);
        sample_shadowing_map(env, &config.channel, &mut rng)
    });
    let rates = approximate_rates(env, &config.channel, e.antennas, e.rate_samples, e.seed, shadowing_map.as_deref())?;
    let stus = env.stu_count();
    let ratio = memory_ratio(e.memory_ratio);
    let total = to_f64(&ratio) * stus as f64;
    let mut memory = Vec::new();
    let mut placements = Vec::new();
    for &scheme in &config.schemes.enabled {
        let m = match scheme {
            Scheme::Proposed | Scheme::MultiUserUnicast => allocate_memory(&rates, total, e.users, e.antennas)?.memory,
            Scheme::SingleUserUnicast => allocate_single_user(&rates, total, e.users, e.antennas)?.memory,
            Scheme::UniformCoded => uniform_allocation(stus, &(ratio.clone() * Rational::from_integer(stus.into()))),
        };
        if scheme.is_coded() {
            placements.push((scheme, Placement::build(e.users, e.antennas, &m)?));
        }
        memory.push((scheme, m));
    }
    Ok(Prepared { config: config.clone(), power: config.channel.power(env), rates, shadowing_map, memory, placements })
}

/// User locations and large-scale fading of one drop.
#[derive(Debug, Clone, PartialEq)]
pub struct DropDraw {
    pub requests: RequestVector,
    pub positions: Vec<(f64, f64)>,
    pub distances: Vec<f64>,
    pub shadowing_db: Vec<f64>,
    fading: Vec<ChaCha8Rng>,
}

impl DropDraw {
    pub fn new(prepared: &Prepared, drop: usize) -> Self {
        let config = &prepared.config;
        let e = &config.experiment;
        let env = &config.environment;
        let mut rng = ChaCha8Rng::seed_from_u64(e.seed);
        rng.set_stream(DROP_STREAMS + drop as u64);
        let stus: Vec<usize> = (0..e.users).map(|_| rng.gen_range(0..env.stu_count())).collect();
        let positions: Vec<(f64, f64)> = stus.iter().map(|&s| env.sample_position(s, &mut rng)).collect();
        let distances = positions.iter().map(|&(x, y)| env.distance(x, y)).collect();
        let shadowing_db = match &prepared.shadowing_map {
            Some(map) => stus.iter().map(|&s| map[s]).collect(),
            None => (0..e.users).map(|_| config.channel.sample_shadowing(&mut rng)).collect(),
        };
        let fading = (0..e.users)
            .map(|k| {
                let mut r = ChaCha8Rng::seed_from_u64(e.seed);
                r.set_stream(FADING_STREAMS + ((drop as u64) << 20) + k as u64);
                r
            })
            .collect();
        Self { requests: RequestVector::new(stus), positions, distances, shadowing_db, fading }
    }
}

/// Result of one scheme on one drop.
#[derive(Debug, Clone, PartialEq)]
pub struct DropOutcome {
    pub time: Result<f64, SimError>,
    /// Achieved sum-DoF and its bound `K m̂ + L`, coded schemes only.
    pub dof: Option<(Rational, Rational)>,
    pub slots: usize,
}

struct Channels<'a> {
    config: &'a ExperimentConfig,
    draw: &'a DropDraw,
    fading: Vec<ChaCha8Rng>,
    power: f64,
}

impl Channels<'_> {
    /// Fresh fading for each served user; every scheme replays the same sequence.
    fn slot(&mut self, users: &[usize]) -> SlotChannel {
        let l = self.config.experiment.antennas;
        let channels: Vec<Vec<Complex<f64>>> = users
            .iter()
            .map(|&k| {
                let g = sample_fading(l, &mut self.fading[k]);
                apply_path_loss(&self.config.channel, &g, self.draw.distances[k], self.draw.shadowing_db[k])
            })
            .collect();
        SlotChannel::new(channels, self.config.channel.noise_power, self.power)
    }
}

fn coded(prepared: &Prepared, placement: &Placement, ch: &mut Channels<'_>) -> Result<(f64, usize, (Rational, Rational)), SimError> {
    let plan = plan_delivery(placement, &ch.draw.requests)?;
    let opts = WmmOptions::default();
    let mut total = 0.0;
    let mut slots = 0;
    for slot in plan.phases.iter().flat_map(|p| &p.plan.slots) {
        if slot.transmissions.is_empty() {
            continue;
        }
        let users = slot.users();
        let local = |j: usize| users.iter().position(|&u| u == j).expect("co-served user");
        let sets: Vec<Vec<usize>> = slot.transmissions.iter().map(|t| t.interference.iter().map(|&j| local(j)).collect()).collect();
        let sizes: Vec<f64> = slot.transmissions.iter().map(|t| to_f64(&t.size)).collect();
        let sol = solve_wmm(&ch.slot(&users), &sets, &sizes, &opts)?;
        total += sol.time;
        slots += 1;
    }
    let dof = (plan.sum_dof(placement), plan.dof_bound(placement));
    Ok((total / rate_scale(prepared), slots, dof))
}

/// Groups of up to `L` users in index order, one zero-forcing-style slot per group.
fn unicast(prepared: &Prepared, memory: &[Rational], ch: &mut Channels<'_>) -> Result<(f64, usize), SimError> {
    let l = prepared.config.experiment.antennas;
    let opts = WmmOptions::default();
    let pending: Vec<(usize, f64)> = ch
        .draw
        .requests
        .stus()
        .iter()
        .enumerate()
        .map(|(k, &s)| (k, 1.0 - to_f64(&memory[s])))
        .filter(|&(_, c)| c > 0.0)
        .collect();
    let mut total = 0.0;
    let mut slots = 0;
    for group in pending.chunks(l) {
        let users: Vec<usize> = group.iter().map(|&(k, _)| k).collect();
        let sizes: Vec<f64> = group.iter().map(|&(_, c)| c).collect();
        let sets: Vec<Vec<usize>> = (0..users.len()).map(|i| (0..users.len()).filter(|&j| j != i).collect()).collect();
        let sol = solve_wmm(&ch.slot(&users), &sets, &sizes, &opts)?;
        total += sol.time;
        slots += 1;
    }
    Ok((total / rate_scale(prepared), slots))
}

fn rate_scale(prepared: &Prepared) -> f64 {
    prepared.config.channel.prelog * prepared.config.channel.bandwidth_per_file
}

/// Total delivery time of `scheme` on `draw`.
pub fn run_drop(prepared: &Prepared, scheme: Scheme, draw: &DropDraw) -> DropOutcome {
    let mut ch = Channels { config: &prepared.config, draw, fading: draw.fading.clone(), power: prepared.power };
    let missing = || DropOutcome {
        time: Err(SimError::Placement(PlacementError::Empty)),
        dof: None,
        slots: 0,
    };
    if scheme.is_coded() {
        let Some(placement) = prepared.placement(scheme) else { return missing() };
        match coded(prepared, placement, &mut ch) {
            Ok((t, slots, dof)) => DropOutcome { time: Ok(t), dof: Some(dof), slots },
            Err(e) => DropOutcome { time: Err(e), dof: None, slots: 0 },
        }
    } else {
        let Some(memory) = prepared.memory(scheme) else { return missing() };
        match unicast(prepared, memory, &mut ch) {
            Ok((t, slots)) => DropOutcome { time: Ok(t), dof: None, slots },
            Err(e) => DropOutcome { time: Err(e), dof: None, slots: 0 },
        }
    }
}

/// Per-drop outcomes for each enabled scheme, in drop order.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub schemes: Vec<Scheme>,
    /// `outcomes[drop][i]` belongs to `schemes[i]`.
    pub outcomes: Vec<Vec<DropOutcome>>,
}

impl ExperimentResult {
    pub fn stats(&self) -> Vec<DropStats> {
        self.schemes
            .iter()
            .enumerate()
            .map(|(i, &scheme)| {
                let times: Vec<f64> = self.outcomes.iter().filter_map(|o| o[i].time.as_ref().ok().copied()).collect();
                let failed = self.outcomes.len() - times.len();
                DropStats::new(scheme, times, failed)
            })
            .collect()
    }

    /// Paired per-drop times of one scheme, `None` for failed drops.
    pub fn times(&self, scheme: Scheme) -> Vec<Option<f64>> {
        let Some(i) = self.schemes.iter().position(|&s| s == scheme) else { return Vec::new() };
        self.outcomes.iter().map(|o| o[i].time.as_ref().ok().copied()).collect()
    }
}

/// Runs `drops` drops in parallel; all schemes share each drop's draw.
pub fn run_experiment(prepared: &Prepared, drops: usize) -> ExperimentResult {
    let schemes = prepared.config.schemes.enabled.clone();
    let outcomes = (0..drops)
        .into_par_iter()
        .map(|d| {
            let draw = DropDraw::new(prepared, d);
            schemes.iter().map(|&s| run_drop(prepared, s, &draw)).collect()
        })
        .collect();
    ExperimentResult { schemes, outcomes }
}
