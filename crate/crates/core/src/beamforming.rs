//! Weighted max-min beamforming for one slot.
//!
//! Each served user `k` gets a payload of size `c_k` and a set `I_k` of co-served users
//! its beam must not leak into; every other co-served user removes `k`'s signal using
//! its cache. The solver maximizes `γ` subject to `log(1 + γ_k) = c_k log γ` with the
//! weights normalized so that the smallest is 1, so all users finish at once. For a fixed
//! `γ` the uplink dual powers come from a fixed point iteration; the downlink powers then
//! follow in closed form, and `γ` is bisected until the power budget is met.

use std::fmt::Write;

use num_complex::Complex;
use thiserror::Error;

use crate::linalg::{cholesky, cholesky_solve, inner, norm_sqr, solve};
use crate::Real;

/// Channels of the users served in one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotChannel<T = f64> {
    /// One length-`L` vector per served user.
    pub channels: Vec<Vec<Complex<T>>>,
    pub noise: T,
    pub power: T,
}

impl<T: Real> SlotChannel<T> {
    pub fn new(channels: Vec<Vec<Complex<T>>>, noise: T, power: T) -> Self {
        Self { channels, noise, power }
    }

    pub fn users(&self) -> usize {
        self.channels.len()
    }

    pub fn antennas(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    fn check(&self) -> Result<(), WmmError> {
        if self.channels.is_empty() {
            return Err(WmmError::Empty);
        }
        let l = self.antennas();
        for (k, h) in self.channels.iter().enumerate() {
            if h.len() != l || l == 0 {
                return Err(WmmError::Dimension { user: k });
            }
            let n = norm_sqr(h);
            if !(n > T::zero()) || !n.is_finite() {
                return Err(WmmError::DegenerateChannel { user: k });
            }
        }
        if !(self.noise > T::zero()) || !(self.power > T::zero()) {
            return Err(WmmError::Budget);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WmmOptions<T = f64> {
    pub inner_tol: T,
    pub inner_iterations: usize,
    pub power_tol: T,
    pub outer_iterations: usize,
}

impl<T: Real> Default for WmmOptions<T> {
    fn default() -> Self {
        Self {
            inner_tol: T::lit(1e-8),
            inner_iterations: 500,
            power_tol: T::lit(1e-6),
            outer_iterations: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WmmSolution<T = f64> {
    pub beamformers: Vec<Vec<Complex<T>>>,
    pub powers: Vec<T>,
    /// Uplink dual powers at the returned target.
    pub duals: Vec<T>,
    /// Achieved SINR per user.
    pub sinr: Vec<T>,
    /// `log₂(1 + γ_k)`.
    pub rates: Vec<T>,
    /// Common target `γ`.
    pub target: T,
    /// Weights after normalization.
    pub weights: Vec<T>,
    /// `max_k c_k / rate_k` with raw sizes.
    pub time: T,
    pub bisections: usize,
}

impl<T: Real> WmmSolution<T> {
    pub fn total_power(&self) -> T {
        self.powers.iter().copied().sum()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WmmError {
    #[error("no users in slot")]
    Empty,
    #[error("user {user}: channel length mismatch")]
    Dimension { user: usize },
    #[error("user {user}: zero or non-finite channel")]
    DegenerateChannel { user: usize },
    #[error("noise and power must be positive")]
    Budget,
    #[error("user {user}: payload size must be positive")]
    Weight { user: usize },
    #[error("{sets} interference sets for {users} users")]
    Sets { sets: usize, users: usize },
    #[error("user {user}: interference set names user {other}")]
    SetMember { user: usize, other: usize },
    #[error("fixed point stalled at target {target} after {iterations} iterations, residual {residual}")]
    NonConvergence { target: f64, iterations: usize, residual: f64 },
}

/// `γ_k = |h_kᴴ v_k|² / (Σ_{i : k ∈ I_i} |h_kᴴ v_i|² + N₀)`; `interference[i]` lists local indices.
pub fn compute_sinr<T: Real>(beamformers: &[Vec<Complex<T>>], ch: &SlotChannel<T>, interference: &[Vec<usize>]) -> Vec<T> {
    (0..ch.users())
        .map(|k| {
            let h = &ch.channels[k];
            let signal = inner(h, &beamformers[k]).norm_sqr();
            if signal == T::zero() {
                return T::zero();
            }
            let leak: T = (0..ch.users())
                .filter(|&i| i != k && interference[i].contains(&k))
                .map(|i| inner(h, &beamformers[i]).norm_sqr())
                .sum();
            signal / (leak + ch.noise)
        })
        .collect()
}

fn covariance<T: Real>(ch: &SlotChannel<T>, set: &[usize], nu: &[T]) -> Vec<Complex<T>> {
    let l = ch.antennas();
    let mut s = vec![Complex::new(T::zero(), T::zero()); l * l];
    for &j in set {
        let h = &ch.channels[j];
        for r in 0..l {
            for c in 0..l {
                s[r * l + c] = s[r * l + c] + h[r] * h[c].conj() * nu[j];
            }
        }
    }
    for d in 0..l {
        s[d * l + d].re = s[d * l + d].re + ch.noise;
    }
    s
}

enum Inner<T> {
    Converged(Vec<T>),
    OverBudget,
    Stalled(T),
}

/// Dual fixed point for per-user targets `eps`.
fn dual_powers<T: Real>(ch: &SlotChannel<T>, sets: &[Vec<usize>], eps: &[T], opts: &WmmOptions<T>) -> Inner<T> {
    let k = ch.users();
    let l = ch.antennas();
    let ceiling = ch.power * T::lit(1e6);
    let mut nu = vec![ch.power / T::lit(k as f64); k];
    let mut residual = T::infinity();
    for _ in 0..opts.inner_iterations {
        let mut next = Vec::with_capacity(k);
        for u in 0..k {
            let Some(chol) = cholesky(&covariance(ch, &sets[u], &nu), l) else {
                return Inner::OverBudget;
            };
            let h = &ch.channels[u];
            let q = inner(h, &cholesky_solve(&chol, l, h)).re;
            next.push(eps[u] / q);
        }
        if next.iter().any(|v| !v.is_finite()) || next.iter().copied().sum::<T>() > ceiling {
            return Inner::OverBudget;
        }
        residual = nu
            .iter()
            .zip(&next)
            .map(|(&a, &b)| if b > T::zero() { (b - a).abs() / b } else { a.abs() })
            .fold(T::zero(), T::max);
        nu = next;
        if residual < opts.inner_tol {
            return Inner::Converged(nu);
        }
    }
    if nu.iter().copied().sum::<T>() > ch.power {
        Inner::OverBudget
    } else {
        Inner::Stalled(residual)
    }
}

struct Candidate<T> {
    duals: Vec<T>,
    directions: Vec<Vec<Complex<T>>>,
    powers: Vec<T>,
}

/// Beam directions and downlink powers for target `gamma`, or `None` when infeasible.
fn evaluate<T: Real>(
    ch: &SlotChannel<T>,
    sets: &[Vec<usize>],
    weights: &[T],
    gamma: T,
    opts: &WmmOptions<T>,
) -> Result<Option<Candidate<T>>, WmmError> {
    let k = ch.users();
    let l = ch.antennas();
    let eps: Vec<T> = weights.iter().map(|&c| gamma.powf(c) - T::one()).collect();
    let duals = match dual_powers(ch, sets, &eps, opts) {
        Inner::Converged(nu) => nu,
        Inner::OverBudget => return Ok(None),
        Inner::Stalled(residual) => {
            return Err(WmmError::NonConvergence {
                target: gamma.to_f64_lossy(),
                iterations: opts.inner_iterations,
                residual: residual.to_f64_lossy(),
            })
        }
    };
    let mut directions = Vec::with_capacity(k);
    for u in 0..k {
        let Some(chol) = cholesky(&covariance(ch, &sets[u], &duals), l) else {
            return Ok(None);
        };
        let w = cholesky_solve(&chol, l, &ch.channels[u]);
        let n = norm_sqr(&w).sqrt();
        directions.push(w.into_iter().map(|x| x / n).collect::<Vec<_>>());
    }
    let gain = |i: usize, j: usize| inner(&ch.channels[i], &directions[j]).norm_sqr();
    let d: Vec<T> = (0..k).map(|u| eps[u] / ((T::one() + eps[u]) * gain(u, u))).collect();
    let mut m = vec![T::zero(); k * k];
    for i in 0..k {
        for j in 0..k {
            let b = if i == j || sets[j].contains(&i) { gain(i, j) } else { T::zero() };
            m[i * k + j] = if i == j { T::one() } else { T::zero() } - d[i] * b;
        }
    }
    let a: Vec<T> = d.iter().map(|&x| x * ch.noise).collect();
    let Some(powers) = solve(m, a, k) else {
        return Ok(None);
    };
    if powers.iter().any(|p| !p.is_finite() || *p < T::zero()) {
        return Ok(None);
    }
    Ok(Some(Candidate { duals, directions, powers }))
}

fn check_sets(users: usize, sets: &[Vec<usize>]) -> Result<(), WmmError> {
    if sets.len() != users {
        return Err(WmmError::Sets { sets: sets.len(), users });
    }
    for (k, set) in sets.iter().enumerate() {
        if let Some(&other) = set.iter().find(|&&j| j >= users || j == k) {
            return Err(WmmError::SetMember { user: k, other });
        }
    }
    Ok(())
}

/// Solves the weighted max-min problem for one slot. `sizes` are the raw payload sizes.
pub fn solve_wmm<T: Real>(
    ch: &SlotChannel<T>,
    interference: &[Vec<usize>],
    sizes: &[T],
    opts: &WmmOptions<T>,
) -> Result<WmmSolution<T>, WmmError> {
    ch.check()?;
    let k = ch.users();
    check_sets(k, interference)?;
    if sizes.len() != k {
        return Err(WmmError::Sets { sets: sizes.len(), users: k });
    }
    if let Some(user) = sizes.iter().position(|&c| !(c > T::zero()) || !c.is_finite()) {
        return Err(WmmError::Weight { user });
    }
    let smallest = sizes.iter().copied().fold(T::infinity(), T::min);
    let weights: Vec<T> = sizes.iter().map(|&c| c / smallest).collect();

    let mut lo = T::one();
    let mut hi = (0..k)
        .map(|u| (T::one() + ch.power * norm_sqr(&ch.channels[u]) / ch.noise).powf(T::one() / weights[u]))
        .fold(T::infinity(), T::min);
    let mut best: Option<Candidate<T>> = None;
    let mut bisections = 0;
    for _ in 0..opts.outer_iterations {
        bisections += 1;
        let mid = (lo + hi) / T::lit(2.0);
        match evaluate(ch, interference, &weights, mid, opts)? {
            Some(c) if c.powers.iter().copied().sum::<T>() <= ch.power => {
                let used: T = c.powers.iter().copied().sum();
                lo = mid;
                best = Some(c);
                if ch.power - used < opts.power_tol * ch.power {
                    break;
                }
            }
            _ => hi = mid,
        }
        if hi - lo <= T::epsilon() * hi {
            break;
        }
    }
    let c = match best {
        Some(c) => c,
        None => evaluate(ch, interference, &weights, lo, opts)?.expect("zero target is feasible"),
    };
    let beamformers: Vec<Vec<Complex<T>>> = c
        .directions
        .iter()
        .zip(&c.powers)
        .map(|(d, &p)| d.iter().map(|&x| x * p.sqrt()).collect())
        .collect();
    let sinr = compute_sinr(&beamformers, ch, interference);
    let rates: Vec<T> = sinr.iter().map(|&g| g.ln_1p() / T::LN_2()).collect();
    let time = slot_time(sizes, &rates);
    Ok(WmmSolution {
        beamformers,
        powers: c.powers,
        duals: c.duals,
        sinr,
        rates,
        target: lo,
        weights,
        time,
        bisections,
    })
}

/// `max_k c_k / rate_k`; infinite when some user gets no rate.
pub fn slot_time<T: Real>(sizes: &[T], rates: &[T]) -> T {
    sizes
        .iter()
        .zip(rates)
        .map(|(&c, &r)| if r > T::zero() { c / r } else { T::infinity() })
        .fold(T::zero(), T::max)
}

/// Sum of slot times.
pub fn total_time<T: Real>(solutions: &[WmmSolution<T>]) -> T {
    solutions.iter().map(|s| s.time).sum()
}

/// `K / (K m̄ + L) · max_s (1 − m_s) / r_s` with `m̄ = min_s m_s`.
pub fn approx_time<T: Real>(memory: &[T], rates: &[T], users: usize, antennas: usize) -> T {
    let k = T::lit(users as f64);
    let least = memory.iter().copied().fold(T::infinity(), T::min);
    let worst = memory
        .iter()
        .zip(rates)
        .map(|(&m, &r)| (T::one() - m) / r)
        .fold(T::zero(), T::max);
    k / (k * least + T::lit(antennas as f64)) * worst
}

/// `(K m̂ + L) R_w / ((K M/S + L) R_u)`.
pub fn rate_ratio<T: Real>(least: T, budget: T, stus: usize, users: usize, antennas: usize, weighted: T, uniform: T) -> T {
    let k = T::lit(users as f64);
    let l = T::lit(antennas as f64);
    (k * least + l) * weighted / ((k * budget / T::lit(stus as f64) + l) * uniform)
}

/// `slot,user,sinr,rate,power,time` rows; `users` maps local indices to user ids.
pub fn diagnostics_csv<T: Real>(slots: &[(usize, Vec<usize>, WmmSolution<T>)]) -> String {
    let mut out = String::from("slot,user,sinr,rate,power,time\n");
    for (n, users, sol) in slots {
        for (i, u) in users.iter().enumerate() {
            let _ = writeln!(
                out,
                "{n},{},{},{},{},{}",
                u + 1,
                sol.sinr[i],
                sol.rates[i],
                sol.powers[i],
                sol.time
            );
        }
    }
    out
}
