//! Memory allocation across STUs.
//!
//! Minimizes `gamma / (m_min + L/K)` over per-STU fractions `m(s)` with
//! `sum m(s) <= M` and `(1 - m(s)) / r(s) <= gamma`. For a fixed `gamma` the
//! tightest allocation is `m(s) = max(m_min, 1 - gamma r(s))`; `m_min` follows
//! from the memory budget by bisection and `gamma` by golden-section search.
//! The objective is linear-fractional between the breakpoints where an STU
//! joins the floor set, so the float optimum is snapped to the exact
//! breakpoint solution in rational arithmetic.

use num_traits::{One, Signed, Zero};

use super::{PlacementError, RateMap};
use crate::rational::{from_f64, from_usize, to_f64};
use crate::scalar::Real;
use crate::Rational;

const BISECTION_STEPS: usize = 200;
const GOLDEN_STEPS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct Allocation<T> {
    /// Exact per-STU memory fractions.
    pub memory: Vec<Rational>,
    pub memory_approx: Vec<T>,
    pub min_memory: Rational,
    /// Worst normalized delivery time `max_s (1 - m(s)) / r(s)`.
    pub worst_time: Rational,
    pub objective: Rational,
    /// Objective reached by the floating-point search before snapping.
    pub search_objective: T,
}

impl<T: Real> Allocation<T> {
    pub fn worst_time_approx(&self) -> T {
        T::lit(to_f64(&self.worst_time))
    }

    pub fn min_memory_approx(&self) -> T {
        T::lit(to_f64(&self.min_memory))
    }

    pub fn objective_approx(&self) -> T {
        T::lit(to_f64(&self.objective))
    }

    fn from_exact(memory: Vec<Rational>, worst_time: Rational, objective: Rational, search_objective: T) -> Self {
        let min_memory = memory.iter().min().cloned().unwrap_or_else(Rational::zero);
        let memory_approx = memory.iter().map(|m| T::lit(to_f64(m))).collect();
        Self { memory, memory_approx, min_memory, worst_time, objective, search_objective }
    }
}

#[derive(Clone, Copy)]
enum Objective {
    /// `gamma / (m_min + L/K)`
    MultiUser,
    /// `gamma` alone.
    SingleUser,
}

fn check_inputs<T: Real>(total: T, users: usize, antennas: usize) -> Result<(), PlacementError> {
    if !(total.is_finite() && total >= T::zero()) {
        return Err(PlacementError::Budget);
    }
    if users == 0 || antennas == 0 {
        return Err(PlacementError::Dimensions);
    }
    Ok(())
}

/// Floor level `m_min` meeting the budget at `gamma`, or `None` if even `m_min = 0` overspends.
fn floor_level<T: Real>(rates: &[T], total: T, gamma: T) -> Option<T> {
    let spend = |floor: T| -> T {
        rates
            .iter()
            .map(|&r| (T::one() - gamma * r).max(floor).min(T::one()))
            .sum()
    };
    let tolerance = T::epsilon() * T::lit(rates.len() as f64);
    if spend(T::zero()) > total + tolerance {
        return None;
    }
    let (mut lo, mut hi) = (T::zero(), T::one());
    for _ in 0..BISECTION_STEPS {
        let mid = (lo + hi) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if spend(mid) <= total {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

/// Smallest `gamma` at which the budget can be met.
fn min_time<T: Real>(rates: &[T], total: T, upper: T) -> T {
    let (mut lo, mut hi) = (T::zero(), upper);
    for _ in 0..BISECTION_STEPS {
        let mid = (lo + hi) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        let spend: T = rates.iter().map(|&r| (T::one() - mid * r).max(T::zero())).sum();
        if spend <= total {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn golden_section<T: Real, F: Fn(T) -> T>(f: F, mut a: T, mut b: T) -> T {
    let inv_phi = T::lit((5f64.sqrt() - 1.0) / 2.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..GOLDEN_STEPS {
        if b - a <= T::epsilon() * b.abs() {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    (a + b) / T::lit(2.0)
}

struct Candidate {
    gamma: Rational,
    floor: Rational,
}

/// All breakpoint solutions plus the budget-limited minimum time.
fn candidates(rates: &[Rational], total: &Rational) -> Vec<Candidate> {
    let s = rates.len();
    let mut sorted = rates.to_vec();
    sorted.sort_by(|a, b| b.cmp(a));
    let mut suffix = vec![Rational::zero(); s + 1];
    for i in (0..s).rev() {
        suffix[i] = &suffix[i + 1] + &sorted[i];
    }
    let slack = from_usize(s) - total;
    let mut out = Vec::new();
    // The a largest rates sit on the floor, the a-th exactly at 1 - gamma r.
    for a in 1..=s {
        let denom = from_usize(a) * &sorted[a - 1] + &suffix[a];
        let gamma = &slack / denom;
        let floor = Rational::one() - &gamma * &sorted[a - 1];
        if !floor.is_negative() {
            out.push(Candidate { gamma, floor });
        }
    }
    // Floor at zero: the b largest rates hold no memory.
    for b in 0..s {
        let spare = from_usize(s - b) - total;
        if spare.is_negative() {
            continue;
        }
        let gamma = spare / &suffix[b];
        let low_ok = b == 0 || !(Rational::one() - &gamma * &sorted[b - 1]).is_positive();
        let high_ok = !(Rational::one() - &gamma * &sorted[b]).is_negative();
        if low_ok && high_ok {
            out.push(Candidate { gamma, floor: Rational::zero() });
        }
    }
    out
}

fn exact_objective(c: &Candidate, kind: Objective, share: &Rational) -> Rational {
    match kind {
        Objective::MultiUser => &c.gamma / (&c.floor + share),
        Objective::SingleUser => c.gamma.clone(),
    }
}

fn solve<T: Real>(map: &RateMap<T>, total: T, users: usize, antennas: usize, kind: Objective) -> Result<Allocation<T>, PlacementError> {
    check_inputs(total, users, antennas)?;
    let rates = &map.rates;
    let s = rates.len();
    if total >= T::lit(s as f64) {
        return Ok(Allocation::from_exact(vec![Rational::one(); s], Rational::zero(), Rational::zero(), T::zero()));
    }
    let share_f = T::lit(antennas as f64 / users as f64);
    let upper = rates.iter().map(|&r| T::one() / r).fold(T::zero(), T::max);
    let lower = min_time(rates, total, upper);
    let objective = |gamma: T| -> T {
        match (kind, floor_level(rates, total, gamma)) {
            (_, None) => T::infinity(),
            (Objective::MultiUser, Some(floor)) => gamma / (floor + share_f),
            (Objective::SingleUser, Some(_)) => gamma,
        }
    };
    let gamma = match kind {
        Objective::MultiUser => golden_section(objective, lower, upper),
        Objective::SingleUser => lower,
    };
    let search_objective = objective(gamma);

    let exact_rates: Vec<Rational> = rates
        .iter()
        .map(|r| from_f64(r.to_f64_lossy()).ok_or(PlacementError::Rate(0)))
        .collect::<Result<_, _>>()?;
    let exact_total = from_f64(total.to_f64_lossy()).ok_or(PlacementError::Budget)?;
    let share = from_usize(antennas) / from_usize(users);
    let best = candidates(&exact_rates, &exact_total)
        .into_iter()
        .min_by(|a, b| exact_objective(a, kind, &share).cmp(&exact_objective(b, kind, &share)))
        .ok_or(PlacementError::Infeasible)?;
    let memory: Vec<Rational> = exact_rates
        .iter()
        .map(|r| (Rational::one() - &best.gamma * r).max(best.floor.clone()))
        .collect();
    let objective = exact_objective(&best, kind, &share);
    Ok(Allocation::from_exact(memory, best.gamma, objective, search_objective))
}

/// Location-dependent allocation for coded delivery.
pub fn allocate_memory<T: Real>(rates: &RateMap<T>, total: T, users: usize, antennas: usize) -> Result<Allocation<T>, PlacementError> {
    solve(rates, total, users, antennas, Objective::MultiUser)
}

/// Bottleneck-only allocation: minimizes the worst normalized time alone.
pub fn allocate_single_user<T: Real>(rates: &RateMap<T>, total: T, users: usize, antennas: usize) -> Result<Allocation<T>, PlacementError> {
    solve(rates, total, users, antennas, Objective::SingleUser)
}

/// `m(s) = M / S` everywhere, capped at 1.
pub fn uniform_allocation(stus: usize, total: &Rational) -> Vec<Rational> {
    let m = (total / from_usize(stus)).min(Rational::one()).max(Rational::zero());
    vec![m; stus]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};
    use proptest::prelude::*;

    fn table_rates() -> RateMap<f64> {
        RateMap::new(vec![3000.0, 2000.0, 1000.0, 2000.0, 3000.0]).unwrap()
    }

    #[test]
    fn reference_profile() {
        let a = allocate_memory(&table_rates(), 2.25, 4, 2).unwrap();
        assert_eq!(a.memory, vec![ratio(1, 4), ratio(1, 2), ratio(3, 4), ratio(1, 2), ratio(1, 4)]);
        assert_eq!(a.worst_time, ratio(1, 4000));
        assert_eq!(a.min_memory, ratio(1, 4));
        assert_eq!(a.objective, ratio(1, 3000));
        for (m, r) in a.memory.iter().zip([3000, 2000, 1000, 2000, 3000]) {
            assert_eq!((int(1) - m) / int(r), ratio(1, 4000));
        }
        assert!((a.search_objective - 1.0 / 3000.0).abs() < 1e-9 / 3000.0);
    }

    #[test]
    fn single_precision_search_agrees() {
        let rates = RateMap::new(vec![3000.0f32, 2000.0, 1000.0, 2000.0, 3000.0]).unwrap();
        let a = allocate_memory(&rates, 2.25f32, 4, 2).unwrap();
        assert_eq!(a.memory[2], ratio(3, 4));
        assert!((a.search_objective - 1.0 / 3000.0).abs() < 1e-6);
    }

    #[test]
    fn uniform_rates_give_uniform_memory() {
        let rates = RateMap::new(vec![7.0; 6]).unwrap();
        let a = allocate_memory(&rates, 2.0, 4, 2).unwrap();
        assert!(a.memory.iter().all(|m| *m == ratio(1, 3)));
        assert_eq!(uniform_allocation(6, &int(2)), vec![ratio(1, 3); 6]);
    }

    #[test]
    fn budget_edges() {
        let a = allocate_memory(&table_rates(), 5.0, 4, 2).unwrap();
        assert!(a.memory.iter().all(|m| m.is_one()));
        assert!(a.worst_time.is_zero());
        assert!(matches!(allocate_memory(&table_rates(), -1.0, 4, 2), Err(PlacementError::Budget)));
        let zero = allocate_memory(&table_rates(), 0.0, 4, 2).unwrap();
        assert!(zero.memory.iter().all(Zero::is_zero));
        assert_eq!(zero.worst_time, ratio(1, 1000));
    }

    /// Brute force over the primal variables on a grid, refined around the best point.
    fn grid_oracle(rates: [f64; 2], total: f64, share: f64) -> (f64, f64) {
        let eval = |m1: f64, m2: f64| {
            let gamma = ((1.0 - m1) / rates[0]).max((1.0 - m2) / rates[1]);
            gamma / (m1.min(m2) + share)
        };
        let mut best = (f64::INFINITY, 0.0, 0.0);
        let search = |lo1: f64, hi1: f64, lo2: f64, hi2: f64, step: f64, best: &mut (f64, f64, f64)| {
            let n1 = ((hi1 - lo1) / step).round() as usize;
            let n2 = ((hi2 - lo2) / step).round() as usize;
            for i in 0..=n1 {
                for j in 0..=n2 {
                    let (m1, m2) = (lo1 + i as f64 * step, lo2 + j as f64 * step);
                    if !(0.0..=1.0).contains(&m1) || !(0.0..=1.0).contains(&m2) || m1 + m2 > total + 1e-12 {
                        continue;
                    }
                    let v = eval(m1, m2);
                    if v < best.0 {
                        *best = (v, m1, m2);
                    }
                }
            }
        };
        search(0.0, 1.0, 0.0, 1.0, 1e-3, &mut best);
        let (_, c1, c2) = best;
        search(c1 - 2e-3, c1 + 2e-3, c2 - 2e-3, c2 + 2e-3, 1e-5, &mut best);
        (best.1, best.2)
    }

    #[test]
    fn two_stu_grid_oracle() {
        let (m1, m2) = grid_oracle([1.0, 2.0], 1.0, 0.5);
        let a = allocate_memory(&RateMap::new(vec![1.0, 2.0]).unwrap(), 1.0, 4, 2).unwrap();
        assert!((a.memory_approx[0] - m1).abs() < 1e-4, "{} vs {m1}", a.memory_approx[0]);
        assert!((a.memory_approx[1] - m2).abs() < 1e-4, "{} vs {m2}", a.memory_approx[1]);
    }

    #[test]
    fn single_user_minimizes_worst_time() {
        let rates = table_rates();
        let single = allocate_single_user(&rates, 2.25, 4, 2).unwrap();
        let multi = allocate_memory(&rates, 2.25, 4, 2).unwrap();
        assert!(single.worst_time <= multi.worst_time);
        // gamma r <= 1 everywhere except where memory is exhausted.
        let spent: Rational = single.memory.iter().sum();
        assert_eq!(spent, ratio(9, 4));
    }

    proptest! {
        #[test]
        fn feasible_and_equal_slack(
            rates in proptest::collection::vec(0.5f64..50.0, 1..6),
            frac in 0.01f64..0.99,
            users in 1usize..10,
            antennas in 1usize..4,
        ) {
            let s = rates.len() as f64;
            let total = frac * s;
            let map = RateMap::new(rates.clone()).unwrap();
            let a = allocate_memory(&map, total, users, antennas).unwrap();
            let budget = from_f64(total).unwrap();
            let spent: Rational = a.memory.iter().sum();
            prop_assert!(spent <= budget);
            for (m, r) in a.memory.iter().zip(&rates) {
                prop_assert!(!m.is_negative() && *m <= Rational::one());
                let slack = (Rational::one() - m) / from_f64(*r).unwrap();
                prop_assert!(slack <= a.worst_time);
                let tight = (1.0 - to_f64(&a.worst_time) * r).max(to_f64(&a.min_memory));
                prop_assert!((to_f64(m) - tight).abs() < 1e-6);
            }
            // The float search never beats the exact optimum.
            prop_assert!(to_f64(&a.objective) <= a.search_objective * (1.0 + 1e-9));
        }

        #[test]
        fn rate_scaling(rates in proptest::collection::vec(0.5f64..50.0, 1..6), frac in 0.05f64..0.95) {
            let total = frac * rates.len() as f64;
            let a = allocate_memory(&RateMap::new(rates.clone()).unwrap(), total, 6, 2).unwrap();
            let scaled: Vec<f64> = rates.iter().map(|r| r * 4.0).collect();
            let b = allocate_memory(&RateMap::new(scaled).unwrap(), total, 6, 2).unwrap();
            prop_assert_eq!(&a.memory, &b.memory);
            prop_assert_eq!(&a.worst_time / int(4), b.worst_time);
        }
    }
}
