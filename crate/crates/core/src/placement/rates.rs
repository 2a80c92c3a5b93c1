//! Per-STU rate approximation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::PlacementError;
use crate::scalar::Real;
use crate::sim::{norm_sqr, sample_fading, apply_path_loss, ChannelParams, Environment};

/// Approximated delivery rate of each STU, in files per second.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMap<T = f64> {
    pub rates: Vec<T>,
}

impl<T: Real> RateMap<T> {
    pub fn new(rates: Vec<T>) -> Result<Self, PlacementError> {
        if rates.is_empty() {
            return Err(PlacementError::Empty);
        }
        if let Some(s) = rates.iter().position(|r| !(r.is_finite() && *r > T::zero())) {
            return Err(PlacementError::Rate(s));
        }
        Ok(Self { rates })
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }
}

/// Mean of `(omega/F) C_p log2(1 + g)` over `samples` draws of `g` per STU.
///
/// `gain(stu, rng)` returns one SNR sample `P_T |h|^2 / N0`.
pub fn approximate_rates_with<F>(stus: usize, samples: usize, scale: f64, seed: u64, mut gain: F) -> Result<RateMap<f64>, PlacementError>
where
    F: FnMut(usize, &mut ChaCha8Rng) -> f64,
{
    if samples == 0 || stus == 0 {
        return Err(PlacementError::Empty);
    }
    let rates = (0..stus)
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s as u64);
            let total: f64 = (0..samples).map(|_| (1.0 + gain(s, &mut rng)).log2()).sum();
            scale * total / samples as f64
        })
        .collect();
    RateMap::new(rates)
}

/// Rates from uniform positions in each cell, optional shadowing and Rayleigh fading.
/// `shadowing_map` holds fixed per-STU shadowing; without it shadowing is drawn per sample.
pub fn approximate_rates(
    env: &Environment,
    params: &ChannelParams,
    antennas: usize,
    samples: usize,
    seed: u64,
    shadowing_map: Option<&[f64]>,
) -> Result<RateMap<f64>, PlacementError> {
    let power = params.power(env);
    let scale = params.bandwidth_per_file * params.prelog;
    approximate_rates_with(env.stu_count(), samples, scale, seed, |s, rng| {
        let (x, y) = env.sample_position(s, rng);
        let shadowing = match (params.shadowing_in_rates, shadowing_map) {
            (false, _) => 0.0,
            (true, Some(map)) => map[s],
            (true, None) => params.sample_shadowing(rng),
        };
        let fading = sample_fading(antennas, rng);
        let h = apply_path_loss(params, &fading, env.distance(x, y), shadowing);
        power * norm_sqr(&h) / params.noise_power
    })
}
