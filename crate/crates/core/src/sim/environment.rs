//! Room geometry, path loss and channel sampling.

use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvironmentError {
    #[error("room dimensions must be positive multiples of the cell size")]
    Grid,
    #[error("transmitter at ({0}, {1}) lies outside the room")]
    Transmitter(f64, f64),
    #[error("channel parameter out of range: {0}")]
    Channel(&'static str),
}

/// Rectangular room split into square STU cells; users stand on the floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Environment {
    pub width: f64,
    pub depth: f64,
    pub cell: f64,
    /// x, y and height of the transmitter.
    pub transmitter: [f64; 3],
}

impl Default for Environment {
    fn default() -> Self {
        Self { width: 30.0, depth: 30.0, cell: 1.0, transmitter: [15.0, 15.0, 5.0] }
    }
}

impl Environment {
    /// Square room of `side` cells of 1 m with the transmitter centred 5 m above the floor.
    pub fn square(side: usize) -> Self {
        let w = side as f64;
        Self { width: w, depth: w, cell: 1.0, transmitter: [w / 2.0, w / 2.0, 5.0] }
    }

    pub fn check(&self) -> Result<(), EnvironmentError> {
        let whole = |x: f64| x > 0.0 && ((x / self.cell).round() - x / self.cell).abs() < 1e-9;
        if !(self.cell > 0.0) || !whole(self.width) || !whole(self.depth) {
            return Err(EnvironmentError::Grid);
        }
        let [x, y, _] = self.transmitter;
        if !(0.0..=self.width).contains(&x) || !(0.0..=self.depth).contains(&y) {
            return Err(EnvironmentError::Transmitter(x, y));
        }
        Ok(())
    }

    pub fn columns(&self) -> usize {
        (self.width / self.cell).round() as usize
    }

    pub fn rows(&self) -> usize {
        (self.depth / self.cell).round() as usize
    }

    pub fn stu_count(&self) -> usize {
        self.columns() * self.rows()
    }

    pub fn stu_center(&self, stu: usize) -> (f64, f64) {
        let (row, col) = (stu / self.columns(), stu % self.columns());
        ((col as f64 + 0.5) * self.cell, (row as f64 + 0.5) * self.cell)
    }

    pub fn stu_at(&self, x: f64, y: f64) -> usize {
        let col = ((x / self.cell).floor() as usize).min(self.columns() - 1);
        let row = ((y / self.cell).floor() as usize).min(self.rows() - 1);
        row * self.columns() + col
    }

    /// Uniform point inside the cell of `stu`.
    pub fn sample_position<R: Rng + ?Sized>(&self, stu: usize, rng: &mut R) -> (f64, f64) {
        let (cx, cy) = self.stu_center(stu);
        let half = self.cell / 2.0;
        (cx + rng.gen_range(-half..half), cy + rng.gen_range(-half..half))
    }

    pub fn distance(&self, x: f64, y: f64) -> f64 {
        let [tx, ty, tz] = self.transmitter;
        ((x - tx).powi(2) + (y - ty).powi(2) + tz.powi(2)).sqrt()
    }

    /// Distance from the transmitter to the farthest floor corner.
    pub fn max_distance(&self) -> f64 {
        [(0.0, 0.0), (self.width, 0.0), (0.0, self.depth), (self.width, self.depth)]
            .into_iter()
            .map(|(x, y)| self.distance(x, y))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    pub frequency_ghz: f64,
    pub pathloss_exponent: f64,
    /// Shadowing standard deviation in dB.
    pub shadowing_db: f64,
    pub noise_power: f64,
    pub prelog: f64,
    pub bandwidth_per_file: f64,
    /// SNR at the farthest room corner without shadowing; ignored when `transmit_power` is set.
    pub edge_snr_db: f64,
    pub transmit_power: Option<f64>,
    /// Include shadowing in the rates used for memory allocation.
    pub shadowing_in_rates: bool,
    /// Shadowing is a fixed per-STU field drawn once per configuration; otherwise it is
    /// redrawn for every user in every drop.
    pub shadowing_per_stu: bool,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            frequency_ghz: 3.5,
            pathloss_exponent: 3.0,
            shadowing_db: 7.0,
            noise_power: 1.0,
            prelog: 1.0,
            bandwidth_per_file: 1.0,
            edge_snr_db: 5.0,
            transmit_power: None,
            shadowing_in_rates: true,
            shadowing_per_stu: true,
        }
    }
}

impl ChannelParams {
    pub fn check(&self) -> Result<(), EnvironmentError> {
        if !(self.pathloss_exponent > 0.0) {
            return Err(EnvironmentError::Channel("path-loss exponent must be positive"));
        }
        if !(self.shadowing_db >= 0.0) {
            return Err(EnvironmentError::Channel("shadowing deviation must be non-negative"));
        }
        if !(self.noise_power > 0.0) || !(self.frequency_ghz > 0.0) {
            return Err(EnvironmentError::Channel("noise power and frequency must be positive"));
        }
        if matches!(self.transmit_power, Some(p) if !(p > 0.0)) {
            return Err(EnvironmentError::Channel("transmit power must be positive"));
        }
        Ok(())
    }

    /// Path loss in dB at distance `d` metres plus a shadowing term.
    pub fn path_loss_db(&self, d: f64, shadowing_db: f64) -> f64 {
        32.4 + 20.0 * self.frequency_ghz.log10() + 10.0 * self.pathloss_exponent * d.log10() + shadowing_db
    }

    /// Configured power, or the edge-SNR calibration.
    pub fn power(&self, env: &Environment) -> f64 {
        self.transmit_power.unwrap_or_else(|| calibrate_power(env, self, self.edge_snr_db))
    }

    pub fn sample_shadowing<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.shadowing_db == 0.0 {
            0.0
        } else {
            Normal::new(0.0, self.shadowing_db).expect("finite deviation").sample(rng)
        }
    }
}

/// One shadowing value per STU.
pub fn sample_shadowing_map<R: Rng + ?Sized>(env: &Environment, params: &ChannelParams, rng: &mut R) -> Vec<f64> {
    (0..env.stu_count()).map(|_| params.sample_shadowing(rng)).collect()
}

/// Power giving `edge_snr_db` at the farthest corner, shadowing excluded.
pub fn calibrate_power(env: &Environment, params: &ChannelParams, edge_snr_db: f64) -> f64 {
    let pl = params.path_loss_db(env.max_distance(), 0.0);
    params.noise_power * 10f64.powf(pl / 10.0) * 10f64.powf(edge_snr_db / 10.0)
}

/// i.i.d. circularly-symmetric unit-variance entries.
pub fn sample_fading<R: Rng + ?Sized>(antennas: usize, rng: &mut R) -> Vec<Complex<f64>> {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    (0..antennas)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex::new(re * scale, im * scale)
        })
        .collect()
}

/// Scales a fading vector by the large-scale gain at distance `d`.
pub fn apply_path_loss(params: &ChannelParams, fading: &[Complex<f64>], d: f64, shadowing_db: f64) -> Vec<Complex<f64>> {
    let gain = 10f64.powf(-params.path_loss_db(d, shadowing_db) / 20.0);
    fading.iter().map(|g| g * gain).collect()
}

/// One channel draw for a user at `(x, y)`: shadowing, then fading.
pub fn sample_channel<R: Rng + ?Sized>(
    env: &Environment,
    params: &ChannelParams,
    position: (f64, f64),
    antennas: usize,
    rng: &mut R,
) -> Vec<Complex<f64>> {
    let shadowing = params.sample_shadowing(rng);
    let fading = sample_fading(antennas, rng);
    apply_path_loss(params, &fading, env.distance(position.0, position.1), shadowing)
}

pub fn norm_sqr(h: &[Complex<f64>]) -> f64 {
    h.iter().map(Complex::norm_sqr).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unit_distance_gain() {
        let params = ChannelParams { frequency_ghz: 1.0, shadowing_db: 0.0, ..Default::default() };
        let fading = vec![Complex::new(1.0, 0.0); 3];
        let h = apply_path_loss(&params, &fading, 1.0, 0.0);
        assert!((norm_sqr(&h) - 3.0 * 10f64.powf(-3.24)).abs() < 1e-15);
    }

    #[test]
    fn doubling_distance_divides_gain_by_eight() {
        let params = ChannelParams { shadowing_db: 0.0, ..Default::default() };
        let fading = sample_fading(4, &mut ChaCha8Rng::seed_from_u64(1));
        let near = norm_sqr(&apply_path_loss(&params, &fading, 3.0, 0.0));
        let far = norm_sqr(&apply_path_loss(&params, &fading, 6.0, 0.0));
        assert!((near / far - 8.0).abs() < 1e-9);
    }

    #[test]
    fn mean_gain_matches_lognormal_moment() {
        let params = ChannelParams { shadowing_db: 4.0, ..Default::default() };
        let env = Environment::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (x, y) = (20.0, 12.0);
        let d = env.distance(x, y);
        let n = 100_000;
        let mean = (0..n).map(|_| norm_sqr(&sample_channel(&env, &params, (x, y), 2, &mut rng))).sum::<f64>() / n as f64;
        // E[10^(z/10)] for z ~ N(0, s^2) is exp((s ln10 / 10)^2 / 2).
        let b = params.shadowing_db * std::f64::consts::LN_10 / 10.0;
        let expected = 2.0 * 10f64.powf(-params.path_loss_db(d, 0.0) / 10.0) * (b * b / 2.0).exp();
        assert!((mean / expected - 1.0).abs() < 0.02, "{mean} vs {expected}");
    }

    #[test]
    fn calibration() {
        let env = Environment::default();
        assert!((env.max_distance() - (15f64 * 15.0 * 2.0 + 25.0).sqrt()).abs() < 1e-12);
        assert!((env.max_distance() - 21.79).abs() < 5e-3);
        let params = ChannelParams::default();
        let p0 = calibrate_power(&env, &params, 0.0);
        let pl = params.path_loss_db(env.max_distance(), 0.0);
        assert!((p0 - params.noise_power * 10f64.powf(pl / 10.0)).abs() <= 1e-9 * p0);
        let p5 = calibrate_power(&env, &params, 5.0);
        assert!((p5 / p0 - 10f64.powf(0.5)).abs() < 1e-12);
    }

    #[test]
    fn grid_indexing() {
        let env = Environment::square(6);
        assert_eq!(env.stu_count(), 36);
        for s in 0..36 {
            let (x, y) = env.stu_center(s);
            assert_eq!(env.stu_at(x, y), s);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for s in 0..36 {
            let (x, y) = env.sample_position(s, &mut rng);
            assert_eq!(env.stu_at(x, y), s);
        }
        assert!(env.check().is_ok());
        let bad = Environment { transmitter: [7.0, 1.0, 5.0], ..Environment::square(6) };
        assert!(bad.check().is_err());
    }
}
