//! Exact simulation of the uncoupled mode system.
//!
//! Each mode is a geometric Brownian motion, so its log-ratio
//! `v_k(T) = ln(u_k(T) / u_k(0))` is an affine function of the terminal
//! values of the Wiener drivers:
//!
//! ```text
//! v_k(T) = -(rho_k + theta nu_k + M_k / 2) T + sum_j mu_jk W_j(T)
//! ```
//!
//! All modes of one observation share a single [`NoiseRealization`]. Nothing
//! here time-steps; the only randomness is the draw of `W_j(T)`.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SpectralModel;
use crate::rng;

/// Terminal values `W_j(T)` of the shared drivers for one sample path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseRealization {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub w_terminal: Vec<f64>,
    pub seed: u64,
}

/// Draws `J` independent `Normal(0, T)` values from the stream of `seed`.
pub fn sample_terminal_noise(seed: u64, horizon: f64, drivers: usize) -> Result<NoiseRealization> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "horizon T must be positive, got {horizon}"
        )));
    }
    if drivers == 0 {
        return Err(Error::InvalidInput(
            "number of drivers J must be at least 1".into(),
        ));
    }
    let mut stream = rng::stream(seed);
    let scale = horizon.sqrt();
    let w_terminal = (0..drivers)
        .map(|_| scale * stream.sample::<f64, _>(StandardNormal))
        .collect();
    Ok(NoiseRealization {
        horizon,
        w_terminal,
        seed,
    })
}

/// One observed mode: index, initial value and terminal log-ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeObservation {
    pub k: usize,
    pub u0: f64,
    pub v: f64,
}

impl ModeObservation {
    pub fn terminal_value(&self) -> f64 {
        self.u0 * self.v.exp()
    }
}

/// Terminal log-ratios of a set of modes observed over `[0, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationSet {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub modes: Vec<ModeObservation>,
    pub theta_true: Option<f64>,
    pub noise: Option<NoiseRealization>,
}

impl ObservationSet {
    /// Observations without synthetic provenance.
    pub fn new(horizon: f64, modes: Vec<ModeObservation>) -> Result<Self> {
        let obs = ObservationSet {
            horizon,
            modes,
            theta_true: None,
            noise: None,
        };
        obs.validate()?;
        Ok(obs)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "horizon T must be positive, got {}",
                self.horizon
            )));
        }
        let mut seen = BTreeSet::new();
        for m in &self.modes {
            if !seen.insert(m.k) {
                return Err(Error::DuplicateMode(m.k));
            }
            if m.u0 == 0.0 || !m.u0.is_finite() {
                return Err(Error::ZeroInitialValue(m.k));
            }
            if !m.v.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "non-finite log-ratio for mode {}",
                    m.k
                )));
            }
        }
        Ok(())
    }

    pub fn get(&self, k: usize) -> Result<&ModeObservation> {
        self.modes
            .iter()
            .find(|m| m.k == k)
            .ok_or(Error::MissingMode(k))
    }

    pub fn log_ratio(&self, k: usize) -> Result<f64> {
        self.get(k).map(|m| m.v)
    }

    pub fn mode_indices(&self) -> Vec<usize> {
        self.modes.iter().map(|m| m.k).collect()
    }
}

/// Drift of the log-ratio per unit time: `-(rho_k + theta nu_k + M_k / 2)`.
pub fn log_drift(model: &SpectralModel, k: usize, theta: f64) -> f64 {
    -(model.rho(k) + theta * model.nu(k) + 0.5 * model.total_loading(k))
}

/// Evolves mode `k` to the horizon of `noise`; returns `(u_k(T), v_k(T))`.
pub fn evolve_mode(
    model: &SpectralModel,
    k: usize,
    theta0: f64,
    u0: f64,
    noise: &NoiseRealization,
) -> Result<(f64, f64)> {
    model.check_mode(k)?;
    if u0 == 0.0 {
        return Err(Error::ZeroInitialValue(k));
    }
    let drivers = model.noise_dimension()?;
    if noise.w_terminal.len() != drivers {
        return Err(Error::NoiseDimension {
            expected: drivers,
            found: noise.w_terminal.len(),
        });
    }
    let v = log_ratio_unchecked(model, k, theta0, noise);
    Ok((u0 * v.exp(), v))
}

pub(crate) fn log_ratio_unchecked(
    model: &SpectralModel,
    k: usize,
    theta0: f64,
    noise: &NoiseRealization,
) -> f64 {
    let stochastic: f64 = noise
        .w_terminal
        .iter()
        .enumerate()
        .map(|(j, w)| model.mu(j + 1, k).unwrap_or(0.0) * w)
        .sum();
    log_drift(model, k, theta0) * noise.horizon + stochastic
}

/// Simulates every listed mode against one shared noise realization.
///
/// Initial values missing from `u0` default to 1.
pub fn simulate_observations(
    model: &SpectralModel,
    modes: &[usize],
    theta0: f64,
    u0: &BTreeMap<usize, f64>,
    horizon: f64,
    seed: u64,
) -> Result<ObservationSet> {
    let drivers = model.noise_dimension()?;
    if modes.is_empty() {
        return Err(Error::InvalidInput("no modes requested".into()));
    }
    let mut seen = BTreeSet::new();
    for &k in modes {
        model.check_mode(k)?;
        if !seen.insert(k) {
            return Err(Error::DuplicateMode(k));
        }
        if u0.get(&k).copied().unwrap_or(1.0) == 0.0 {
            return Err(Error::ZeroInitialValue(k));
        }
    }
    let noise = sample_terminal_noise(seed, horizon, drivers)?;
    let observed = modes
        .iter()
        .map(|&k| ModeObservation {
            k,
            u0: u0.get(&k).copied().unwrap_or(1.0),
            v: log_ratio_unchecked(model, k, theta0, &noise),
        })
        .collect();
    Ok(ObservationSet {
        horizon,
        modes: observed,
        theta_true: Some(theta0),
        noise: Some(noise),
    })
}

/// A single mode sampled on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModePath {
    pub k: usize,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub seed: u64,
}

/// Samples `u_k` on `grid` using exact Gaussian log-increments.
pub fn simulate_path(
    model: &SpectralModel,
    k: usize,
    theta0: f64,
    u0: f64,
    grid: &[f64],
    seed: u64,
) -> Result<ModePath> {
    model.check_mode(k)?;
    if u0 == 0.0 {
        return Err(Error::ZeroInitialValue(k));
    }
    let mu = model.mu_row(k)?;
    if grid.first() != Some(&0.0) {
        return Err(Error::InvalidInput("time grid must start at 0".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) || grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidInput(
            "time grid must be strictly increasing".into(),
        ));
    }

    let drift = log_drift(model, k, theta0);
    let mut stream = rng::stream(seed);
    let mut values = Vec::with_capacity(grid.len());
    values.push(u0);
    let mut v = 0.0;
    for w in grid.windows(2) {
        let dt = w[1] - w[0];
        let sd = dt.sqrt();
        let dw: f64 = mu
            .iter()
            .map(|m| m * sd * stream.sample::<f64, _>(StandardNormal))
            .sum();
        v += drift * dt + dw;
        values.push(u0 * v.exp());
    }
    Ok(ModePath {
        k,
        times: grid.to_vec(),
        values,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_builtin;

    fn heat(k_max: usize) -> SpectralModel {
        let p = [("k_max".to_string(), k_max as f64)].into_iter().collect();
        build_builtin("heat-1w", &p).unwrap()
    }

    fn figure1() -> SpectralModel {
        let p = [("J".to_string(), 10.0), ("k_max".to_string(), 50.0)]
            .into_iter()
            .collect();
        build_builtin("figure1", &p).unwrap()
    }

    #[test]
    fn terminal_noise_is_deterministic() {
        let a = sample_terminal_noise(11, 1.0, 10).unwrap();
        let b = sample_terminal_noise(11, 1.0, 10).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.w_terminal.len(), 10);
        assert_ne!(a, sample_terminal_noise(12, 1.0, 10).unwrap());
    }

    #[test]
    fn terminal_noise_rejects_bad_input() {
        assert!(sample_terminal_noise(1, 0.0, 1).is_err());
        assert!(sample_terminal_noise(1, -1.0, 1).is_err());
        assert!(sample_terminal_noise(1, 1.0, 0).is_err());
    }

    #[test]
    fn zero_noise_path_is_pure_drift() {
        let m = heat(5);
        let noise = NoiseRealization {
            horizon: 1.0,
            w_terminal: vec![0.0],
            seed: 0,
        };
        let (u, v) = evolve_mode(&m, 1, 2.0, 1.0, &noise).unwrap();
        assert_eq!(v, -2.5);
        assert_eq!(u, (-2.5f64).exp());
    }

    #[test]
    fn figure1_unit_noise() {
        let m = figure1();
        let noise = NoiseRealization {
            horizon: 1.0,
            w_terminal: vec![1.0; 10],
            seed: 0,
        };
        let (_, v) = evolve_mode(&m, 2, 1.0, 1.0, &noise).unwrap();
        // Oracle: M_2 = sum_{j=1}^{10} (2+j)^-2, sum of mu = sum 1/(2+j).
        let m2: f64 = (1..=10).map(|j| 1.0 / ((2 + j) * (2 + j)) as f64).sum();
        let s: f64 = (1..=10).map(|j| 1.0 / (2 + j) as f64).sum();
        assert!((v - (-(2.0 + m2 / 2.0) + s)).abs() < 1e-14);
    }

    #[test]
    fn negative_initial_value_keeps_sign() {
        let m = heat(5);
        let noise = sample_terminal_noise(3, 1.0, 1).unwrap();
        let (u, v) = evolve_mode(&m, 2, 1.0, -0.5, &noise).unwrap();
        assert!(u < 0.0);
        assert!((u.abs() - 0.5 * v.exp()).abs() < 1e-15);
    }

    #[test]
    fn evolve_mode_errors() {
        let m = heat(5);
        let noise = NoiseRealization {
            horizon: 1.0,
            w_terminal: vec![0.0, 0.0],
            seed: 0,
        };
        assert!(matches!(
            evolve_mode(&m, 1, 1.0, 1.0, &noise),
            Err(Error::NoiseDimension { .. })
        ));
        assert!(matches!(
            evolve_mode(&m, 6, 1.0, 1.0, &noise),
            Err(Error::ModeOutOfRange { .. })
        ));
    }

    #[test]
    fn shared_noise_cancels_in_differences() {
        let m = heat(5);
        let theta = 1.7;
        let obs = simulate_observations(&m, &[1, 2], theta, &BTreeMap::new(), 0.8, 9).unwrap();
        let d = obs.log_ratio(1).unwrap() - obs.log_ratio(2).unwrap();
        assert!((d - 3.0 * theta * 0.8).abs() < 1e-12);
    }

    #[test]
    fn simulate_observations_is_reproducible_and_validated() {
        let m = figure1();
        let a = simulate_observations(&m, &[1, 2, 3], 1.0, &BTreeMap::new(), 1.0, 5).unwrap();
        let b = simulate_observations(&m, &[1, 2, 3], 1.0, &BTreeMap::new(), 1.0, 5).unwrap();
        assert_eq!(a, b);
        assert!(matches!(
            simulate_observations(&m, &[1, 1], 1.0, &BTreeMap::new(), 1.0, 5),
            Err(Error::DuplicateMode(1))
        ));
        let u0 = [(2usize, 0.0)].into_iter().collect();
        assert!(matches!(
            simulate_observations(&m, &[1, 2], 1.0, &u0, 1.0, 5),
            Err(Error::ZeroInitialValue(2))
        ));
        let closed = build_builtin("smoothing-noise", &BTreeMap::new()).unwrap();
        assert!(matches!(
            simulate_observations(&closed, &[1], 1.0, &BTreeMap::new(), 1.0, 5),
            Err(Error::NoExplicitLoadings)
        ));
    }

    #[test]
    fn path_on_trivial_grid() {
        let m = heat(3);
        let p = simulate_path(&m, 1, 1.0, 2.0, &[0.0], 1).unwrap();
        assert_eq!(p.values, vec![2.0]);
        assert!(simulate_path(&m, 1, 1.0, 2.0, &[0.0, 0.5, 0.5], 1).is_err());
        assert!(simulate_path(&m, 1, 1.0, 2.0, &[0.1, 0.5], 1).is_err());
    }

    #[test]
    fn zero_noise_path_follows_ode() {
        let m = SpectralModel::new(
            "quiet",
            vec![0.3; 3],
            vec![1.0, 2.0, 3.0],
            vec![1.0; 3],
            crate::model::NoiseLoadings::Explicit {
                drivers: 1,
                table: vec![0.0; 3],
            },
            1.0,
            crate::model::ThetaDomain::REAL_LINE,
        )
        .unwrap();
        let grid = [0.0, 0.25, 0.5, 1.0, 2.0];
        let p = simulate_path(&m, 2, 1.5, 1.0, &grid, 4).unwrap();
        for (t, u) in grid.iter().zip(&p.values) {
            let expected = (-(0.3 + 1.5 * 2.0) * t).exp();
            assert!((u - expected).abs() < 1e-14 * expected.max(1.0));
        }
    }
}
