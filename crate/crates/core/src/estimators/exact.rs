//! Closed-form exact estimators.
//!
//! Integrating the log-ratio dynamics over `[0, T]` gives, for every mode,
//!
//! ```text
//! v_k(T) = -(rho_k + theta nu_k + M_k / 2) T + sum_j mu_jk W_j(T).
//! ```
//!
//! Any weights `c` over a set of modes with `sum_l c_l mu_{j,k_l} = 0` for
//! every driver `j` remove the noise entirely, leaving one linear equation in
//! `theta`. With `J` drivers, `J + 1` modes always admit such weights; the
//! estimator is usable whenever additionally `sum_l c_l nu_{k_l} != 0`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{null_space, Matrix};
use crate::model::SpectralModel;
use crate::sim::ObservationSet;

use super::{EstimationResult, Family};

/// Residual tolerance for noise cancellation, relative to `|c| * |row_j|`.
pub const TOL_NULL: f64 = 1e-10;
/// Smallest admissible `|sum_l c_l nu_{k_l}|` for weights normalized to `max|c_l| = 1`.
pub const TOL_DENOM: f64 = 1e-12;
/// Relative pivot threshold used when eliminating on the loading matrix.
pub const TOL_PIVOT: f64 = 1e-12;

/// Noise-annihilating weights over a set of modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactCombination {
    pub modes: Vec<usize>,
    pub weights: Vec<f64>,
    /// `sum_l c_l nu_{k_l}`
    pub denominator: f64,
    pub model_fingerprint: u64,
}

impl ExactCombination {
    /// `max_j |sum_l c_l mu_{j,k_l}|`.
    pub fn max_residual(&self, model: &SpectralModel) -> Result<f64> {
        let drivers = model.noise_dimension()?;
        Ok((1..=drivers)
            .map(|j| self.driver_residual(model, j))
            .fold(0.0, f64::max))
    }

    pub fn weight_norm(&self) -> f64 {
        self.weights.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    fn driver_residual(&self, model: &SpectralModel, j: usize) -> f64 {
        self.modes
            .iter()
            .zip(&self.weights)
            .map(|(&k, c)| c * model.mu(j, k).unwrap_or(0.0))
            .sum::<f64>()
            .abs()
    }

    fn satisfies_invariants(&self, model: &SpectralModel) -> Result<bool> {
        let drivers = model.noise_dimension()?;
        let c_norm = self.weight_norm();
        for j in 1..=drivers {
            let row_norm = self
                .modes
                .iter()
                .map(|&k| model.mu(j, k).unwrap_or(0.0).powi(2))
                .sum::<f64>()
                .sqrt();
            if self.driver_residual(model, j) > TOL_NULL * c_norm * row_norm {
                return Ok(false);
            }
        }
        Ok(self.denominator.abs() > TOL_DENOM)
    }
}

fn validate_modes(model: &SpectralModel, modes: &[usize]) -> Result<()> {
    if modes.is_empty() {
        return Err(Error::InvalidInput(
            "exact combination needs at least one mode".into(),
        ));
    }
    let mut seen = BTreeSet::new();
    for &k in modes {
        model.check_mode(k)?;
        if !seen.insert(k) {
            return Err(Error::DuplicateMode(k));
        }
    }
    Ok(())
}

/// Scales so that `max|c| = 1` and the first nonzero entry is positive.
fn normalize(mut c: Vec<f64>) -> Vec<f64> {
    let max = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let sign = c.iter().find(|v| **v != 0.0).map_or(1.0, |v| v.signum());
    c.iter_mut().for_each(|v| *v *= sign / max);
    c
}

/// Finds weights over `modes` that cancel every driver and keep a nonzero
/// coefficient on `theta`.
///
/// A mode with no noise loading at all is used on its own. Otherwise the
/// kernel of the `J x n` loading matrix is computed and the basis vector with
/// the best-conditioned denominator is returned.
pub fn exact_combination(model: &SpectralModel, modes: &[usize]) -> Result<ExactCombination> {
    validate_modes(model, modes)?;
    let drivers = model.noise_dimension()?;
    let fingerprint = model.fingerprint();

    if let Some(pos) = modes
        .iter()
        .position(|&k| (1..=drivers).all(|j| model.mu(j, k) == Some(0.0)))
    {
        let mut weights = vec![0.0; modes.len()];
        weights[pos] = 1.0;
        let combo = ExactCombination {
            modes: modes.to_vec(),
            weights,
            denominator: model.nu(modes[pos]),
            model_fingerprint: fingerprint,
        };
        return Ok(combo);
    }

    let rows: Vec<Vec<f64>> = (1..=drivers)
        .map(|j| {
            modes
                .iter()
                .map(|&k| model.mu(j, k).unwrap_or(0.0))
                .collect()
        })
        .collect();
    let loading = Matrix::from_rows(&rows);

    let best = null_space(&loading, TOL_PIVOT)
        .into_iter()
        .map(normalize)
        .map(|c| {
            let den: f64 = modes.iter().zip(&c).map(|(&k, w)| w * model.nu(k)).sum();
            let norm = c.iter().map(|w| w * w).sum::<f64>().sqrt();
            (den.abs() / norm, den, c)
        })
        .max_by(|a, b| a.0.total_cmp(&b.0));

    if let Some((_, denominator, weights)) = best {
        let combo = ExactCombination {
            modes: modes.to_vec(),
            weights,
            denominator,
            model_fingerprint: fingerprint,
        };
        if combo.satisfies_invariants(model)? {
            return Ok(combo);
        }
    }
    Err(Error::NoExactCombination(modes.to_vec()))
}

/// Solves the noise-free linear relation for `theta`:
///
/// ```text
/// theta = [-(1/T) sum_l c_l v_l - sum_l c_l (rho_l + M_l / 2)] / sum_l c_l nu_l
/// ```
pub fn exact_estimate(
    model: &SpectralModel,
    combo: &ExactCombination,
    obs: &ObservationSet,
) -> Result<EstimationResult> {
    if combo.model_fingerprint != model.fingerprint() {
        return Err(Error::StaleCombination);
    }
    let mut observed = 0.0;
    let mut offset = 0.0;
    for (&k, &c) in combo.modes.iter().zip(&combo.weights) {
        let v = obs.log_ratio(k)?;
        observed += c * v;
        offset += c * (model.rho(k) + 0.5 * model.total_loading(k));
    }
    let theta_hat = (-observed / obs.horizon - offset) / combo.denominator;
    Ok(EstimationResult {
        theta_hat,
        family: Family::Exact,
        modes_used: combo.modes.clone(),
        theoretical_mse: Some(0.0),
        degenerate: false,
    })
}

/// Two-mode exact estimator with weights `(1, -1)`, for modes whose noise
/// loadings coincide:
///
/// ```text
/// theta = (v_n - v_k) / (T (nu_k - nu_n)) - (rho_k - rho_n + (M_k - M_n) / 2) / (nu_k - nu_n)
/// ```
pub fn exact_pairwise(
    model: &SpectralModel,
    k: usize,
    n: usize,
    obs: &ObservationSet,
) -> Result<EstimationResult> {
    if k == n {
        return Err(Error::InvalidInput(format!(
            "pairwise exact estimator needs two distinct modes, got {k} twice"
        )));
    }
    validate_modes(model, &[k, n])?;
    let row_k = model.mu_row(k)?;
    let row_n = model.mu_row(n)?;
    let norm = |r: &[f64]| r.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = norm(&row_k).max(norm(&row_n));
    if row_k
        .iter()
        .zip(&row_n)
        .any(|(a, b)| (a - b).abs() > TOL_NULL * scale)
    {
        return Err(Error::LoadingsDoNotCancel { k, n });
    }
    let denominator = model.nu(k) - model.nu(n);
    if denominator.abs() <= TOL_DENOM {
        return Err(Error::NoExactCombination(vec![k, n]));
    }
    let combo = ExactCombination {
        modes: vec![k, n],
        weights: vec![1.0, -1.0],
        denominator,
        model_fingerprint: model.fingerprint(),
    };
    exact_estimate(model, &combo, obs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_builtin, NoiseLoadings, ThetaDomain};
    use crate::sim::simulate_observations;
    use std::collections::BTreeMap;

    fn model(name: &str, pairs: &[(&str, f64)]) -> SpectralModel {
        let p = pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        build_builtin(name, &p).unwrap()
    }

    #[test]
    fn heat_pair_weights() {
        let m = model("heat-1w", &[("k_max", 10.0)]);
        let c = exact_combination(&m, &[1, 2]).unwrap();
        assert_eq!(c.weights, vec![1.0, -1.0]);
        assert_eq!(c.denominator, -3.0);
    }

    #[test]
    fn heat_shift_recovers_theta() {
        let m = model("heat-shift", &[("k_max", 10.0)]);
        let c = exact_combination(&m, &[1, 2]).unwrap();
        assert_eq!(c.weights, vec![1.0, -1.0]);
        for seed in 0..20 {
            let obs = simulate_observations(&m, &[1, 2], 0.9, &BTreeMap::new(), 0.7, seed).unwrap();
            let est = exact_estimate(&m, &c, &obs).unwrap().theta_hat;
            // (v_1 - v_2) / (3T)
            let direct = (obs.log_ratio(1).unwrap() - obs.log_ratio(2).unwrap()) / (3.0 * 0.7);
            assert!((est - 0.9).abs() < 1e-12);
            assert!((est - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn noise_free_mode_is_used_alone() {
        let m = SpectralModel::new(
            "neumann",
            vec![0.0; 3],
            vec![0.0001, 1.0, 4.0],
            vec![1.0; 3],
            NoiseLoadings::Explicit {
                drivers: 1,
                table: vec![1.0, 0.0, 0.0],
            },
            1.0,
            ThetaDomain::REAL_LINE,
        )
        .unwrap();
        let c = exact_combination(&m, &[1, 2, 3]).unwrap();
        assert_eq!(c.weights, vec![0.0, 1.0, 0.0]);
        let obs = simulate_observations(&m, &[1, 2, 3], 2.2, &BTreeMap::new(), 1.5, 4).unwrap();
        let est = exact_estimate(&m, &c, &obs).unwrap();
        // theta = ln(u_2(0) / u_2(T)) / T
        assert!((est.theta_hat - 2.2).abs() < 1e-12);
        assert!((est.theta_hat + obs.log_ratio(2).unwrap() / 1.5).abs() < 1e-12);
        assert_eq!(est.theoretical_mse, Some(0.0));
    }

    #[test]
    fn figure1_eleven_modes() {
        let m = model("figure1", &[("J", 10.0), ("k_max", 20.0)]);
        let modes: Vec<usize> = (1..=11).collect();
        let c = exact_combination(&m, &modes).unwrap();
        assert!(c.max_residual(&m).unwrap() <= 1e-10 * c.weight_norm());
        for seed in 0..10 {
            let obs = simulate_observations(&m, &modes, 1.0, &BTreeMap::new(), 1.0, seed).unwrap();
            let est = exact_estimate(&m, &c, &obs).unwrap().theta_hat;
            assert!((est - 1.0).abs() <= 1e-8, "seed {seed}: {est}");
        }
    }

    #[test]
    fn too_few_modes_fail() {
        let m = model("figure1", &[("J", 10.0), ("k_max", 20.0)]);
        assert!(matches!(
            exact_combination(&m, &[1, 2, 3]),
            Err(Error::NoExactCombination(_))
        ));
    }

    #[test]
    fn kernel_without_theta_signal_fails() {
        // Both modes share loadings and nu, so (1, -1) cancels theta as well.
        let m = SpectralModel::new(
            "flat",
            vec![0.0, 1.0],
            vec![2.0, 2.0],
            vec![1.0; 2],
            NoiseLoadings::Explicit {
                drivers: 1,
                table: vec![1.0, 1.0],
            },
            1.0,
            ThetaDomain::REAL_LINE,
        )
        .unwrap();
        assert!(matches!(
            exact_combination(&m, &[1, 2]),
            Err(Error::NoExactCombination(_))
        ));
        let obs = crate::sim::ObservationSet::new(
            1.0,
            vec![
                crate::sim::ModeObservation {
                    k: 1,
                    u0: 1.0,
                    v: 0.0,
                },
                crate::sim::ModeObservation {
                    k: 2,
                    u0: 1.0,
                    v: 0.0,
                },
            ],
        )
        .unwrap();
        assert!(matches!(
            exact_pairwise(&m, 1, 2, &obs),
            Err(Error::NoExactCombination(_))
        ));
    }

    #[test]
    fn missing_mode_and_stale_combo() {
        let heat = model("heat-1w", &[("k_max", 10.0)]);
        let shift = model("heat-shift", &[("k_max", 10.0)]);
        let c = exact_combination(&heat, &[3, 4]).unwrap();
        let obs = simulate_observations(&heat, &[1, 2], 1.0, &BTreeMap::new(), 1.0, 1).unwrap();
        assert!(matches!(
            exact_estimate(&heat, &c, &obs),
            Err(Error::MissingMode(3))
        ));
        let obs = simulate_observations(&heat, &[3, 4], 1.0, &BTreeMap::new(), 1.0, 1).unwrap();
        assert!(matches!(
            exact_estimate(&shift, &c, &obs),
            Err(Error::StaleCombination)
        ));
    }

    #[test]
    fn pairwise_cases() {
        let heat = model("heat-1w", &[("k_max", 10.0)]);
        let obs = simulate_observations(&heat, &[1, 2, 3], 1.3, &BTreeMap::new(), 0.5, 8).unwrap();
        let r = exact_pairwise(&heat, 3, 1, &obs).unwrap();
        assert!((r.theta_hat - 1.3).abs() < 1e-12);
        assert!(exact_pairwise(&heat, 2, 2, &obs).is_err());

        let fig = model("figure1", &[("J", 10.0), ("k_max", 20.0)]);
        let obs = simulate_observations(&fig, &[1, 2], 1.0, &BTreeMap::new(), 1.0, 8).unwrap();
        assert!(matches!(
            exact_pairwise(&fig, 1, 2, &obs),
            Err(Error::LoadingsDoNotCancel { k: 1, n: 2 })
        ));
    }

    #[test]
    fn closed_form_model_cannot_combine() {
        let m = model("smoothing-noise", &[("k_max", 5.0)]);
        assert!(matches!(
            exact_combination(&m, &[1, 2]),
            Err(Error::NoExplicitLoadings)
        ));
    }
}
