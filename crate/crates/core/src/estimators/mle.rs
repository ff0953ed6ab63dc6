use crate::error::{Error, Result};
use crate::model::SpectralModel;
use crate::sim::ObservationSet;

use super::{EstimationResult, Family};

/// Single-mode MLE from the terminal log-ratio `v_k`:
///
/// ```text
/// theta_k = -v_k / (nu_k T) - M_k / (2 nu_k) - rho_k / nu_k
/// ```
pub(crate) fn mle_value(model: &SpectralModel, k: usize, v: f64, horizon: f64) -> f64 {
    let nu = model.nu(k);
    -v / (nu * horizon) - model.total_loading(k) / (2.0 * nu) - model.rho(k) / nu
}

pub fn mle_single(
    model: &SpectralModel,
    k: usize,
    obs: &ObservationSet,
) -> Result<EstimationResult> {
    model.check_mode(k)?;
    let v = obs.log_ratio(k)?;
    Ok(EstimationResult {
        theta_hat: mle_value(model, k, v, obs.horizon),
        family: Family::Mle,
        modes_used: vec![k],
        theoretical_mse: Some(model.eta(k) / obs.horizon),
        degenerate: false,
    })
}

/// `E(theta_k - theta_0)^2 = eta_k / T`.
pub fn mle_variance(model: &SpectralModel, k: usize, horizon: f64) -> Result<f64> {
    model.check_mode(k)?;
    if horizon.is_nan() || horizon <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "horizon T must be positive, got {horizon}"
        )));
    }
    Ok(model.eta(k) / horizon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_builtin, NoiseLoadings, ThetaDomain};
    use crate::sim::{simulate_observations, ModeObservation};
    use std::collections::BTreeMap;

    fn model(name: &str, pairs: &[(&str, f64)]) -> SpectralModel {
        let p = pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        build_builtin(name, &p).unwrap()
    }

    #[test]
    fn inverts_zero_noise_drift() {
        let m = model("heat-1w", &[("k_max", 5.0)]);
        let obs = ObservationSet::new(
            1.0,
            vec![ModeObservation {
                k: 1,
                u0: 1.0,
                v: -2.5,
            }],
        )
        .unwrap();
        let r = mle_single(&m, 1, &obs).unwrap();
        assert_eq!(r.theta_hat, 2.0);
        assert_eq!(r.family, Family::Mle);
        assert_eq!(r.theoretical_mse, Some(1.0));
    }

    #[test]
    fn error_identity_on_synthetic_data() {
        let m = model("figure1", &[("J", 10.0), ("k_max", 30.0)]);
        let modes: Vec<usize> = (1..=30).collect();
        for seed in 0..20 {
            let obs = simulate_observations(&m, &modes, 1.0, &BTreeMap::new(), 1.0, seed).unwrap();
            let w = &obs.noise.as_ref().unwrap().w_terminal;
            for &k in &modes {
                let est = mle_single(&m, k, &obs).unwrap().theta_hat;
                let noise_term: f64 = (1..=10).map(|j| m.mu(j, k).unwrap() * w[j - 1]).sum();
                let predicted = 1.0 - noise_term / (m.nu(k) * obs.horizon);
                assert!((est - predicted).abs() < 1e-10, "k={k} seed={seed}");
            }
        }
    }

    #[test]
    fn heat_variance_is_inverse_quartic() {
        let m = model("heat-1w", &[("k_max", 10.0)]);
        for k in 1..=10 {
            let t = 0.5;
            let expected = 1.0 / ((k as f64).powi(4) * t);
            assert!((mle_variance(&m, k, t).unwrap() - expected).abs() < 1e-15 * expected.max(1.0));
        }
        assert_eq!(mle_variance(&m, 2, 4.0).unwrap(), 1.0 / 64.0);
    }

    #[test]
    fn figure1_variance_equals_m1() {
        let m = model("figure1", &[("J", 10.0), ("k_max", 5.0)]);
        assert!((mle_variance(&m, 1, 1.0).unwrap() - 0.558_032_193_976_458_1).abs() < 1e-15);
    }

    #[test]
    fn noise_free_mode_has_zero_variance() {
        let m = SpectralModel::new(
            "quiet",
            vec![0.0; 2],
            vec![1.0; 2],
            vec![1.0; 2],
            NoiseLoadings::Explicit {
                drivers: 1,
                table: vec![1.0, 0.0],
            },
            1.0,
            ThetaDomain::REAL_LINE,
        )
        .unwrap();
        assert_eq!(mle_variance(&m, 2, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn missing_mode_and_bad_horizon() {
        let m = model("heat-1w", &[("k_max", 10.0)]);
        let obs = ObservationSet::new(
            1.0,
            vec![ModeObservation {
                k: 1,
                u0: 1.0,
                v: 0.0,
            }],
        )
        .unwrap();
        assert!(matches!(
            mle_single(&m, 7, &obs),
            Err(Error::MissingMode(7))
        ));
        assert!(mle_variance(&m, 1, 0.0).is_err());
    }

    #[test]
    fn closed_form_model_supports_mle() {
        let m = model("smoothing-noise", &[("k_max", 5.0)]);
        // nu_k = -1, rho_k = k^2, M_k = 1/k^2
        let obs = ObservationSet::new(
            2.0,
            vec![ModeObservation {
                k: 2,
                u0: 1.0,
                v: 0.4,
            }],
        )
        .unwrap();
        let r = mle_single(&m, 2, &obs).unwrap();
        let expected = 0.4 / 2.0 + 0.25 / 2.0 + 4.0;
        assert!((r.theta_hat - expected).abs() < 1e-14);
        assert_eq!(r.theoretical_mse, Some(0.25 / 2.0));
    }
}
