use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SpectralModel;
use crate::sim::ObservationSet;

use super::mle::mle_value;
use super::{EstimationResult, Family};

/// Nonnegative weights `beta_k` for the weighted averaging estimator.
///
/// Consistency as `N -> infinity` additionally needs `sum beta_k = infinity`,
/// which no finite prefix can confirm; only positivity of the partial sum is
/// enforced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightScheme {
    /// `beta_k = 1`
    One,
    /// `beta_k = k`
    K,
    /// `beta_k = 1 / k`
    InvK,
    /// `beta_k = k^p`
    Power(f64),
    /// `beta_k` listed from `k = 1`.
    Explicit(Vec<f64>),
}

impl WeightScheme {
    pub fn beta(&self, k: usize) -> Result<f64> {
        let kf = k as f64;
        let b = match self {
            WeightScheme::One => 1.0,
            WeightScheme::K => kf,
            WeightScheme::InvK => 1.0 / kf,
            WeightScheme::Power(p) => kf.powf(*p),
            WeightScheme::Explicit(w) => *w.get(k - 1).ok_or_else(|| {
                Error::InvalidInput(format!("explicit weights end before mode {k}"))
            })?,
        };
        if b.is_finite() && b >= 0.0 {
            Ok(b)
        } else {
            Err(Error::InvalidInput(format!(
                "weight beta_{k} = {b} is not a nonnegative number"
            )))
        }
    }

    /// Short text label: `one`, `k`, `inv_k`, `pow:<p>`, `explicit`.
    pub fn label(&self) -> String {
        match self {
            WeightScheme::One => "one".into(),
            WeightScheme::K => "k".into(),
            WeightScheme::InvK => "inv_k".into(),
            WeightScheme::Power(p) => format!("pow:{p}"),
            WeightScheme::Explicit(_) => "explicit".into(),
        }
    }

    /// Parses the labels produced by [`WeightScheme::label`] (except `explicit`)
    /// and comma-separated explicit weight lists.
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "one" | "1" => Ok(WeightScheme::One),
            "k" => Ok(WeightScheme::K),
            "inv_k" | "1/k" => Ok(WeightScheme::InvK),
            _ => {
                if let Some(p) = s.strip_prefix("pow:") {
                    return p
                        .parse()
                        .map(WeightScheme::Power)
                        .map_err(|_| Error::InvalidInput(format!("bad weight exponent '{p}'")));
                }
                s.split(',')
                    .map(|t| t.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map(WeightScheme::Explicit)
                    .map_err(|_| {
                        Error::InvalidInput(format!(
                            "unknown weight scheme '{s}' (expected one, k, inv_k, pow:<p> or a list)"
                        ))
                    })
            }
        }
    }

    /// `(beta_1, ..., beta_N)` with a positive total.
    pub(crate) fn prefix(&self, n: usize) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::InvalidInput("N must be at least 1".into()));
        }
        let betas = (1..=n).map(|k| self.beta(k)).collect::<Result<Vec<_>>>()?;
        if betas.iter().sum::<f64>() > 0.0 {
            Ok(betas)
        } else {
            Err(Error::ZeroWeight(n))
        }
    }
}

/// `sum_k beta_k theta_k / sum_k beta_k` over modes `1..=N`.
pub fn weighted_average(
    model: &SpectralModel,
    obs: &ObservationSet,
    scheme: &WeightScheme,
    n: usize,
) -> Result<EstimationResult> {
    model.check_mode(n.max(1))?;
    let betas = scheme.prefix(n)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, beta) in betas.iter().enumerate() {
        let k = i + 1;
        let v = obs.log_ratio(k)?;
        num += beta * mle_value(model, k, v, obs.horizon);
        den += beta;
    }
    let variance = weighted_variance(model, scheme, n, obs.horizon)?;
    Ok(EstimationResult {
        theta_hat: num / den,
        family: Family::Weighted,
        modes_used: (1..=n).collect(),
        theoretical_mse: Some(variance),
        degenerate: false,
    })
}

/// `V_N / T` with `V_N = sum_j (sum_k beta_k mu_jk / nu_k / sum_k beta_k)^2`.
pub fn weighted_variance(
    model: &SpectralModel,
    scheme: &WeightScheme,
    n: usize,
    horizon: f64,
) -> Result<f64> {
    if horizon.is_nan() || horizon <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "horizon T must be positive, got {horizon}"
        )));
    }
    model.check_mode(n.max(1))?;
    let drivers = model.noise_dimension()?;
    let betas = scheme.prefix(n)?;
    let total: f64 = betas.iter().sum();
    let v_n: f64 = (1..=drivers)
        .map(|j| {
            let s: f64 = betas
                .iter()
                .enumerate()
                .map(|(i, b)| {
                    let k = i + 1;
                    b * model.mu(j, k).unwrap_or(0.0) / model.nu(k)
                })
                .sum();
            (s / total).powi(2)
        })
        .sum();
    Ok(v_n / horizon)
}
