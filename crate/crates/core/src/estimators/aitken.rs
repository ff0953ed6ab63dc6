use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SpectralModel;
use crate::sim::ObservationSet;

use super::mle::mle_value;
use super::{EstimationResult, Family};

/// Relative size below which a second difference counts as zero.
pub const TOL_AITKEN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AitkenValue {
    pub value: f64,
    /// The second difference vanished and `value` is the untransformed input.
    pub degenerate: bool,
}

/// `a - (b - a)^2 / (c - 2b + a)`, or `None` when the denominator is
/// negligible relative to the triple.
fn delta_squared(a: f64, b: f64, c: f64) -> Option<f64> {
    let d1 = b - a;
    let d2 = c - 2.0 * b + a;
    let scale = a.abs().max(b.abs()).max(c.abs());
    if d2.abs() <= TOL_AITKEN * scale {
        None
    } else {
        Some(a - d1 * d1 / d2)
    }
}

/// Aitken's delta-squared transform; output has two fewer entries.
pub fn aitken(seq: &[f64]) -> Result<Vec<AitkenValue>> {
    if seq.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "Aitken transform needs at least 3 terms, got {}",
            seq.len()
        )));
    }
    Ok(seq
        .windows(3)
        .map(|w| match delta_squared(w[0], w[1], w[2]) {
            Some(value) => AitkenValue {
                value,
                degenerate: false,
            },
            None => AitkenValue {
                value: w[0],
                degenerate: true,
            },
        })
        .collect())
}

/// Accelerated estimate at mode `k` from the MLEs at `k`, `k+1`, `k+2`.
pub fn aitken_estimate(
    model: &SpectralModel,
    k: usize,
    obs: &ObservationSet,
) -> Result<EstimationResult> {
    model.check_mode(k)?;
    model.check_mode(k + 2)?;
    let mut thetas = [0.0; 3];
    for (i, t) in thetas.iter_mut().enumerate() {
        let kk = k + i;
        *t = mle_value(model, kk, obs.log_ratio(kk)?, obs.horizon);
    }
    let out = aitken(&thetas)?[0];
    Ok(EstimationResult {
        theta_hat: out.value,
        family: Family::Aitken,
        modes_used: vec![k, k + 1, k + 2],
        theoretical_mse: None,
        degenerate: out.degenerate,
    })
}

/// Mean-square error ratio of the accelerated over the plain estimator for a
/// single-driver model, where `theta_k - theta_0 = -(W(T)/T) r_k` with
/// `r_k = mu_1k / nu_k`. Returns `g_k^2 / r_k^2` for the transformed
/// coefficient `g_k`. `r_seq[0]` is `r_1`.
pub fn aitken_deterministic_ratio(r_seq: &[f64], k: usize) -> Result<f64> {
    if k == 0 || k + 2 > r_seq.len() {
        return Err(Error::InvalidInput(format!(
            "index {k} needs r_k..r_(k+2) within a sequence of length {}",
            r_seq.len()
        )));
    }
    let (a, b, c) = (r_seq[k - 1], r_seq[k], r_seq[k + 1]);
    if a == 0.0 {
        return Err(Error::InvalidInput(format!("r_{k} is zero")));
    }
    let g = delta_squared(a, b, c).ok_or(Error::DegenerateDenominator(k))?;
    Ok((g / a).powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_sequence_passes_through() {
        let out = aitken(&[3.0, 3.0, 3.0]).unwrap();
        assert_eq!(
            out,
            vec![AitkenValue {
                value: 3.0,
                degenerate: true
            }]
        );
        let zeros = aitken(&[0.0, 0.0, 0.0]).unwrap();
        assert!(zeros[0].degenerate);
    }

    #[test]
    fn exact_on_geometric_error() {
        let out = aitken(&[2.0, 1.5, 1.25]).unwrap();
        assert_eq!(out[0].value, 1.0);
        assert!(!out[0].degenerate);
        let seq: Vec<f64> = (0..12).map(|n| 0.7 - 3.0 * (-0.6f64).powi(n)).collect();
        for v in aitken(&seq).unwrap() {
            assert!((v.value - 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn needs_three_terms() {
        assert!(aitken(&[1.0, 2.0]).is_err());
        assert_eq!(aitken(&[1.0, 2.0, 4.0, 8.0]).unwrap().len(), 2);
    }

    #[test]
    fn harmonic_ratio_closed_form() {
        let r: Vec<f64> = (1..=102).map(|k| 1.0 / k as f64).collect();
        let ratio = aitken_deterministic_ratio(&r, 100).unwrap();
        assert!((ratio - (100.0f64 / 202.0).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn ratio_errors() {
        let r = [0.0, 1.0, 2.0];
        assert!(aitken_deterministic_ratio(&r, 1).is_err());
        assert!(aitken_deterministic_ratio(&[1.0, 1.0], 1).is_err());
        assert!(matches!(
            aitken_deterministic_ratio(&[1.0, 2.0, 3.0], 1),
            Err(Error::DegenerateDenominator(1))
        ));
    }
}
