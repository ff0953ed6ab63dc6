//! Estimators of the drift parameter `theta`.
//!
//! * [`mle`]: single-mode maximum likelihood from one terminal log-ratio.
//! * [`weighted`]: weighted averages of the first `N` single-mode estimates.
//! * [`aitken`]: Aitken's delta-squared transform of the estimate sequence.
//! * [`exact`]: noise-annihilating combinations of several modes, which
//!   recover `theta` with no statistical error.

pub mod aitken;
pub mod exact;
pub mod mle;
pub mod weighted;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use aitken::{aitken, aitken_deterministic_ratio, aitken_estimate, AitkenValue};
pub use exact::{exact_combination, exact_estimate, exact_pairwise, ExactCombination};
pub use mle::{mle_single, mle_variance};
pub use weighted::{weighted_average, weighted_variance, WeightScheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Mle,
    Weighted,
    Aitken,
    Exact,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Mle => "mle",
            Family::Weighted => "weighted",
            Family::Aitken => "aitken",
            Family::Exact => "exact",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mle" => Ok(Family::Mle),
            "weighted" => Ok(Family::Weighted),
            "aitken" => Ok(Family::Aitken),
            "exact" => Ok(Family::Exact),
            other => Err(format!(
                "unknown estimator family '{other}' (expected mle, weighted, aitken or exact)"
            )),
        }
    }
}

/// An estimate together with how it was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub theta_hat: f64,
    pub family: Family,
    pub modes_used: Vec<usize>,
    /// `eta_k / T` for mle, `V_N / T` for weighted, 0 for exact, absent for aitken.
    pub theoretical_mse: Option<f64>,
    /// Set when the Aitken transform hit a vanishing second difference and
    /// passed the estimate through unchanged.
    #[serde(default)]
    pub degenerate: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_round_trips_through_text() {
        for f in [Family::Mle, Family::Weighted, Family::Aitken, Family::Exact] {
            assert_eq!(f.as_str().parse::<Family>().unwrap(), f);
        }
        assert!("bayes".parse::<Family>().is_err());
    }
}
