//! Monte Carlo harness for the estimator families.
//!
//! Each replicate draws one shared noise realization, simulates modes
//! `1..=K` exactly and evaluates every configured estimator at every `k`.
//! Errors `theta_hat - theta_0` are folded into mergeable moment
//! accumulators. Replicates are processed in fixed-size chunks whose partial
//! accumulators are merged in chunk order, so serial and parallel runs produce
//! bit-identical reports.

mod report;
pub mod stats;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::exact::{exact_combination, exact_estimate, ExactCombination};
use crate::estimators::mle::mle_value;
use crate::estimators::{aitken, mle_variance, weighted_variance, WeightScheme};
use crate::io::ModelSpec;
use crate::model::SpectralModel;
use crate::rng::replicate_seed;
use crate::sim::simulate_observations;

pub use report::{emit_report, read_report, REPORT_HEADER};
pub use stats::{normality_stats, Moments};

/// Replicates per accumulation chunk. Part of the reproducibility contract.
pub const CHUNK: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorSpec {
    Mle,
    Weighted { beta: WeightScheme },
    Aitken,
    Exact { modes: Vec<usize> },
}

impl EstimatorSpec {
    pub fn label(&self) -> String {
        match self {
            EstimatorSpec::Mle => "mle".into(),
            EstimatorSpec::Weighted { beta } => format!("weighted:{}", beta.label()),
            EstimatorSpec::Aitken => "aitken".into(),
            EstimatorSpec::Exact { .. } => "exact".into(),
        }
    }
}

fn default_estimators() -> Vec<EstimatorSpec> {
    vec![
        EstimatorSpec::Mle,
        EstimatorSpec::Weighted {
            beta: WeightScheme::K,
        },
        EstimatorSpec::Aitken,
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCConfig {
    pub model: ModelSpec,
    pub theta0: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub replicates: u64,
    pub root_seed: u64,
    /// Largest mode `K`; modes `1..=K` are simulated.
    #[serde(rename = "K")]
    pub k_range: usize,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<EstimatorSpec>,
}

impl MCConfig {
    /// The reference study: `figure1` with `J = 10`, `theta_0 = 1`,
    /// `T = 1`, `R = 10^4`, `K = 30`.
    pub fn figure1(root_seed: u64) -> Self {
        let params = [("J".to_string(), 10.0), ("k_max".to_string(), 50.0)]
            .into_iter()
            .collect();
        MCConfig {
            model: ModelSpec::Builtin {
                builtin: "figure1".into(),
                params,
            },
            theta0: 1.0,
            horizon: 1.0,
            replicates: 10_000,
            root_seed,
            k_range: 30,
            estimators: default_estimators(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Serial,
    Parallel,
}

/// One `(estimator, k)` line of the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCRow {
    pub estimator: String,
    pub k: usize,
    pub bias: f64,
    pub mse_empirical: f64,
    pub mse_theoretical: Option<f64>,
    pub skewness: Option<f64>,
    pub excess_kurtosis: Option<f64>,
    pub replicates: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCReport {
    pub config: MCConfig,
    pub rows: Vec<MCRow>,
    /// Per-k count of replicates where the Aitken transform passed through.
    pub aitken_degenerate: BTreeMap<usize, u64>,
}

impl MCReport {
    pub fn row(&self, estimator: &str, k: usize) -> Option<&MCRow> {
        self.rows
            .iter()
            .find(|r| r.estimator == estimator && r.k == k)
    }
}

/// A column of the report: which estimator at which `k`.
#[derive(Debug, Clone)]
enum Slot {
    Mle(usize),
    Weighted(usize, usize),
    Aitken(usize),
    Exact(usize),
}

struct Plan {
    model: SpectralModel,
    modes: Vec<usize>,
    labels: Vec<(String, usize, Option<f64>, bool)>,
    slots: Vec<Slot>,
    weights: Vec<Vec<f64>>,
    combos: Vec<ExactCombination>,
}

#[derive(Clone)]
struct Partial {
    moments: Vec<Moments>,
    degenerate: Vec<u64>,
}

impl Partial {
    fn new(slots: usize, k_range: usize) -> Self {
        Partial {
            moments: vec![Moments::new(); slots],
            degenerate: vec![0; k_range],
        }
    }

    fn merge(mut self, other: &Partial) -> Partial {
        for (a, b) in self.moments.iter_mut().zip(&other.moments) {
            *a = a.merge(b);
        }
        for (a, b) in self.degenerate.iter_mut().zip(&other.degenerate) {
            *a += b;
        }
        self
    }
}

fn plan(config: &MCConfig) -> Result<Plan> {
    if config.replicates == 0 {
        return Err(Error::InvalidInput("replicates must be at least 1".into()));
    }
    if !(config.horizon > 0.0 && config.horizon.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "horizon T must be positive, got {}",
            config.horizon
        )));
    }
    if config.estimators.is_empty() {
        return Err(Error::InvalidInput("no estimators configured".into()));
    }
    let model = config.model.build()?;
    model.noise_dimension()?;
    if config.k_range == 0 {
        return Err(Error::InvalidInput("K must be at least 1".into()));
    }
    model.check_mode(config.k_range)?;

    let k_range = config.k_range;
    let horizon = config.horizon;
    let mut modes: Vec<usize> = (1..=k_range).collect();
    let mut labels = Vec::new();
    let mut slots = Vec::new();
    let mut weights = Vec::new();
    let mut combos = Vec::new();

    for spec in &config.estimators {
        let label = spec.label();
        match spec {
            EstimatorSpec::Mle => {
                for k in 1..=k_range {
                    labels.push((
                        label.clone(),
                        k,
                        Some(mle_variance(&model, k, horizon)?),
                        true,
                    ));
                    slots.push(Slot::Mle(k));
                }
            }
            EstimatorSpec::Weighted { beta } => {
                let betas = (1..=k_range)
                    .map(|k| beta.beta(k))
                    .collect::<Result<Vec<_>>>()?;
                let w = weights.len();
                weights.push(betas);
                for k in 1..=k_range {
                    // Zero partial sums are skipped rather than failing the run.
                    match weighted_variance(&model, beta, k, horizon) {
                        Ok(v) => {
                            labels.push((label.clone(), k, Some(v), true));
                            slots.push(Slot::Weighted(w, k));
                        }
                        Err(Error::ZeroWeight(_)) => {}
                        Err(e) => return Err(e),
                    }
                }
            }
            EstimatorSpec::Aitken => {
                if k_range < 3 {
                    return Err(Error::InvalidInput("Aitken estimator needs K >= 3".into()));
                }
                for k in 1..=k_range - 2 {
                    labels.push((label.clone(), k, None, true));
                    slots.push(Slot::Aitken(k));
                }
            }
            EstimatorSpec::Exact { modes: list } => {
                let combo = exact_combination(&model, list)?;
                let k = *list.iter().max().expect("validated nonempty");
                for &m in list {
                    if !modes.contains(&m) {
                        modes.push(m);
                    }
                }
                labels.push((label.clone(), k, Some(0.0), false));
                slots.push(Slot::Exact(combos.len()));
                combos.push(combo);
            }
        }
    }
    Ok(Plan {
        model,
        modes,
        labels,
        slots,
        weights,
        combos,
    })
}

fn run_replicate(config: &MCConfig, plan: &Plan, index: u64, acc: &mut Partial) -> Result<()> {
    let seed = replicate_seed(config.root_seed, index);
    let model = &plan.model;
    let obs = simulate_observations(
        model,
        &plan.modes,
        config.theta0,
        &BTreeMap::new(),
        config.horizon,
        seed,
    )?;
    let k_range = config.k_range;
    // Modes 1..=K come first in `plan.modes`, so `obs.modes[k - 1]` is mode k.
    let mles: Vec<f64> = (1..=k_range)
        .map(|k| mle_value(model, k, obs.modes[k - 1].v, obs.horizon))
        .collect();
    let accelerated = if k_range >= 3 {
        aitken(&mles)?
    } else {
        Vec::new()
    };
    let averaged: Vec<Vec<f64>> = plan
        .weights
        .iter()
        .map(|betas| {
            let mut num = 0.0;
            let mut den = 0.0;
            betas
                .iter()
                .zip(&mles)
                .map(|(b, t)| {
                    num += b * t;
                    den += b;
                    num / den
                })
                .collect()
        })
        .collect();

    for (slot, moments) in plan.slots.iter().zip(acc.moments.iter_mut()) {
        let estimate = match *slot {
            Slot::Mle(k) => mles[k - 1],
            Slot::Weighted(w, k) => averaged[w][k - 1],
            Slot::Aitken(k) => accelerated[k - 1].value,
            Slot::Exact(c) => exact_estimate(model, &plan.combos[c], &obs)?.theta_hat,
        };
        moments.push(estimate - config.theta0);
    }
    for (count, value) in acc.degenerate.iter_mut().zip(&accelerated) {
        *count += u64::from(value.degenerate);
    }
    Ok(())
}

/// Runs the configured Monte Carlo study.
pub fn run_monte_carlo(config: &MCConfig, execution: Execution) -> Result<MCReport> {
    let plan = plan(config)?;
    let slots = plan.slots.len();
    let chunks: Vec<(u64, u64)> = (0..config.replicates)
        .step_by(CHUNK)
        .map(|start| (start, (start + CHUNK as u64).min(config.replicates)))
        .collect();
    let run_chunk = |&(start, end): &(u64, u64)| -> Result<Partial> {
        let mut acc = Partial::new(slots, config.k_range);
        for r in start..end {
            run_replicate(config, &plan, r, &mut acc)?;
        }
        Ok(acc)
    };
    let partials: Vec<Partial> = match execution {
        Execution::Serial => chunks.iter().map(run_chunk).collect::<Result<_>>()?,
        Execution::Parallel => chunks.par_iter().map(run_chunk).collect::<Result<_>>()?,
    };
    let total = partials
        .iter()
        .fold(Partial::new(slots, config.k_range), |acc, p| acc.merge(p));

    let rows = plan
        .labels
        .iter()
        .zip(&total.moments)
        .map(|((estimator, k, theoretical, with_shape), m)| {
            let shape = if *with_shape { m.shape() } else { None };
            MCRow {
                estimator: estimator.clone(),
                k: *k,
                bias: m.mean(),
                mse_empirical: m.mean_square(),
                mse_theoretical: *theoretical,
                skewness: shape.map(|s| s.0),
                excess_kurtosis: shape.map(|s| s.1),
                replicates: m.count(),
            }
        })
        .collect();
    let aitken_degenerate = if config.estimators.contains(&EstimatorSpec::Aitken) {
        total
            .degenerate
            .iter()
            .take(config.k_range.saturating_sub(2))
            .enumerate()
            .map(|(i, c)| (i + 1, *c))
            .collect()
    } else {
        BTreeMap::new()
    };
    Ok(MCReport {
        config: config.clone(),
        rows,
        aitken_degenerate,
    })
}
