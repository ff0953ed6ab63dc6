//! Spectral description of a diagonalizable bilinear stochastic parabolic
//! equation.
//!
//! Every operator of the equation acts diagonally on a common eigenbasis
//! `h_k`, so the equation is fully described by four eigenvalue sequences:
//!
//! * `rho_k`: eigenvalues of the `theta`-free drift operator,
//! * `nu_k`: eigenvalues of the operator multiplying `theta`,
//! * `mu_jk`: eigenvalues of the noise operator attached to driver `W_j`,
//! * `lambda_k`: eigenvalues of the scale operator defining the Hilbert scale.
//!
//! Mode `k` then solves the scalar linear SDE
//!
//! ```text
//! du_k = -(rho_k + theta * nu_k) u_k dt + u_k * sum_j mu_jk dW_j.
//! ```
//!
//! Sequences are stored densely for `k = 1..=k_max`. Noise loadings are either
//! an explicit `J x k_max` table (required for simulation) or a closed form
//! for `M_k = sum_j mu_jk^2` (sufficient for the single-mode estimators).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Open interval of admissible parameter values. Infinite ends are allowed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaDomain {
    pub lo: f64,
    pub hi: f64,
}

impl ThetaDomain {
    pub const REAL_LINE: ThetaDomain = ThetaDomain {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };
    pub const POSITIVE: ThetaDomain = ThetaDomain {
        lo: 0.0,
        hi: f64::INFINITY,
    };

    pub fn contains(&self, theta: f64) -> bool {
        theta > self.lo && theta < self.hi
    }
}

/// Noise loadings of a model.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseLoadings {
    /// Row-major `J x k_max` table: entry `(j, k)` lives at `j * k_max + (k - 1)`.
    Explicit { drivers: usize, table: Vec<f64> },
    /// Only `M_k` is known, indexed from `k = 1`.
    ClosedForm(Vec<f64>),
}

/// Immutable eigenvalue description of the equation.
#[derive(Debug, Clone)]
pub struct SpectralModel {
    name: String,
    rho: Vec<f64>,
    nu: Vec<f64>,
    lambda: Vec<f64>,
    noise: NoiseLoadings,
    total_loading: Vec<f64>,
    order_m: f64,
    theta_domain: ThetaDomain,
    fingerprint: u64,
}

/// Derived per-mode coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeCoefficients {
    pub k: usize,
    pub rho_k: f64,
    pub nu_k: f64,
    /// `mu_jk` for `j = 1..=J`; empty when the model only has a closed-form `M_k`.
    pub mu_row: Vec<f64>,
    /// Total squared noise loading `M_k`.
    pub m_k: f64,
    /// Normalized noise intensity `M_k / nu_k^2`.
    pub eta_k: f64,
}

impl SpectralModel {
    /// Validates the sequences and assembles a model.
    ///
    /// `rho`, `nu` and `lambda` are indexed from `k = 1`; they must all have the
    /// same length, which becomes `k_max`.
    pub fn new(
        name: impl Into<String>,
        rho: Vec<f64>,
        nu: Vec<f64>,
        lambda: Vec<f64>,
        noise: NoiseLoadings,
        order_m: f64,
        theta_domain: ThetaDomain,
    ) -> Result<Self> {
        let k_max = nu.len();
        if k_max == 0 {
            return Err(Error::InvalidModel("k_max must be at least 1".into()));
        }
        if rho.len() != k_max || lambda.len() != k_max {
            return Err(Error::InvalidModel(format!(
                "sequence lengths differ: rho {}, nu {}, lambda {}",
                rho.len(),
                k_max,
                lambda.len()
            )));
        }
        if !(order_m > 0.0 && order_m.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "order m must be positive, got {order_m}"
            )));
        }
        if theta_domain.lo.is_nan()
            || theta_domain.hi.is_nan()
            || theta_domain.lo >= theta_domain.hi
        {
            return Err(Error::InvalidModel(format!(
                "theta domain ({}, {}) is empty",
                theta_domain.lo, theta_domain.hi
            )));
        }
        for k in 1..=k_max {
            let (r, n, l) = (rho[k - 1], nu[k - 1], lambda[k - 1]);
            if !r.is_finite() || !n.is_finite() || !l.is_finite() {
                return Err(Error::InvalidModel(format!(
                    "non-finite eigenvalue at k={k}"
                )));
            }
            if n == 0.0 {
                return Err(Error::InvalidModel(format!("nu_k = 0 at k={k}")));
            }
            if l <= 0.0 {
                return Err(Error::InvalidModel(format!(
                    "lambda_k must be positive at k={k}"
                )));
            }
        }

        let total_loading = match &noise {
            NoiseLoadings::Explicit { drivers, table } => {
                if *drivers == 0 {
                    return Err(Error::InvalidModel("explicit loadings need J >= 1".into()));
                }
                if table.len() != drivers * k_max {
                    return Err(Error::InvalidModel(format!(
                        "loading table has {} entries, expected {} x {}",
                        table.len(),
                        drivers,
                        k_max
                    )));
                }
                if table.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidModel("non-finite noise loading".into()));
                }
                (0..k_max)
                    .map(|i| (0..*drivers).map(|j| table[j * k_max + i].powi(2)).sum())
                    .collect()
            }
            NoiseLoadings::ClosedForm(m) => {
                if m.len() != k_max {
                    return Err(Error::InvalidModel(format!(
                        "closed-form M has {} entries, expected {}",
                        m.len(),
                        k_max
                    )));
                }
                if m.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::InvalidModel(
                        "M_k must be finite and nonnegative".into(),
                    ));
                }
                m.clone()
            }
        };

        let mut model = SpectralModel {
            name: name.into(),
            rho,
            nu,
            lambda,
            noise,
            total_loading,
            order_m,
            theta_domain,
            fingerprint: 0,
        };
        model.fingerprint = model.compute_fingerprint();
        Ok(model)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn k_max(&self) -> usize {
        self.nu.len()
    }

    pub fn order_m(&self) -> f64 {
        self.order_m
    }

    pub fn theta_domain(&self) -> ThetaDomain {
        self.theta_domain
    }

    pub fn noise(&self) -> &NoiseLoadings {
        &self.noise
    }

    /// Content hash of every sequence; used to detect combinations built for another model.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn has_explicit_loadings(&self) -> bool {
        matches!(self.noise, NoiseLoadings::Explicit { .. })
    }

    pub fn check_mode(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.k_max() {
            Err(Error::ModeOutOfRange {
                k,
                k_max: self.k_max(),
            })
        } else {
            Ok(())
        }
    }

    // The accessors below assume the index was validated with `check_mode`.

    pub fn rho(&self, k: usize) -> f64 {
        self.rho[k - 1]
    }

    pub fn nu(&self, k: usize) -> f64 {
        self.nu[k - 1]
    }

    pub fn lambda(&self, k: usize) -> f64 {
        self.lambda[k - 1]
    }

    /// `M_k`.
    pub fn total_loading(&self, k: usize) -> f64 {
        self.total_loading[k - 1]
    }

    /// `eta_k = M_k / nu_k^2`.
    pub fn eta(&self, k: usize) -> f64 {
        self.total_loading(k) / self.nu(k).powi(2)
    }

    /// `mu_jk` with `j` counted from 1. Returns `None` for closed-form models.
    pub fn mu(&self, j: usize, k: usize) -> Option<f64> {
        match &self.noise {
            NoiseLoadings::Explicit { drivers, table } if (1..=*drivers).contains(&j) => {
                Some(table[(j - 1) * self.k_max() + (k - 1)])
            }
            _ => None,
        }
    }

    /// Column `(mu_1k, ..., mu_Jk)` of the loading table.
    pub fn mu_row(&self, k: usize) -> Result<Vec<f64>> {
        match &self.noise {
            NoiseLoadings::Explicit { drivers, table } => Ok((0..*drivers)
                .map(|j| table[j * self.k_max() + (k - 1)])
                .collect()),
            NoiseLoadings::ClosedForm(_) => Err(Error::NoExplicitLoadings),
        }
    }

    /// Number `J` of Wiener drivers.
    pub fn noise_dimension(&self) -> Result<usize> {
        match &self.noise {
            NoiseLoadings::Explicit { drivers, .. } => Ok(*drivers),
            NoiseLoadings::ClosedForm(_) => Err(Error::NoExplicitLoadings),
        }
    }

    pub fn mode_coefficients(&self, k: usize) -> Result<ModeCoefficients> {
        self.check_mode(k)?;
        let mu_row = self.mu_row(k).unwrap_or_default();
        Ok(ModeCoefficients {
            k,
            rho_k: self.rho(k),
            nu_k: self.nu(k),
            mu_row,
            m_k: self.total_loading(k),
            eta_k: self.eta(k),
        })
    }

    fn compute_fingerprint(&self) -> u64 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut h = OFFSET;
        let mut feed = |x: u64| {
            for b in x.to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(PRIME);
            }
        };
        feed(self.k_max() as u64);
        for seq in [&self.rho, &self.nu, &self.lambda, &self.total_loading] {
            seq.iter().for_each(|v| feed(v.to_bits()));
        }
        if let NoiseLoadings::Explicit { drivers, table } = &self.noise {
            feed(*drivers as u64);
            table.iter().for_each(|v| feed(v.to_bits()));
        }
        feed(self.order_m.to_bits());
        h
    }
}

// ---------------------------------------------------------------------------
// Builtin models
// ---------------------------------------------------------------------------

/// Identifiers accepted by [`build_builtin`].
pub const BUILTIN_IDS: [&str; 5] = [
    "heat-1w",
    "heat-shift",
    "figure1",
    "smoothing-noise",
    "lambda-noise",
];

const DEFAULT_K_MAX: usize = 1000;

struct Params<'a> {
    values: &'a BTreeMap<String, f64>,
    allowed: &'static [&'static str],
}

impl Params<'_> {
    fn check_known(&self) -> Result<()> {
        match self
            .values
            .keys()
            .find(|k| !self.allowed.contains(&k.as_str()))
        {
            Some(key) => Err(Error::param(
                key,
                format!("not accepted here (expected one of {:?})", self.allowed),
            )),
            None => Ok(()),
        }
    }

    fn count(&self, name: &str, default: Option<usize>) -> Result<Option<usize>> {
        match self.values.get(name) {
            None => Ok(default),
            Some(&v) => {
                if v >= 1.0 && v.fract() == 0.0 && v <= 1e9 {
                    Ok(Some(v as usize))
                } else {
                    Err(Error::param(
                        name,
                        format!("must be a positive integer, got {v}"),
                    ))
                }
            }
        }
    }

    fn positive(&self, name: &str, default: f64) -> Result<f64> {
        match self.values.get(name) {
            None => Ok(default),
            Some(&v) if v > 0.0 && v.is_finite() => Ok(v),
            Some(&v) => Err(Error::param(name, format!("must be positive, got {v}"))),
        }
    }
}

/// Dirichlet Laplacian eigenvalue magnitude: exact `k^2` on `(0, pi)` for
/// `d = 1`, Weyl surrogate `c k^(2/d)` otherwise.
fn laplacian_surrogate(k: usize, d: usize, c: f64) -> f64 {
    let k = k as f64;
    if d == 1 {
        k * k
    } else {
        c * k.powf(2.0 / d as f64)
    }
}

fn sequence(k_max: usize, f: impl Fn(usize) -> f64) -> Vec<f64> {
    (1..=k_max).map(f).collect()
}

fn explicit(drivers: usize, k_max: usize, f: impl Fn(usize, usize) -> f64) -> NoiseLoadings {
    let mut table = Vec::with_capacity(drivers * k_max);
    for j in 1..=drivers {
        table.extend((1..=k_max).map(|k| f(j, k)));
    }
    NoiseLoadings::Explicit { drivers, table }
}

/// Builds one of the named example models.
///
/// | id | equation | params |
/// |----|----------|--------|
/// | `heat-1w` | `du - theta u_xx dt = u dW` on `(0, pi)` | `k_max` |
/// | `heat-shift` | `du - theta u_xx dt = (u/2) dt + u dW` | `k_max` |
/// | `figure1` | `nu_k = k`, `rho_k = 0`, `mu_jk = (-1)^k/(k+j)` | `J`, `k_max` |
/// | `smoothing-noise` | `du - (Lap u + theta u) dt = sum_j (1-Lap)^(-j/2) u dW_j` | `d`, `c`, `k_max`, optional `J` |
/// | `lambda-noise` | `du - theta Lap u dt = sqrt(1-Lap) u dW` | `d`, `c`, `k_max` |
pub fn build_builtin(name: &str, params: &BTreeMap<String, f64>) -> Result<SpectralModel> {
    let p = |allowed| Params {
        values: params,
        allowed,
    };
    match name {
        "heat-1w" | "heat-shift" => {
            let p = p(&["k_max"]);
            p.check_known()?;
            let k_max = p
                .count("k_max", Some(DEFAULT_K_MAX))?
                .unwrap_or(DEFAULT_K_MAX);
            // The (u/2) dt forcing of heat-shift enters the drift as rho_k = -1/2.
            let shift = if name == "heat-shift" { -0.5 } else { 0.0 };
            SpectralModel::new(
                name,
                vec![shift; k_max],
                sequence(k_max, |k| (k * k) as f64),
                sequence(k_max, |k| (1.0 + (k * k) as f64).sqrt()),
                explicit(1, k_max, |_, _| 1.0),
                1.0,
                ThetaDomain::POSITIVE,
            )
        }
        "figure1" => {
            let p = p(&["J", "k_max"]);
            p.check_known()?;
            let drivers = p.count("J", Some(10))?.unwrap_or(10);
            let k_max = p
                .count("k_max", Some(DEFAULT_K_MAX))?
                .unwrap_or(DEFAULT_K_MAX);
            SpectralModel::new(
                name,
                vec![0.0; k_max],
                sequence(k_max, |k| k as f64),
                sequence(k_max, |k| (1.0 + k as f64).sqrt()),
                explicit(drivers, k_max, |j, k| {
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    sign / (k + j) as f64
                }),
                1.0,
                ThetaDomain::POSITIVE,
            )
        }
        "smoothing-noise" => {
            let p = p(&["d", "c", "k_max", "J"]);
            p.check_known()?;
            let d = p.count("d", Some(1))?.unwrap_or(1);
            let c = p.positive("c", 1.0)?;
            let k_max = p
                .count("k_max", Some(DEFAULT_K_MAX))?
                .unwrap_or(DEFAULT_K_MAX);
            let rho = sequence(k_max, |k| laplacian_surrogate(k, d, c));
            // Loadings mu_jk = (1 + rho_k)^(-j/2), so that M_k sums to 1/rho_k.
            let noise = match p.count("J", None)? {
                Some(drivers) => explicit(drivers, k_max, |j, k| {
                    (1.0 + rho[k - 1]).powf(-(j as f64) / 2.0)
                }),
                None => NoiseLoadings::ClosedForm(rho.iter().map(|r| 1.0 / r).collect()),
            };
            let lambda = rho.iter().map(|r| (1.0 + r).sqrt()).collect();
            // du_k = (-rho_k + theta) u_k dt + ..., i.e. nu_k = -1 under the drift convention.
            SpectralModel::new(
                name,
                rho,
                vec![-1.0; k_max],
                lambda,
                noise,
                1.0,
                ThetaDomain::REAL_LINE,
            )
        }
        "lambda-noise" => {
            let p = p(&["d", "c", "k_max"]);
            p.check_known()?;
            let d = p.count("d", Some(1))?.unwrap_or(1);
            let c = p.positive("c", 1.0)?;
            let k_max = p
                .count("k_max", Some(DEFAULT_K_MAX))?
                .unwrap_or(DEFAULT_K_MAX);
            let nu = sequence(k_max, |k| laplacian_surrogate(k, d, c));
            let lambda: Vec<f64> = nu.iter().map(|s| (1.0 + s).sqrt()).collect();
            let noise = explicit(1, k_max, |_, k| lambda[k - 1]);
            SpectralModel::new(
                name,
                vec![0.0; k_max],
                nu,
                lambda,
                noise,
                1.0,
                ThetaDomain::POSITIVE,
            )
        }
        other => Err(Error::UnknownBuiltin(other.to_string())),
    }
}

// ---------------------------------------------------------------------------
// Parabolicity certificate
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Satisfied,
    Violated,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    /// `lambda_k^(-2m) |rho_k + theta nu_k| <= C1`
    Eig1,
    /// `-2(rho_k + theta nu_k) + M_k + delta lambda_k^(2m) <= C2`
    Eig2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub delta: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub k: usize,
    pub theta: f64,
    pub condition: Condition,
    pub lhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParabolicityReport {
    pub verdict: Verdict,
    pub constants: Certificate,
    pub checked_thetas: Vec<f64>,
    pub k_range: usize,
    pub first_violation: Option<Violation>,
}

/// Left-hand sides of both eigenvalue conditions at `(k, theta)`.
pub fn parabolicity_lhs(model: &SpectralModel, k: usize, theta: f64, delta: f64) -> (f64, f64) {
    let drift = model.rho(k) + theta * model.nu(k);
    let scale = model.lambda(k).powf(2.0 * model.order_m());
    let eig1 = (drift / scale).abs();
    let eig2 = -2.0 * drift + model.total_loading(k) + delta * scale;
    (eig1, eig2)
}

/// Checks both eigenvalue conditions on every `(k, theta)` with `k <= k_range`.
///
/// This certifies the finite range only. When `require_full_range` is set and
/// `k_range < k_max`, a clean pass is reported as `Inconclusive`.
pub fn check_parabolicity(
    model: &SpectralModel,
    constants: Certificate,
    thetas: &[f64],
    k_range: usize,
    require_full_range: bool,
) -> Result<ParabolicityReport> {
    if thetas.is_empty() {
        return Err(Error::InvalidInput("no theta samples to check".into()));
    }
    if let Some(t) = thetas.iter().find(|t| !model.theta_domain().contains(**t)) {
        return Err(Error::InvalidInput(format!(
            "theta sample {t} outside the parameter domain ({}, {})",
            model.theta_domain().lo,
            model.theta_domain().hi
        )));
    }
    if !(constants.delta > 0.0 && constants.c1 > 0.0 && constants.c2.is_finite()) {
        return Err(Error::InvalidInput(
            "delta and C1 must be positive and C2 finite".into(),
        ));
    }
    if k_range == 0 {
        return Err(Error::InvalidInput("k range must be at least 1".into()));
    }
    model.check_mode(k_range)?;

    let mut first_violation = None;
    'modes: for k in 1..=k_range {
        for &theta in thetas {
            let (eig1, eig2) = parabolicity_lhs(model, k, theta, constants.delta);
            let failed = if eig1 > constants.c1 {
                Some((Condition::Eig1, eig1))
            } else if eig2 > constants.c2 {
                Some((Condition::Eig2, eig2))
            } else {
                None
            };
            if let Some((condition, lhs)) = failed {
                first_violation = Some(Violation {
                    k,
                    theta,
                    condition,
                    lhs,
                });
                break 'modes;
            }
        }
    }

    let verdict = match first_violation {
        Some(_) => Verdict::Violated,
        None if require_full_range && k_range < model.k_max() => Verdict::Inconclusive,
        None => Verdict::Satisfied,
    };
    Ok(ParabolicityReport {
        verdict,
        constants,
        checked_thetas: thetas.to_vec(),
        k_range,
        first_violation,
    })
}
