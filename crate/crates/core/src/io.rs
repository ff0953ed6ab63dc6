//! File formats: JSON model specs, observation CSV, estimate CSV and JSON
//! sidecars carrying provenance.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{EstimationResult, Family};
use crate::model::{build_builtin, NoiseLoadings, SpectralModel, ThetaDomain};
use crate::sim::{ModeObservation, ObservationSet};

/// Model specification as stored in JSON.
///
/// ```json
/// {"builtin": "figure1", "params": {"J": 10, "k_max": 50}}
/// {"custom": {"rho": [0, 0], "nu": [1, 4], "mu": [[1, 1]], "lambda": [1.4, 2.2],
///             "m": 1, "theta_domain": [0, null]}}
/// ```
///
/// Arrays are indexed from `k = 1`; `mu` is a list of driver rows. A custom
/// model may give `"M"` (closed-form total loadings) instead of `"mu"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSpec {
    Builtin {
        builtin: String,
        #[serde(default)]
        params: BTreeMap<String, f64>,
    },
    Custom {
        custom: CustomModel,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomModel {
    pub rho: Vec<f64>,
    pub nu: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<Vec<f64>>>,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub closed_form_m: Option<Vec<f64>>,
    pub lambda: Vec<f64>,
    pub m: f64,
    /// Open interval; `null` marks an infinite end.
    #[serde(default = "unbounded")]
    pub theta_domain: [Option<f64>; 2],
}

fn unbounded() -> [Option<f64>; 2] {
    [None, None]
}

impl ModelSpec {
    pub fn builtin(name: &str) -> Self {
        ModelSpec::Builtin {
            builtin: name.to_string(),
            params: BTreeMap::new(),
        }
    }

    pub fn build(&self) -> Result<SpectralModel> {
        match self {
            ModelSpec::Builtin { builtin, params } => build_builtin(builtin, params),
            ModelSpec::Custom { custom } => custom.build(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::format(path, e))
    }
}

impl CustomModel {
    pub fn build(&self) -> Result<SpectralModel> {
        let k_max = self.nu.len();
        let noise = match (&self.mu, &self.closed_form_m) {
            (Some(rows), None) => {
                if rows.iter().any(|r| r.len() != k_max) {
                    return Err(Error::InvalidModel(format!(
                        "every mu row must have {k_max} entries"
                    )));
                }
                NoiseLoadings::Explicit {
                    drivers: rows.len(),
                    table: rows.concat(),
                }
            }
            (None, Some(m)) => NoiseLoadings::ClosedForm(m.clone()),
            (Some(_), Some(_)) => {
                return Err(Error::InvalidModel("give either mu or M, not both".into()))
            }
            (None, None) => return Err(Error::InvalidModel("custom model needs mu or M".into())),
        };
        let domain = ThetaDomain {
            lo: self.theta_domain[0].unwrap_or(f64::NEG_INFINITY),
            hi: self.theta_domain[1].unwrap_or(f64::INFINITY),
        };
        SpectralModel::new(
            "custom",
            self.rho.clone(),
            self.nu.clone(),
            self.lambda.clone(),
            noise,
            self.m,
            domain,
        )
    }
}

/// `<path>.json`
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::format(path, e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e))
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::format(path, format!("{other:?}")),
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ObservationRow {
    k: usize,
    u0: f64,
    v: f64,
    #[serde(rename = "T")]
    horizon: f64,
}

/// Writes `k,u0,v,T` rows.
pub fn write_observations_to<W: Write>(writer: W, obs: &ObservationSet) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    for m in &obs.modes {
        w.serialize(ObservationRow {
            k: m.k,
            u0: m.u0,
            v: m.v,
            horizon: obs.horizon,
        })?;
    }
    if obs.modes.is_empty() {
        w.write_record(["k", "u0", "v", "T"])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_observations(path: &Path, obs: &ObservationSet) -> Result<()> {
    let file = create(path)?;
    write_observations_to(file, obs).map_err(|e| csv_error(path, e))
}

/// Reads an observation CSV. Every row must carry the same `T`.
pub fn read_observations(path: &Path) -> Result<ObservationSet> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["k", "u0", "v", "T"] {
        return Err(Error::format(path, "expected header k,u0,v,T"));
    }
    let mut horizon = None;
    let mut modes = Vec::new();
    for row in reader.deserialize::<ObservationRow>() {
        let row = row.map_err(|e| csv_error(path, e))?;
        match horizon {
            None => horizon = Some(row.horizon),
            Some(t) if t != row.horizon => {
                return Err(Error::format(path, "rows disagree on the horizon T"))
            }
            Some(_) => {}
        }
        modes.push(ModeObservation {
            k: row.k,
            u0: row.u0,
            v: row.v,
        });
    }
    let horizon = horizon.ok_or_else(|| Error::format(path, "no observations"))?;
    ObservationSet::new(horizon, modes).map_err(|e| Error::format(path, e))
}

#[derive(Debug, Serialize, Deserialize)]
struct EstimateRow {
    family: Family,
    theta_hat: f64,
    modes: String,
    theoretical_mse: Option<f64>,
}

/// Writes `family,theta_hat,modes,theoretical_mse` rows; modes are `;`-separated.
pub fn write_estimates_to<W: Write>(writer: W, results: &[EstimationResult]) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    w.write_record(["family", "theta_hat", "modes", "theoretical_mse"])?;
    for r in results {
        let modes = r
            .modes_used
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(";");
        w.write_record(&[
            r.family.to_string(),
            format_f64(r.theta_hat),
            modes,
            r.theoretical_mse.map(format_f64).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_estimates(path: &Path, results: &[EstimationResult]) -> Result<()> {
    let file = create(path)?;
    write_estimates_to(file, results).map_err(|e| csv_error(path, e))
}

pub fn read_estimates(path: &Path) -> Result<Vec<EstimationResult>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    reader
        .deserialize::<EstimateRow>()
        .map(|row| {
            let row = row.map_err(|e| csv_error(path, e))?;
            let modes_used = row
                .modes
                .split(';')
                .map(|s| s.parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::format(path, e))?;
            Ok(EstimationResult {
                theta_hat: row.theta_hat,
                family: row.family,
                modes_used,
                theoretical_mse: row.theoretical_mse,
                degenerate: false,
            })
        })
        .collect()
}

/// Shortest representation that parses back to the same `f64`.
pub fn format_f64(x: f64) -> String {
    format!("{x:?}")
}
