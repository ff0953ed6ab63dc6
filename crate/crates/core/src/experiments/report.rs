use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{MCConfig, MCReport, MCRow};
use crate::error::{Error, Result};
use crate::io::{create, format_f64, read_json, sidecar_path, write_json};

pub const REPORT_HEADER: [&str; 8] = [
    "estimator",
    "k",
    "bias",
    "mse_empirical",
    "mse_theoretical",
    "skewness",
    "excess_kurtosis",
    "replicates",
];

#[derive(Serialize, Deserialize)]
struct Sidecar {
    config: MCConfig,
    replicates: u64,
    root_seed: u64,
    chunk_size: usize,
    aitken_degenerate: BTreeMap<usize, u64>,
}

fn opt(x: Option<f64>) -> String {
    x.map(format_f64).unwrap_or_default()
}

/// Writes the report CSV to `path` and the full configuration to `<path>.json`.
pub fn emit_report(report: &MCReport, path: &Path) -> Result<()> {
    let file = create(path)?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file);
    let wrap = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::format(path, format!("{other:?}")),
    };
    w.write_record(REPORT_HEADER).map_err(wrap)?;
    for r in &report.rows {
        w.write_record(&[
            r.estimator.clone(),
            r.k.to_string(),
            format_f64(r.bias),
            format_f64(r.mse_empirical),
            opt(r.mse_theoretical),
            opt(r.skewness),
            opt(r.excess_kurtosis),
            r.replicates.to_string(),
        ])
        .map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    write_json(
        &sidecar_path(path),
        &Sidecar {
            config: report.config.clone(),
            replicates: report.config.replicates,
            root_seed: report.config.root_seed,
            chunk_size: super::CHUNK,
            aitken_degenerate: report.aitken_degenerate.clone(),
        },
    )
}

/// Reads a report written by [`emit_report`].
pub fn read_report(path: &Path) -> Result<MCReport> {
    let sidecar: Sidecar = read_json(&sidecar_path(path))?;
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::format(path, e))?;
    let header = reader
        .headers()
        .map_err(|e| Error::format(path, e))?
        .clone();
    if header.iter().collect::<Vec<_>>() != REPORT_HEADER {
        return Err(Error::format(path, "unexpected report header"));
    }
    let rows = reader
        .deserialize::<MCRow>()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::format(path, e))?;
    Ok(MCReport {
        config: sidecar.config,
        rows,
        aitken_degenerate: sidecar.aitken_degenerate,
    })
}
