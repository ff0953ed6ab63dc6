//! Command-line front end.
//!
//! ```text
//! bspde simulate --model heat-1w --theta 1.0 --modes 1..5 --T 1 --seed 42 --out obs.csv
//! bspde estimate --model heat-1w --obs obs.csv --family exact --modes 1,2
//! bspde check    --model lambda-noise --theta 0.5 --delta 0.01 --C2 10 --kmax 100
//! bspde mc       --config mc.json --out report.csv
//! ```
//!
//! Exit status is 0 on success, 1 for usage and input errors, 2 for numerical
//! failures such as a missing exact combination.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::{
    aitken_estimate, exact_combination, exact_estimate, mle_single, weighted_average,
    EstimationResult, Family, WeightScheme,
};
use crate::experiments::{emit_report, run_monte_carlo, Execution, MCConfig};
use crate::io::{self, ModelSpec};
use crate::model::{check_parabolicity, Certificate, ParabolicityReport};
use crate::sim::{simulate_observations, NoiseRealization};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "bspde",
    version,
    about = "Simulate bilinear stochastic parabolic equations mode by mode and estimate the drift parameter"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate terminal log-ratios of selected modes and write an observation CSV.
    Simulate(SimulateArgs),
    /// Estimate theta from an observation CSV.
    Estimate(EstimateArgs),
    /// Check the eigenvalue parabolicity conditions on a finite range.
    Check(CheckArgs),
    /// Run a Monte Carlo study and write the report CSV.
    Mc(McArgs),
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Builtin model id or path to a JSON model spec.
    #[arg(long)]
    model: String,
    /// Builtin parameter override, e.g. `--param J=10`. Repeatable.
    #[arg(long = "param", value_name = "NAME=VALUE")]
    params: Vec<String>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, allow_hyphen_values = true)]
    theta: f64,
    /// Modes, e.g. `1..5` or `1,2,7`.
    #[arg(long)]
    modes: String,
    #[arg(long = "T")]
    horizon: f64,
    #[arg(long)]
    seed: u64,
    /// Initial value used for every mode.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    u0: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    obs: PathBuf,
    /// mle, weighted, aitken or exact.
    #[arg(long)]
    family: Family,
    /// Modes to use; defaults depend on the family.
    #[arg(long)]
    modes: Option<String>,
    /// Weight scheme for `weighted`: one, k, inv_k, pow:<p> or a comma list.
    #[arg(long, default_value = "k")]
    beta: String,
    /// Number of averaged modes for `weighted`.
    #[arg(long = "n")]
    n: Option<usize>,
    /// Output CSV; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Theta samples, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        required = true,
        allow_hyphen_values = true
    )]
    theta: Vec<f64>,
    #[arg(long)]
    delta: f64,
    #[arg(long = "C1", default_value_t = 1.0)]
    c1: f64,
    #[arg(long = "C2", allow_hyphen_values = true)]
    c2: f64,
    /// Largest mode checked.
    #[arg(long)]
    kmax: usize,
    /// Report `inconclusive` instead of `satisfied` when kmax is below the model's k_max.
    #[arg(long)]
    full_range: bool,
    /// Also write the report as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct McArgs {
    /// JSON config; defaults to the figure1 study.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long = "param", value_name = "NAME=VALUE")]
    params: Vec<String>,
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
    #[arg(long = "T")]
    horizon: Option<f64>,
    #[arg(long)]
    replicates: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "K")]
    k_range: Option<usize>,
    /// Run replicates on one thread.
    #[arg(long)]
    serial: bool,
    #[arg(long)]
    out: PathBuf,
}

/// Parses `a..b`, `a,b,c` and mixtures such as `1..3,7`.
pub fn parse_modes(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidInput(format!("bad mode list '{s}' (use a..b or a,b,c)"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim) {
        if let Some((a, b)) = part.split_once("..") {
            let a: usize = a.trim().parse().map_err(|_| bad())?;
            let b: usize = b.trim().parse().map_err(|_| bad())?;
            if a > b {
                return Err(bad());
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    Ok(out)
}

fn parse_params(raw: &[String]) -> Result<BTreeMap<String, f64>> {
    raw.iter()
        .map(|p| {
            let (name, value) = p.split_once('=').ok_or_else(|| {
                Error::InvalidInput(format!("bad --param '{p}' (use NAME=VALUE)"))
            })?;
            let value = value
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("bad --param value in '{p}'")))?;
            Ok((name.trim().to_string(), value))
        })
        .collect()
}

/// A builtin id or a path to a JSON spec, with `--param` overrides applied.
fn resolve_model(model: &str, params: &[String]) -> Result<ModelSpec> {
    let overrides = parse_params(params)?;
    let path = Path::new(model);
    let mut spec = if model.ends_with(".json") || path.is_file() {
        ModelSpec::load(path)?
    } else {
        ModelSpec::builtin(model)
    };
    if !overrides.is_empty() {
        match &mut spec {
            ModelSpec::Builtin { params, .. } => params.extend(overrides),
            ModelSpec::Custom { .. } => {
                return Err(Error::InvalidInput(
                    "--param only applies to builtin models".into(),
                ))
            }
        }
    }
    Ok(spec)
}

#[derive(Serialize)]
struct SimulateMeta<'a> {
    command: &'static str,
    model: &'a ModelSpec,
    theta_true: f64,
    #[serde(rename = "T")]
    horizon: f64,
    seed: u64,
    modes: &'a [usize],
    u0: f64,
    noise: &'a Option<NoiseRealization>,
}

fn simulate(args: &SimulateArgs, stdout: &mut dyn Write) -> Result<()> {
    let spec = resolve_model(&args.model.model, &args.model.params)?;
    let model = spec.build()?;
    let modes = parse_modes(&args.modes)?;
    let u0: BTreeMap<usize, f64> = modes.iter().map(|&k| (k, args.u0)).collect();
    let obs = simulate_observations(&model, &modes, args.theta, &u0, args.horizon, args.seed)?;
    io::write_observations(&args.out, &obs)?;
    io::write_json(
        &io::sidecar_path(&args.out),
        &SimulateMeta {
            command: "simulate",
            model: &spec,
            theta_true: args.theta,
            horizon: args.horizon,
            seed: args.seed,
            modes: &modes,
            u0: args.u0,
            noise: &obs.noise,
        },
    )?;
    writeln!(
        stdout,
        "wrote {} modes to {}",
        obs.modes.len(),
        args.out.display()
    )
    .map_err(|e| Error::io("<stdout>", e))
}

#[derive(Serialize)]
struct EstimateMeta<'a> {
    command: &'static str,
    model: &'a ModelSpec,
    obs: &'a Path,
    family: Family,
    modes: &'a [usize],
    beta: Option<&'a str>,
}

fn estimate(args: &EstimateArgs, stdout: &mut dyn Write) -> Result<()> {
    let spec = resolve_model(&args.model.model, &args.model.params)?;
    let model = spec.build()?;
    let obs = io::read_observations(&args.obs)?;
    let requested = args.modes.as_deref().map(parse_modes).transpose()?;
    let observed = {
        let mut m = obs.mode_indices();
        m.sort_unstable();
        m
    };

    let (modes, results): (Vec<usize>, Vec<EstimationResult>) = match args.family {
        Family::Mle => {
            let modes = requested.unwrap_or(observed);
            let results = modes
                .iter()
                .map(|&k| mle_single(&model, k, &obs))
                .collect::<Result<_>>()?;
            (modes, results)
        }
        Family::Weighted => {
            let n = match (args.n, &requested) {
                (Some(n), _) => n,
                (None, Some(list)) => {
                    let n = list.len();
                    if *list != (1..=n).collect::<Vec<_>>() {
                        return Err(Error::InvalidInput(
                            "weighted averaging uses modes 1..N; pass --modes 1..N or --n N".into(),
                        ));
                    }
                    n
                }
                (None, None) => observed.len(),
            };
            let scheme = WeightScheme::parse(&args.beta)?;
            let result = weighted_average(&model, &obs, &scheme, n)?;
            ((1..=n).collect(), vec![result])
        }
        Family::Aitken => {
            let modes = requested.unwrap_or_else(|| {
                observed
                    .iter()
                    .copied()
                    .filter(|k| observed.contains(&(k + 2)) && observed.contains(&(k + 1)))
                    .collect()
            });
            let results = modes
                .iter()
                .map(|&k| aitken_estimate(&model, k, &obs))
                .collect::<Result<_>>()?;
            (modes, results)
        }
        Family::Exact => {
            let modes = match requested {
                Some(m) => m,
                None => {
                    let needed = model.noise_dimension()? + 1;
                    observed.iter().copied().take(needed).collect()
                }
            };
            let combo = exact_combination(&model, &modes)?;
            let result = exact_estimate(&model, &combo, &obs)?;
            (modes, vec![result])
        }
    };

    match &args.out {
        Some(path) => {
            io::write_estimates(path, &results)?;
            io::write_json(
                &io::sidecar_path(path),
                &EstimateMeta {
                    command: "estimate",
                    model: &spec,
                    obs: &args.obs,
                    family: args.family,
                    modes: &modes,
                    beta: (args.family == Family::Weighted).then_some(args.beta.as_str()),
                },
            )?;
        }
        None => {
            io::write_estimates_to(&mut *stdout, &results)
                .map_err(|e| Error::format("<stdout>", e))?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct CheckOutput<'a> {
    model: &'a ModelSpec,
    report: &'a ParabolicityReport,
}

fn check(args: &CheckArgs, stdout: &mut dyn Write) -> Result<()> {
    let mut spec = resolve_model(&args.model.model, &args.model.params)?;
    if let ModelSpec::Builtin { params, .. } = &mut spec {
        params.entry("k_max".into()).or_insert(args.kmax as f64);
    }
    let model = spec.build()?;
    let constants = Certificate {
        delta: args.delta,
        c1: args.c1,
        c2: args.c2,
    };
    let report = check_parabolicity(&model, constants, &args.theta, args.kmax, args.full_range)?;
    let output = CheckOutput {
        model: &spec,
        report: &report,
    };
    let text = serde_json::to_string_pretty(&output).map_err(|e| Error::format("<report>", e))?;
    writeln!(stdout, "{text}").map_err(|e| Error::io("<stdout>", e))?;
    if let Some(path) = &args.out {
        io::write_json(path, &output)?;
    }
    Ok(())
}

fn mc(args: &McArgs, stdout: &mut dyn Write) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => io::read_json::<MCConfig>(path)?,
        None => MCConfig::figure1(0),
    };
    if let Some(model) = &args.model {
        config.model = resolve_model(model, &args.params)?;
    } else if !args.params.is_empty() {
        let overrides = parse_params(&args.params)?;
        match &mut config.model {
            ModelSpec::Builtin { params, .. } => params.extend(overrides),
            ModelSpec::Custom { .. } => {
                return Err(Error::InvalidInput(
                    "--param only applies to builtin models".into(),
                ))
            }
        }
    }
    if let Some(t) = args.theta {
        config.theta0 = t;
    }
    if let Some(t) = args.horizon {
        config.horizon = t;
    }
    if let Some(r) = args.replicates {
        config.replicates = r;
    }
    if let Some(s) = args.seed {
        config.root_seed = s;
    }
    if let Some(k) = args.k_range {
        config.k_range = k;
    }
    let execution = if args.serial {
        Execution::Serial
    } else {
        Execution::Parallel
    };
    let report = run_monte_carlo(&config, execution)?;
    emit_report(&report, &args.out)?;
    writeln!(
        stdout,
        "wrote {} rows ({} replicates, root seed {}) to {}",
        report.rows.len(),
        config.replicates,
        config.root_seed,
        args.out.display()
    )
    .map_err(|e| Error::io("<stdout>", e))
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let rendered = e.render().to_string();
            let _ = if code == EXIT_OK {
                write!(stdout, "{rendered}")
            } else {
                write!(stderr, "{rendered}")
            };
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::Simulate(a) => simulate(a, stdout),
        Command::Estimate(a) => estimate(a, stdout),
        Command::Check(a) => check(a, stdout),
        Command::Mc(a) => mc(a, stdout),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_USAGE
            }
        }
    }
}
