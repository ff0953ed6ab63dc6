use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown builtin model '{0}'")]
    UnknownBuiltin(String),

    #[error("invalid parameter '{name}': {reason}")]
    InvalidParam { name: String, reason: String },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("mode {k} out of range 1..={k_max}")]
    ModeOutOfRange { k: usize, k_max: usize },

    #[error("no explicit noise loadings: model only declares closed-form M_k")]
    NoExplicitLoadings,

    #[error("noise dimension mismatch: model has {expected} drivers, realization has {found}")]
    NoiseDimension { expected: usize, found: usize },

    #[error("mode {0} not in observations")]
    MissingMode(usize),

    #[error("duplicate mode {0}")]
    DuplicateMode(usize),

    #[error("initial value of mode {0} is zero")]
    ZeroInitialValue(usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("total weight over modes 1..={0} is zero")]
    ZeroWeight(usize),

    #[error("loadings of modes {k} and {n} do not cancel under (1, -1); use a general exact combination")]
    LoadingsDoNotCancel { k: usize, n: usize },

    #[error(
        "no noise-annihilating combination with nonzero denominator among modes {0:?}; add modes"
    )]
    NoExactCombination(Vec<usize>),

    #[error("exact combination was built for a different model")]
    StaleCombination,

    #[error("degenerate second difference at index {0}")]
    DegenerateDenominator(usize),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoExactCombination(_)
                | Error::DegenerateDenominator(_)
                | Error::DegenerateSample(_)
        )
    }

    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name: name.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Format {
            path: path.into(),
            message: message.to_string(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
