//! Simulation and drift-parameter estimation for diagonalizable bilinear
//! stochastic parabolic equations, worked entirely in Fourier-mode space.

pub mod cli;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod io;
pub mod linalg;
pub mod model;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
pub use model::{build_builtin, SpectralModel};
pub use sim::{NoiseRealization, ObservationSet};
