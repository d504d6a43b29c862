//! Goodness-of-fit testing in the Gaussian sequence model when the operator's
//! singular values are only observed with noise.
//!
//! Model: `Y_j = b_j θ_j + ε ξ_j`, `X_j = b_j + σ η_j`, `j >= 1`, with
//! `θ − θ₀` in the ellipsoid `Σ a_j² θ_j² <= 1`.
//!
//! * [`sequences`]: the `b` and `a` sequences of the four regimes.
//! * [`gsm`]: simulation and test-signal construction.
//! * [`testproc`]: the spectral cut-off test.
//! * [`bounds`]: separation-radius bounds and rate formulas.
//! * [`montecarlo`]: error-probability estimation.
//! * [`cli`]: the `gsm-gof` command line.

pub mod bounds;
pub mod cli;
pub mod error;
pub mod gsm;
pub mod montecarlo;
pub mod sequences;
pub mod stats;
pub mod testproc;

pub use error::{Error, Result};
pub use gsm::{NoiseLevels, Observations, Signal, StreamKey};
pub use sequences::{IllPosedness, RegimeKind, RegimeSpec, Smoothness};
pub use testproc::{DimensionPolicy, TestConfig, TestReport};
