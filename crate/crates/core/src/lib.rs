//! Local Whittle estimation for bivariate stationary long-memory systems.
//!
//! The library estimates the four parameters of a possibly cointegrated pair
//! of long-memory series: the cointegrating coefficient `beta`, the phase at
//! frequency zero `gamma`, and the two memory parameters `delta1` (of the
//! cointegrating error) and `delta2` (of the observables). Estimation is
//! semiparametric: only the first `m` Fourier frequencies enter the
//! objective.
//!
//! Main entry points:
//! - [`simulate`]: fractional ARMA and bilateral power-law MA generators.
//! - [`spectra::periodogram`]: periodogram matrices on the Fourier grid.
//! - [`whittle::estimate`]: the profiled grid search plus Newton refinement.
//! - [`inference`]: asymptotic covariance, Wald tests, misspecification
//!   diagnostics and sample-mean inference.
//! - [`baselines`]: narrow-band least squares, the simple phase estimate and
//!   univariate local Whittle.
//! - [`mc`]: a reproducible Monte Carlo replication harness.

pub mod baselines;
pub mod cli;
pub mod error;
pub mod inference;
pub mod io;
pub(crate) mod linalg;
pub mod mc;
pub mod model;
pub mod simulate;
pub mod spectra;
pub mod whittle;

pub use error::{Error, Result};
