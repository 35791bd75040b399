//! Initial-condition-robust inference for the coefficient of an AR(1) model
//! with conditionally heteroskedastic errors.
//!
//! The t-statistic is built from a least squares fit that partials out
//! `(1, rho^{i-1})` at each hypothesized `rho`, which removes the level and
//! the initial condition exactly under the null. Inverting it against the
//! quantiles of its local-to-unity limit gives confidence intervals whose
//! finite-sample coverage does not depend on the initial condition, and a
//! median-unbiased interval estimator.
//!
//! * [`tssim`] simulates AR(1) data under GARCH/ARCH innovations.
//! * [`design`] and [`estimator`] compute `T_n(rho)`.
//! * [`asymdist`] simulates the limit law and serves critical values.
//! * [`inference`] inverts the statistic into intervals.
//! * [`mc`] runs coverage studies.

pub mod asymdist;
pub mod cli;
pub mod config;
pub mod design;
pub mod error;
pub mod estimator;
pub mod inference;
pub mod mc;
pub mod rng;
pub mod tssim;

pub use asymdist::{PathGridConfig, QuantileTable};
pub use error::{IcrError, Result};
pub use estimator::{icr_estimate, TStatResult};
pub use inference::{invert_ci, mue, IntervalResult, MueResult};
pub use tssim::{InitialCondition, InitialConditionSpec, InnovationSpec, ModelParams, TimeSeries};
