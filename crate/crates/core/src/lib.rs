//! Dynamic principal components (DPC) of multivariate time series.
//!
//! A DPC of order `k` is a factor series `f` of length `T + k` whose `k + 1`
//! leads reconstruct every observed series with minimal squared error:
//!
//! ```text
//! z[j, t] ≈ Σ_{i=0..k} beta[j, i] * f[t + i] + alpha[j]
//! ```
//!
//! The crate provides:
//!
//! - [`solver`]: the alternating least-squares fit of the MSE criterion.
//! - [`robust`]: S-estimator DPCs that minimise a sum of squared M-scales.
//! - [`k1`]: closed forms for the one-lag system, used as validation oracles.
//! - [`baselines`]: ordinary PCs with lagged reconstruction and the
//!   frequency-domain (Brillinger) dynamic PC.
//! - [`simulation`]: the Monte Carlo generators and study harness.
//!
//! Everything here is `no_std` with `alloc`. File formats, the CLI and the
//! parallel study runner live in the `dpc` crate.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod baselines;
mod error;
pub mod k1;
pub mod linalg;
pub mod metrics;
mod panel;
pub mod robust;
pub mod selection;
pub mod simulation;
pub mod solver;

pub use error::{Error, Result};
pub use metrics::{explained_variance, information_proportion, mse};
pub use panel::SeriesPanel;
pub use solver::{fit, fit_component, reconstruct, DpcComponent, DpcModel, Init, SolverConfig};
