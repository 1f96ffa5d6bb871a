//! Simulation laboratory for distributed optimization with intermittent
//! communication: M machines each take K local gradient steps between R
//! synchronous communication rounds.
//!
//! Everything is built on quadratic machine objectives, where local SGD's
//! behavior is exactly computable: the crate pairs each simulated algorithm
//! (local SGD, mini-batch SGD, accelerated mini-batch, two-stage) with
//! closed-form predictions (fixed points, contraction rates, discrepancy and
//! heterogeneity bounds, rate formulas) and checks them against each other.
//!
//! Modules:
//! - [`quad_core`]: symmetric matrices, quadratic machines, problem instances.
//! - [`oracle`]: counter-keyed reproducible stochastic gradient oracle.
//! - [`algorithms`]: the simulated algorithms and trajectory recording.
//! - [`fixed_point`]: local GD's fixed point, existence, contraction and
//!   discrepancy predictions.
//! - [`heterogeneity`]: measured heterogeneity quantities and their bounds.
//! - [`instances`]: generators for the standard problem constructions.
//! - [`theory_bounds`]: pure evaluators for the rate and floor formulas.
//! - [`harness`]: experiment configs, sweeps, CSV emission, verify suites.

pub mod algorithms;
pub mod error;
pub mod fixed_point;
pub mod harness;
pub mod heterogeneity;
pub mod instances;
pub mod oracle;
pub mod quad_core;
pub mod theory_bounds;

pub use error::{Error, Result};
