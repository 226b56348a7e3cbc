//! Average bioequivalence statistics.
//!
//! The crate covers the standard two-group parallel design on log-transformed
//! pharmacokinetic data:
//!
//! - [`specialfn`]: normal and Student-t distribution functions, inverse erf,
//!   lognormal quantiles and Owen's Q function.
//! - [`pkdata`]: CSV ingestion, geometric means and pooled two-sample summaries.
//! - [`equivtest`]: the two one-sided tests procedure and its confidence-interval
//!   counterparts.
//! - [`power`]: exact TOST power through Owen's Q, power curves and sample size.
//! - [`optimal`]: the UMP equivalence test for known variance and the two-cutoff
//!   solver for continuous one-parameter families.
//! - [`simharness`]: a seeded, worker-count-invariant Monte Carlo engine for size,
//!   power and coverage.
//! - [`cli`]: the `bioequiv` command-line front end.

// `!(x > 0.0)` is used on purpose: it also rejects NaN. Published
// coefficient tables are kept at their printed precision.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]


pub mod cli;
pub mod equivtest;
pub mod error;
pub mod optimal;
pub mod pkdata;
pub mod power;
pub mod report;
pub mod simharness;
pub mod specialfn;

pub use error::{Error, Result};
