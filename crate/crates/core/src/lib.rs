//! Extreme value index estimation for randomly right-censored data.
//!
//! The crate is organised bottom-up:
//!
//! - [`distributions`]: parametric families with exact cdf/quantile and
//!   inverse-transform sampling.
//! - [`censored_data`]: censored samples, concomitant sorting, tail views and
//!   CSV ingestion.
//! - [`kaplan_meier`]: the classical product-limit estimator.
//! - [`ekm`]: the extreme Kaplan–Meier estimator on normalised top order
//!   statistics and its integrals `S_{k,n}(φ)`.
//! - [`estimators`]: censored Hill / log-moment / moment estimators, their
//!   uncensored and benchmark counterparts, max-domain classification.
//! - [`asymptotics`]: closed-form limit laws, plug-in confidence intervals and
//!   quadrature / Monte-Carlo oracles for the limit variance.
//! - [`simulation`]: reproducible, parallel Monte-Carlo experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod censored_data;
pub mod distributions;
pub mod ekm;
mod error;
pub mod estimators;
pub mod format;
pub mod functions;
pub mod kaplan_meier;
pub mod simulation;

pub use censored_data::{CensoredSample, SortedCensoredSample, TailView};
pub use distributions::{Distribution, Family, TailProfile};
pub use ekm::EkmWeights;
pub use error::{Error, ErrorKind, Result};
pub use estimators::{EstimatorId, EviEstimate, Mda};
pub use functions::NamedFn;
pub use kaplan_meier::StepCdf;

/// Seed used whenever the caller does not provide one.
pub const DEFAULT_SEED: u64 = 42;
