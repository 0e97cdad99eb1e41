//! Temporal ETAS toolkit.
//!
//! Building blocks for self-exciting earthquake catalog analysis:
//!
//! - catalog data model with CSV I/O, filtering, daily binning, and
//!   great-circle distances ([`catalog`]);
//! - Gutenberg-Richter, mother-conditional, Omori-Utsu, and productivity
//!   laws with exact inverse-CDF samplers ([`laws`]);
//! - ETAS intensity, log-likelihood, maximum-likelihood fitting, random time
//!   change, and most-likely-mother attribution ([`etas`]);
//! - branching simulation with ground-truth genealogy ([`simulate`]);
//! - autocorrelation of daily counts with a power-law fit selecting the
//!   causal window delta-star ([`correlate`]);
//! - frequency-weighted Gaussian KDE with leave-one-out bandwidth selection
//!   ([`kde`]);
//! - follower-magnitude trend analyses and regression ([`trend`]).
//!
//! Everything numerical is generic over the scalar type via [`Real`]
//! (`f32` or `f64`); the aliases at the crate root fix `f64`, which is what
//! the command-line front end uses.

// Validation deliberately writes `!(x > 0)` so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod correlate;
pub mod error;
pub mod etas;
pub mod kde;
pub mod laws;
mod optim;
pub mod scalar;
pub mod simulate;
pub mod stats;
pub mod trend;

pub use error::{Error, ErrorCategory, Result};
pub use scalar::Real;

/// Scalar type used by the concrete aliases and the CLI.
pub type Scalar = f64;

pub type Event = catalog::Event<Scalar>;
pub type Catalog = catalog::Catalog<Scalar>;
pub use catalog::{CountSeries, Parent, TimeFormat};

pub type GrLaw = laws::GrLaw<Scalar>;
pub type ConditionalLaw = laws::ConditionalLaw<Scalar>;
pub type OmoriLaw = laws::OmoriLaw<Scalar>;
pub type ProductivityLaw = laws::ProductivityLaw<Scalar>;

pub type EtasParams = etas::EtasParams<Scalar>;
pub type FitReport = etas::FitReport<Scalar>;
pub type Attribution = etas::Attribution<Scalar>;

pub type SimConfig = simulate::SimConfig<Scalar>;
pub type MagnitudeMode = simulate::MagnitudeMode<Scalar>;

pub type AcfEstimate = correlate::AcfEstimate<Scalar>;
pub type PowerLawFit = correlate::PowerLawFit<Scalar>;

pub type FrequencyTable = kde::FrequencyTable<Scalar>;
pub type DensityEstimate = kde::DensityEstimate<Scalar>;

pub type MagnitudeInterval = trend::MagnitudeInterval<Scalar>;
pub type SubintervalScheme = trend::SubintervalScheme<Scalar>;
pub type MagnitudeGroup = trend::MagnitudeGroup<Scalar>;
pub type TrendResult = trend::TrendResult<Scalar>;
