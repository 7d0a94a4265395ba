//! Symmetry tests around an unknown center estimated by the alpha-trimmed
//! mean: exact finite-sample statistics, limiting variances, local slopes and
//! local approximate Bahadur indices, plus a seeded Monte Carlo harness.

pub mod asymptotics;
pub mod distributions;
pub mod efficiency;
pub mod error;
pub mod location;
pub mod montecarlo;
pub mod population;
pub mod quadrature;
pub mod rng;
pub mod statistics;
pub mod validation;

pub use distributions::{AltKind, AlternativeFamily, Model, SymmetricNull};
pub use error::{Error, Result};
pub use location::{trimmed_mean, TrimSpec};
pub use statistics::{evaluate, Family, StatKind, StatisticSpec, StatisticValue};
