//! Placement of demands on machine pairs under nominal and failover capacity
//! constraints: online worst-case and stochastic algorithms, offline machine
//! minimization through a configuration LP, and exact desk-scale oracles.

pub mod configlp;
pub mod convergence;
pub mod error;
pub mod instances;
pub mod model;
pub mod num;
pub mod offline_min;
pub mod oracle;
pub mod simplex;
pub mod stochastic;
pub mod worstcase;

pub use error::{Error, Result};
pub use num::{Rational, Scalar};

/// `f64` problem parameters.
pub type Params = model::ProblemParams<f64>;
/// `f64` demand sequence.
pub type Demands = model::DemandSequence<f64>;
/// `f64` load profile.
pub type Loads = model::LoadProfile<f64>;
