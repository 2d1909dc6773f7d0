//! Lifetime-maximizing data aggregation trees for wireless sensor fields.
//!
//! The crate has three layers:
//!
//! * graph algorithms over a deployed field ([`topology`], [`trees`]) that
//!   are generic over the energy scalar, so the same code runs on `f64`
//!   residuals inside the simulator and on exact rationals in tests;
//! * a deterministic discrete-event data-plane simulator ([`sim`]) with a
//!   control-plane cost model ([`control`]);
//! * metric extraction and multi-seed experiment orchestration
//!   ([`metrics`], [`stats`], [`experiment`]).

pub mod config;
pub mod control;
pub mod error;
pub mod experiment;
pub mod metrics;
mod rng;
pub mod scalar;
pub mod sim;
pub mod stats;
pub mod topology;
pub mod trees;

pub use config::SimConfig;
pub use error::{Error, Result};
pub use scalar::Scalar;
pub use topology::{EnergyView, NodeId, Role, Topology};
pub use trees::{AggregationTree, Scheme, TreeBuildResult};

/// Exact rational energies, used for oracle comparisons without rounding.
pub type Rational = num_rational::Rational64;

/// Residual energies as the simulator tracks them.
pub type EnergyView64 = EnergyView<f64>;
/// Residual energies in exact arithmetic.
pub type ExactEnergyView = EnergyView<Rational>;
/// Tree construction result over `f64` energies.
pub type TreeBuild64 = TreeBuildResult<f64>;
/// Tree construction result over exact energies.
pub type ExactTreeBuild = TreeBuildResult<Rational>;
