//! Monte Carlo engine for two-coordinate branching Brownian motion.
//!
//! * [`sim`] runs exact event-driven replicas with optional first-moment pruning.
//! * [`functionals`] evaluates partition functions, martingales, the
//!   minimum, pair overlaps and near-minimal clusters of a replica.
//! * [`oracles`] holds closed-form expectations used as validation targets.
//! * [`stats`] carries the statistical checks.
//! * [`harness`] plans, runs, persists and aggregates replica farms.
//! * [`analysis`] turns stores into gated checks; [`gates`] holds the thresholds.

pub mod analysis;
pub mod error;
pub mod functionals;
pub mod gates;
pub mod harness;
pub mod mrca;
pub mod oracles;
pub mod rng;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
pub use functionals::{ClusterMember, ClusterSummary, PartitionValue};
pub use mrca::MrcaIndex;
pub use num_complex::Complex64;
pub use sim::{simulate, Genealogy, Leaf, NodeId, ReplicaOutput, SimConfig};
pub use stats::{CfFit, TestResult};
