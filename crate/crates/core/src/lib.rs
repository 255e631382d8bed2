//! Staged semiclassical phase estimation: `n` phase bits on a `k`-qubit
//! workspace, with textbook and Kitaev baselines and small-scale order
//! finding.

pub mod arith;
pub mod backend;
pub mod error;
pub mod kitaev;
pub mod order;
pub mod phase;
pub mod qft;
pub mod staged;
pub mod tally;

pub use backend::{Backend, Machine, PhaseOracle, ProductPhaseState, StateVector};
pub use error::{QpeError, Result};
pub use phase::{BinaryPhase, BitString, ClassicalAccumulator, Turns};
pub use staged::{run_staged, staged_cost, BackendKind, EstimateReport, StagedConfig, StagedCost};
pub use tally::GateTally;
