//! Simulation and certification of consensus and flocking under
//! intermittent, time-varying communication.
//!
//! Agents follow `x_i' = g * sum_j M_ij(t) (x_j - x_i)` (possibly with state
//! dependent kernels, or in second-order form on velocities). Weights are
//! piecewise-constant [`Signal`]s collected in a [`Schedule`]. The crate
//! builds windowed connectivity graphs, integrates the dynamics, and computes
//! explicit exponential-rate certificates that are checked against the
//! simulated trajectories.

pub mod certificates;
pub mod digest;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod signal;

pub use error::{Error, Result};
pub use graph::{DirectedGraph, ReachabilityReport};
pub use signal::{Piece, Schedule, Signal};
