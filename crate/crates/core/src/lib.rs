//! Simulation and Lyapunov certification for multi-agent dynamics whose
//! communication network switches with the agents' state.
//!
//! Every model is a coupled iteration over an opinion profile `x` and a
//! network `λ` driven by [`bcd::run`]:
//!
//! * [`hk`]: bounded-confidence averaging (homogeneous, restricted
//!   edge-heterogeneous, 0-1 stubborn/moving);
//! * [`nearest_neighbor`]: asynchronous and synchronous nearest-neighbour
//!   contraction with a lexicographic Lyapunov value;
//! * [`stackelberg`]: leader-follower best responses over network choices.
//!
//! [`oracles`] holds brute-force references for small instances.

// `!(v > 0.0)` is the idiom for rejecting NaN along with nonpositive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bcd;
pub mod error;
pub mod hk;
pub mod lex;
pub mod linalg;
pub mod nearest_neighbor;
pub mod network;
pub mod oracles;
pub mod profile;
pub mod rng;
pub mod stackelberg;
pub mod trajectory;

pub use bcd::{certify_minimizer, certify_monotone, run, step, CoupledModel, RunConfig};
pub use error::{Error, Result};
pub use lex::{LexValue, OrderedValue, ValueKind};
pub use network::{ConfidenceSpec, NetworkFlags, NetworkMatrix, RestrictionGraph, ZeroOneSets};
pub use profile::OpinionProfile;
pub use rng::RngStream;
pub use trajectory::{RunStatus, TrajectoryRecord, TrajectoryStep};
