//! Scheduling library for crowdsourced vehicular edge computing.
//!
//! An ego vehicle offloads compute tasks to passing-by vehicles. This crate
//! holds everything the ego-side scheduler needs: the latency/reliability
//! model ([`model`]), the per-vehicle optimal capacity split ([`allocator`]),
//! link-rate prediction from observed transmissions ([`predictor`]), the
//! barrier-penalized swarm search that picks replica sets ([`assigner`]),
//! and independent numerical/exhaustive cross-checks ([`oracle`]).
//!
//! Everything is deterministic under a caller-supplied seed; see [`seeds`].

pub mod allocator;
pub mod assigner;
pub mod error;
pub mod model;
pub mod oracle;
pub mod predictor;
pub mod seeds;

pub use error::CoreError;
pub use model::{Allocation, Assignment, LinkRates, TaskSpec, VehicleState};
