//! Adaptive mutation-rate control for evolutionary search.
//!
//! The core pieces are a reward signal derived from parent/child error
//! vectors ([`reward`]), tile-coded value estimates over log mutation rates
//! ([`tilecoding`]) and an ensemble of epsilon-greedy bandits that samples
//! rates from them ([`bandit`]). Baseline controllers, the generational loop,
//! two problem domains and the statistics used to compare controllers round
//! it out.

pub mod analysis;
pub mod bandit;
pub mod controller;
pub mod error;
pub mod evolution;
pub mod funcmin;
pub mod problem;
pub mod reward;
pub mod rng;
pub mod sr;
pub mod tilecoding;
pub mod umad;

pub use error::{Error, Result};
pub use problem::Problem;
pub use reward::{ErrorVector, TransformConfig};
