//! Deterministic, seedable simulator of a repeated privacy-pricing game
//! in federated learning: data owners sell reductions of their local
//! differential-privacy noise to a curator, and both sides learn mixed
//! strategies with win-or-learn-fast policy hill-climbing, without
//! knowledge of each other's private parameters.
//!
//! The crate is organized around:
//! - [`game_model`]: action grids, payoff functions, the fitted loss surface;
//! - [`privacy`]: zCDP budget accounting for the Gaussian mechanism;
//! - [`learners`]: tabular WoLF-PHC, Q-learning, and greedy agents;
//! - [`engine`]: the repeated game, trace records, convergence detection;
//! - [`ne_verifier`]: best-response exploitability certificates;
//! - [`config`], [`trace`], [`compare`]: run configuration, CSV traces,
//!   and scheme comparison sweeps.
//!
//! With the default `parallel` feature the engine steps the independent
//! learner pairs with rayon; runs are bit-identical either way because
//! every agent owns its own seeded random stream.

// Validation code uses `!(x > 0.0)` on purpose: the negation also
// rejects NaN, which `x <= 0.0` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod compare;
pub mod config;
pub mod engine;
pub mod game_model;
pub mod learners;
pub mod ne_verifier;
pub mod privacy;
pub mod trace;
