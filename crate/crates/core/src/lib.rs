//! Dynamic obstacle avoidance under partial observability.
//!
//! Two kinematic point-mass environments (`simple-oa`, `complex-oa`), each
//! observable either with full relative velocities (`mdp`) or positions only
//! (`rv`), and three off-policy agents built on a small hand-written network
//! kernel: TD3, TD3 with frame stacking, and LSTM-TD3.
//!
//! The [`harness`] module drives seeded multi-run experiments and writes the
//! evaluation CSVs, checkpoints and learning-curve reports used by the `oarl`
//! command-line tool.

pub mod agent;
pub mod env;
pub mod error;
pub mod harness;
pub mod nn;
pub mod par;

pub use error::{Error, Result};
