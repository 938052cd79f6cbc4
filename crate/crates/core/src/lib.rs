//! Adaptive PID tuning for a delayed 1-DoF axial stage.
//!
//! The crate bundles a small plant simulator, a bounded PID law, two classical
//! baselines (relay Ziegler-Nichols and a 49-rule fuzzy scheduler), a dense
//! network kernel with Adam, and a deep Q-learning agent that nudges the three
//! gains. The [`harness`] module drives the training, evaluation and
//! comparison experiments that the `drl-pid` binary exposes.

pub mod agent;
pub mod control;
pub mod error;
pub mod harness;
pub mod nn;
pub mod pid;
pub mod plant;
pub mod tuners;

pub use error::{Error, Result};
pub use pid::{GainBounds, GainRange, PidGains, PidState};
pub use plant::{PlantParams, PlantState};
