//! Planar toolkit for predictive motion planning around people.
//!
//! The crate is organised bottom-up:
//!
//! * [`field`] – occupancy grids, exact Euclidean distance transforms and
//!   min-composition of obstacle primitives into time-indexed field sequences.
//! * [`intent`] – goal discovery from dwell statistics and Bayesian
//!   recognition of the goal an agent is heading for.
//! * [`gp`] – constant-velocity Gaussian-process prior machinery.
//! * [`factor`] – factor graphs over GP support states and a
//!   Levenberg–Marquardt solver exploiting their block-tridiagonal structure.
//! * [`predict`] – goal-directed trajectory prediction, CVM/LVM baselines and
//!   displacement metrics.
//! * [`planner`] – receding-horizon planning against composite field sequences.

pub mod error;
pub mod factor;
pub mod field;
pub mod gp;
pub mod intent;
pub mod planner;
pub mod predict;

pub use error::{Error, Result};

/// Planar vector in meters (positions) or meters per second (velocities).
pub type Vec2 = nalgebra::Vector2<f64>;
