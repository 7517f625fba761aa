//! Scenario simulation, prediction evaluation and benchmarks on top of
//! `predplan-core`.

pub mod bench;
pub mod closed_loop;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod export;
pub mod human;
pub mod scenario;

pub use closed_loop::{run_closed_loop, SimConfig, SimLog, SimMode};
pub use error::{SimError, SimResult};
pub use scenario::{Scenario, ScenarioSpec};
