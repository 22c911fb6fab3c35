//! Seeded discrete-time simulation of energy-aware swarm foraging.
//!
//! Robots leave a central nest, search a 2D arena for resources and carry
//! them home. Each robot splits its battery into a foraging capacity and a
//! retreat reserve and adapts both after every round. The crate also ships
//! the baseline policies, efficiency metrics and a sweep harness.

pub mod battery;
pub mod cli;
pub mod events;
pub mod experiment;
pub mod geometry;
pub mod metrics;
pub mod robot;
pub mod strategy;
pub mod world;

pub use battery::{AdaptationWeights, Battery, EnergyLevel, EnergyRates, RoundOutcome};
pub use experiment::{run_single, run_sweep, ExperimentConfig};
pub use metrics::{aggregate, RunRecord, Summary};
pub use robot::{Robot, RobotState};
pub use strategy::{EnergyPolicy, Strategy};
pub use world::{ArenaConfig, SimConfig, Termination, World};
