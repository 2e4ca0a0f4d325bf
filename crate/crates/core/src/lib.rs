//! Averaged buck converter with a ZIP load behind a power line, driven by
//! energy-shaping controllers with disturbance observers.
//!
//! The plant, reference, observer, controller and stability modules are pure
//! functions over plain values. [`engine`] ties them into a fixed-step RK4
//! simulation and [`config`] reads scenarios from TOML.

pub mod cli;
pub mod config;
pub mod controllers;
pub mod engine;
mod error;
pub mod observer;
pub mod plant;
pub mod plot;
pub mod reference;
pub mod stability;
pub mod sweep;

pub use controllers::{ControllerConfig, ControllerKind};
pub use engine::{run_scenario, Scenario, TraceRecord};
pub use error::{Error, Result};
pub use plant::{CircuitParams, DisturbanceVector, ExoSystem, PlantState};
pub use reference::{solve_equilibrium, ReferenceMode, ReferenceState};
