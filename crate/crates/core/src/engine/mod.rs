//! Closed-loop simulation: integration, scenarios, noise, traces and metrics.

mod integrate;
mod metrics;
mod noise;
mod scenario;
mod sim;
mod trace;

pub use integrate::rk4_step;
pub use metrics::{compute_metrics, converged, Metrics, CONVERGENCE_BAND, SETTLING_BAND};
pub use noise::{inject_noise, Channel, NoiseSpec};
pub use scenario::{Event, EventTarget, InitialConditions, Scenario};
pub use sim::{run_scenario, run_scenario_with};
pub use trace::{read_trace_csv, write_trace_csv, TraceRecord, TRACE_HEADER};
