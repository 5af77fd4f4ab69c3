//! Fixed-step simulation of the complete chain.

pub mod audit;
pub mod kernel;
pub mod ode;
pub mod scenario;
pub mod sweep;
pub mod trace;

pub use audit::{energy_audit, AuditReport};
pub use kernel::{initial_state, run, run_full, step, Inputs, PlantState, RunOutput, SimState};
pub use scenario::{bundled_json, GridParams, PlantParams, Scenario, WindProfile};
pub use sweep::{mppt_sweep, MpptRow};
pub use trace::{Trace, TRACE_COLUMNS};
