//! Solver for the hyperbolic Boussinesq model reduced along its characteristics.
//!
//! In the coordinates `z1 = log(x1 x2)`, `z2 = log(x2/x1)` the flow moves along
//! vertical lines, so the state is two functions of `z1` alone: the accumulated
//! phase `phi` and the memory integral `mem = int_0^t e^{phi/2} ds`. Vorticity and
//! density are recovered from them in closed form.

pub mod commands;
pub mod config;
pub mod coords;
pub mod diagnostics;
pub mod error;
pub mod evolver;
pub mod fields;
pub mod output;
pub mod picard;
pub mod quadrature;

pub use config::{Problem, Scenario, ScenarioConfig};
pub use error::{Error, Result};
pub use evolver::{estimate_blowup_time, run, run_problem, RunResult, StopReason, StopStatus};
