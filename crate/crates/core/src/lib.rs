//! PI controller with a conditional anti-windup limiter, simulated under
//! three integration workflows, with predictors and detectors for the
//! chattering and deadlock the limiter can cause.
//!
//! ```
//! use awpi::{bundled, simulate, analysis::last_relock};
//!
//! let log = simulate(&bundled("ramp_epm").unwrap()).unwrap();
//! let relock = last_relock(&log).unwrap();
//! assert!((relock.u - 0.0585).abs() < 1e-9);
//! ```

pub mod analysis;
mod error;
pub mod model;
pub mod output;
pub mod report;
pub mod scenario;
pub mod signal;
pub mod sim;
pub mod step;
pub mod verify;

pub use error::{Error, Result};
pub use model::{eval_algebraic, rate, update_aw_status, LimiterState, PiParams, Region, SimState};
pub use scenario::{bundled, load_scenario, save_scenario, AnalysisConfig, FixedStep, ScenarioConfig, SolverConfig};
pub use signal::SignalSpec;
pub use sim::{initialize, simulate, EventLog};
pub use step::{adapt_step, step_elm, step_epm, step_itm, ItmSettings, IterationSample, Method, StepOutcome, StepRecord};
pub use output::{write_run, write_timeseries, Format};
pub use report::{predict, Predictions, RunReport};
