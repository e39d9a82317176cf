//! Reference checks on the bundled falling-ramp scenarios.
//!
//! The controller (`kp = 1`, `ki = 20`) sits at its upper limit while the
//! input ramps down at 1/s. Known outcomes:
//!
//! * EPM at h = 1 ms stops relocking once the input is below 0.0595.
//! * ELM at h = 1 ms relocks for the last time at 0.0605.
//! * ITM with h = epsilon = 1 ms deadlocks at t = 3.709 s, u = 0.2915.
//! * The deadlock is escaped by tolerance once h < 0.3431 ms; keeping the
//!   integrator unlocked at that input would need h > 0.1915 s.

use serde::Serialize;

use crate::analysis::{chattering_threshold_elm, chattering_threshold_epm, detect_deadlock, last_relock, DeadlockExit};
use crate::error::{Error, Result};
use crate::report::predict;
use crate::scenario::{bundled, ScenarioConfig, SolverConfig};
use crate::sim::simulate;
use crate::step::StepOutcome;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `|actual - expected| <= tolerance`
    Within,
    /// `actual < expected`
    Below,
    /// `actual >= expected`
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub relation: Relation,
    pub expected: f64,
    pub actual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    /// `actual` within `tolerance` of `expected`. The edge is widened by a
    /// relative 1e-9 so that values exactly one tolerance away, such as
    /// inputs one grid increment off, are not decided by rounding.
    pub fn within(name: impl Into<String>, expected: f64, actual: f64, tolerance: f64) -> Self {
        let passed = (actual - expected).abs() <= tolerance * (1.0 + 1e-9);
        Self { name: name.into(), relation: Relation::Within, expected, actual, tolerance, passed }
    }

    pub fn below(name: impl Into<String>, bound: f64, actual: f64) -> Self {
        Self { name: name.into(), relation: Relation::Below, expected: bound, actual, tolerance: 0.0, passed: actual < bound }
    }

    pub fn at_least(name: impl Into<String>, bound: f64, actual: f64) -> Self {
        let passed = actual >= bound;
        Self { name: name.into(), relation: Relation::AtLeast, expected: bound, actual, tolerance: 0.0, passed }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {}: {:.6e}", self.name, self.actual)?;
        match self.relation {
            Relation::Within => write!(f, " (expected {:.6e} +/- {:.1e})", self.expected, self.tolerance),
            Relation::Below => write!(f, " (expected < {:.6e})", self.expected),
            Relation::AtLeast => write!(f, " (expected >= {:.6e})", self.expected),
        }
    }
}

fn load(name: &str) -> ScenarioConfig {
    bundled(name).expect("bundled scenario exists")
}

/// Runs all reference checks.
pub fn verify_reference() -> Result<Vec<Check>> {
    let mut checks = Vec::new();

    for (name, expected) in [("ramp_epm", 0.0595), ("ramp_elm", 0.0605)] {
        let cfg = load(name);
        let h = cfg.solver.nominal_step();
        let t_fall = cfg.signal.falling_crossing(expected).ok_or_else(|| {
            Error::InvalidScenario(format!("{name}: the input never falls through {expected}"))
        })?;
        let du = cfg.signal.derivative(t_fall) * h;
        let k_max = cfg.analysis.k_max;
        let predicted = match cfg.solver {
            SolverConfig::Epm(_) => chattering_threshold_epm(&cfg.params, h, du, expected, k_max)?,
            _ => chattering_threshold_elm(&cfg.params, h, du, expected, k_max)?,
        };
        checks.push(Check::within(format!("{name} predicted chattering threshold"), expected, predicted.threshold_u, 5e-4));
        let log = simulate(&cfg)?;
        let relock = last_relock(&log).map_or(f64::NAN, |t| t.u);
        checks.push(Check::within(format!("{name} input at last relock"), expected, relock, 1e-3));
    }

    let cfg = load("ramp_itm");
    let log = simulate(&cfg)?;
    let episodes = detect_deadlock(&log);
    let first = episodes.first().ok_or_else(|| Error::InvalidScenario("ramp_itm did not deadlock".into()))?;
    checks.push(Check::within("ramp_itm deadlock onset time", 3.709, first.t_onset, 0.01));
    checks.push(Check::within("ramp_itm deadlock onset input", 0.2915, first.u_onset, 0.01));

    let bounds = predict(&cfg, None, Some(first.u_onset))?
        .deadlock
        .ok_or_else(|| Error::InvalidScenario("ramp_itm: no deadlock bounds at the onset input".into()))?;
    checks.push(Check::within("step bound to exit deadlock", 3.431e-4, bounds.h_max_exit, 1e-7));
    checks.push(Check::within("step bound to avoid deadlock", 0.1915, bounds.h_min_avoid, 1e-12));
    let exit_h = match (first.exit_kind, first.exit_h) {
        (DeadlockExit::Tolerance, Some(h)) => h,
        _ => f64::NAN,
    };
    checks.push(Check::below("ramp_itm deadlock exit step (by tolerance)", 3.431e-4, exit_h));

    let cfg = load("ramp_itm_tolerance");
    let log = simulate(&cfg)?;
    let by_tolerance = log.records.iter().filter(|r| r.outcome == StepOutcome::ConvergedByTolerance).count();
    checks.push(Check::within("ramp_itm_tolerance rejected attempts", 0.0, log.rejected_count() as f64, 0.0));
    checks.push(Check::at_least("ramp_itm_tolerance steps accepted by tolerance", 1.0, by_tolerance as f64));

    Ok(checks)
}
