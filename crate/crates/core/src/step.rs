//! Single-step workflows for the three integration methods.
//!
//! * Explicit partitioned (EPM): algebraic variables first, with the old
//!   integrator value, then a forward Euler update of `x` gated by the
//!   status just computed. A change in `x` reaches `y` one step later.
//! * Execution list (ELM): blocks in data-flow order. The integrator is
//!   updated first, gated by the status from the previous step, then `y`
//!   and the new status are computed from the new `x`.
//! * Implicit trapezoidal (ITM): differential and algebraic rows are solved
//!   together in an inner loop that re-evaluates the anti-windup status
//!   after every solve.
//!
//! Inputs are always sampled at the end of the step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{eval_algebraic, rate, update_aw_status, LimiterState, PiParams, SimState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Epm,
    Elm,
    Itm,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Epm => "epm",
            Method::Elm => "elm",
            Method::Itm => "itm",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// How a step attempt ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepOutcome {
    /// Increment below tolerance and the limiter status stable across the
    /// last solve. Explicit steps always report this.
    Converged,
    /// Increment below tolerance while the status was still toggling.
    ConvergedByTolerance,
    /// Iteration budget exhausted. The attempt is rejected.
    NotConverged,
}

impl StepOutcome {
    pub fn is_accepted(self) -> bool {
        self != StepOutcome::NotConverged
    }
}

/// Values produced by one inner iteration of the implicit solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationSample {
    /// Status of the equation set solved in this iteration.
    pub limiter: LimiterState,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    /// Largest absolute change of `x`, `y`, `w` relative to the previous
    /// iterate (the step-start values for iteration 0).
    pub increment: f64,
}

/// Outcome of one step attempt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// End time of the attempt.
    pub t: f64,
    pub h_used: f64,
    /// Accepted state. For a rejected attempt, the last iterate with its
    /// status re-evaluated; the simulation does not advance from it.
    pub state_after: SimState,
    pub limiter_before: LimiterState,
    pub limiter_after: LimiterState,
    pub n_iterations: usize,
    pub outcome: StepOutcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iteration_trace: Option<Vec<IterationSample>>,
}

impl StepRecord {
    pub fn converged(&self) -> bool {
        self.outcome.is_accepted()
    }

    /// True if the limiter status changed across the step.
    pub fn toggled(&self) -> bool {
        self.limiter_before != self.limiter_after
    }

    /// Start time of the attempt.
    pub fn t_start(&self) -> f64 {
        self.t - self.h_used
    }
}

/// Inner-loop and step-size control for the implicit trapezoidal method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ItmSettings {
    /// Tolerance on the largest variable increment.
    pub epsilon: f64,
    /// Iteration budget per step attempt.
    pub n_iter_max: usize,
    pub h_init: f64,
    pub h_min_floor: f64,
    pub h_cap: f64,
    /// Quantum added or removed by the step-size heuristic.
    pub h_delta: f64,
    /// Consecutive rejected attempts at `h_min_floor` tolerated before the
    /// run is aborted.
    pub max_floor_failures: usize,
}

impl Default for ItmSettings {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            n_iter_max: 20,
            h_init: 1e-3,
            h_min_floor: 1e-6,
            h_cap: 1e-3,
            h_delta: 1e-6,
            max_floor_failures: 100,
        }
    }
}

impl ItmSettings {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.epsilon, self.h_init, self.h_min_floor, self.h_cap, self.h_delta];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSettings("step sizes and tolerance must be finite".into()));
        }
        if !(self.h_min_floor > 0.0 && self.h_min_floor <= self.h_init && self.h_init <= self.h_cap) {
            return Err(Error::InvalidSettings(format!(
                "need 0 < h_min_floor <= h_init <= h_cap, got {} / {} / {}",
                self.h_min_floor, self.h_init, self.h_cap
            )));
        }
        if self.epsilon <= 0.0 {
            return Err(Error::InvalidSettings(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        if self.n_iter_max < 2 {
            return Err(Error::InvalidSettings(format!("n_iter_max must be >= 2, got {}", self.n_iter_max)));
        }
        if self.h_delta < 0.0 {
            return Err(Error::InvalidSettings(format!("h_delta must be >= 0, got {}", self.h_delta)));
        }
        Ok(())
    }
}

fn explicit_record(prev: &SimState, state_after: SimState, h: f64) -> StepRecord {
    StepRecord {
        t: state_after.t,
        h_used: h,
        limiter_before: prev.limiter,
        limiter_after: state_after.limiter,
        state_after,
        n_iterations: 1,
        outcome: StepOutcome::Converged,
        iteration_trace: None,
    }
}

/// One explicit partitioned step from `prev` to `prev.t + h`.
pub fn step_epm(params: &PiParams, prev: &SimState, u_next: f64, h: f64) -> StepRecord {
    let t = prev.t + h;
    // algebraic rows with the old integrator value
    let y = params.kp * u_next + prev.x;
    let limiter = update_aw_status(params, y);
    let (_, w) = eval_algebraic(params, prev.x, u_next, limiter);
    let x = prev.x + h * rate(params, u_next, limiter);
    let state = SimState { t, x, y, w, u: u_next, limiter };
    explicit_record(prev, state, h)
}

/// One execution-list step from `prev` to `prev.t + h`.
pub fn step_elm(params: &PiParams, prev: &SimState, u_next: f64, h: f64) -> StepRecord {
    let t = prev.t + h;
    let x = prev.x + h * rate(params, u_next, prev.limiter);
    let y = params.kp * u_next + x;
    let limiter = update_aw_status(params, y);
    let (_, w) = eval_algebraic(params, x, u_next, limiter);
    let state = SimState { t, x, y, w, u: u_next, limiter };
    explicit_record(prev, state, h)
}

/// One implicit trapezoidal step attempt from `prev` to `prev.t + h`.
///
/// Iteration `i` solves the equation set selected by the current status:
///
/// ```text
///   x = x_prev + h/2 * (rate(u_next, status) + rate(u_prev, status_prev))
///   y = kp * u_next + x
///   w = y | w_max | w_min
/// ```
///
/// Each set is linear, so a single solve is exact. After the solve the
/// status is re-evaluated from the new `y`. The attempt is accepted once
/// the increment drops below `epsilon`, either with a stable status
/// ([`StepOutcome::Converged`]) or with the status still toggling
/// ([`StepOutcome::ConvergedByTolerance`]). The increment test compares
/// two solved iterates, so every attempt runs at least two solves. When
/// the tolerance exit is taken the state is re-projected through the
/// post-solve status, which keeps `w` within limits.
pub fn step_itm(params: &PiParams, prev: &SimState, u_next: f64, h: f64, settings: &ItmSettings) -> StepRecord {
    let t = prev.t + h;
    let rate_prev = rate(params, prev.u, prev.limiter);
    // hard limiter refreshed from its input before the first solve
    let mut status = update_aw_status(params, prev.y);
    let (mut cx, mut cy, mut cw) = (prev.x, prev.y, prev.w);
    let mut trace = Vec::with_capacity(settings.n_iter_max);

    for i in 0..settings.n_iter_max {
        let x = prev.x + 0.5 * h * (rate(params, u_next, status) + rate_prev);
        let (y, w) = eval_algebraic(params, x, u_next, status);
        let increment = (x - cx).abs().max((y - cy).abs()).max((w - cw).abs());
        trace.push(IterationSample { limiter: status, x, y, w, increment });
        (cx, cy, cw) = (x, y, w);

        let post = update_aw_status(params, y);
        // the increment is measured between two solved iterates
        if i >= 1 && increment < settings.epsilon {
            let outcome =
                if post == status { StepOutcome::Converged } else { StepOutcome::ConvergedByTolerance };
            let state_after = SimState::from_parts(params, t, x, u_next, post);
            return StepRecord {
                t,
                h_used: h,
                state_after,
                limiter_before: prev.limiter,
                limiter_after: post,
                n_iterations: i + 1,
                outcome,
                iteration_trace: Some(trace),
            };
        }
        status = post;
    }

    let state_after = SimState::settled(params, t, cx, u_next);
    StepRecord {
        t,
        h_used: h,
        limiter_before: prev.limiter,
        limiter_after: state_after.limiter,
        state_after,
        n_iterations: settings.n_iter_max,
        outcome: StepOutcome::NotConverged,
        iteration_trace: Some(trace),
    }
}

/// Step-size heuristic: grow by `h_delta` after an easy step (at most 3
/// iterations), shrink by `h_delta` after a hard one (15 or more), clamped
/// to `[h_min_floor, h_cap]`.
pub fn adapt_step(h: f64, n_last: usize, settings: &ItmSettings) -> f64 {
    let next = if n_last <= 3 {
        h + settings.h_delta
    } else if n_last >= 15 {
        h - settings.h_delta
    } else {
        h
    };
    next.clamp(settings.h_min_floor, settings.h_cap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SimState;

    fn params() -> PiParams {
        PiParams::new(1.0, 20.0, -1.0, 1.0).unwrap()
    }

    /// Locked at exactly `w_max` with input `u_prev`.
    fn at_upper(p: &PiParams, u_prev: f64) -> SimState {
        SimState::from_parts(p, 0.0, p.w_max - p.kp * u_prev, u_prev, LimiterState::UPPER)
    }

    #[test]
    fn epm_unlocks_and_integrates_in_the_same_step() {
        let p = params();
        let prev = at_upper(&p, 0.3);
        let rec = step_epm(&p, &prev, 0.299, 1e-3);
        assert_eq!(rec.limiter_before, LimiterState::UPPER);
        assert_eq!(rec.limiter_after, LimiterState::WITHIN);
        assert!((rec.state_after.x - (prev.x + 1e-3 * 20.0 * 0.299)).abs() < 1e-15);
        // y reflects the old x
        assert!((rec.state_after.y - (0.299 + prev.x)).abs() < 1e-15);
    }

    #[test]
    fn elm_keeps_x_frozen_on_the_unlocking_step() {
        let p = params();
        let prev = at_upper(&p, 0.3);
        let rec = step_elm(&p, &prev, 0.299, 1e-3);
        assert_eq!(rec.state_after.x, prev.x);
        assert!((rec.state_after.y - (prev.y - 1e-3)).abs() < 1e-15);
        assert_eq!(rec.limiter_after, LimiterState::WITHIN);
    }

    #[test]
    fn zero_input_leaves_x_unchanged() {
        let p = params();
        let prev = SimState::settled(&p, 0.0, 0.25, 0.0);
        for rec in [step_epm(&p, &prev, 0.0, 0.01), step_elm(&p, &prev, 0.0, 0.01)] {
            assert_eq!(rec.state_after.x, 0.25);
            assert_eq!(rec.state_after.y, 0.25);
            assert_eq!(rec.outcome, StepOutcome::Converged);
            assert_eq!(rec.n_iterations, 1);
        }
    }

    #[test]
    fn itm_linear_regime_matches_trapezoid() {
        let p = params();
        let s = ItmSettings::default();
        let prev = SimState::settled(&p, 0.0, 0.1, 0.2);
        for &h in &[1e-4, 1e-3, 1e-2] {
            let rec = step_itm(&p, &prev, 0.25, h, &s);
            assert_eq!(rec.outcome, StepOutcome::Converged);
            assert!(rec.n_iterations <= 2);
            let exact = 0.1 + 0.5 * h * 20.0 * (0.25 + 0.2);
            assert!((rec.state_after.x - exact).abs() < 1e-15);
        }
    }

    #[test]
    fn itm_toggles_when_integrator_overshoots() {
        let p = params();
        let s = ItmSettings::default();
        let prev = at_upper(&p, 0.2925);
        let rec = step_itm(&p, &prev, 0.2915, 1e-3, &s);
        assert_eq!(rec.outcome, StepOutcome::NotConverged);
        let trace = rec.iteration_trace.unwrap();
        assert_eq!(trace.len(), 20);
        for (i, it) in trace.iter().enumerate() {
            let expected = if i % 2 == 0 { LimiterState::UPPER } else { LimiterState::WITHIN };
            assert_eq!(it.limiter, expected, "iteration {i}");
        }
        for it in &trace[1..] {
            assert!((it.increment - 2.915e-3).abs() < 1e-12);
        }
    }

    #[test]
    fn itm_exits_by_tolerance_with_small_increment() {
        let p = params();
        let s = ItmSettings { epsilon: 3e-3, ..ItmSettings::default() };
        let prev = at_upper(&p, 0.2925);
        let rec = step_itm(&p, &prev, 0.2915, 1e-3, &s);
        assert_eq!(rec.outcome, StepOutcome::ConvergedByTolerance);
        assert_eq!(rec.n_iterations, 2);
        assert_eq!(rec.limiter_after, LimiterState::UPPER);
        assert_eq!(rec.state_after.w, p.w_max);
    }

    #[test]
    fn adapt_step_examples() {
        let s = ItmSettings::default();
        assert_eq!(adapt_step(1e-3, 3, &s), 1e-3);
        assert_eq!(adapt_step(5e-4, 20, &s), 5e-4 - 1e-6);
        assert_eq!(adapt_step(5e-4, 10, &s), 5e-4);
        assert_eq!(adapt_step(5e-4, 1, &s), 5e-4 + 1e-6);
        assert_eq!(adapt_step(1e-6, 20, &s), 1e-6);
    }

    #[test]
    fn settings_validation() {
        assert!(ItmSettings::default().validate().is_ok());
        assert!(ItmSettings { n_iter_max: 1, ..Default::default() }.validate().is_err());
        assert!(ItmSettings { h_init: 2e-3, ..Default::default() }.validate().is_err());
        assert!(ItmSettings { epsilon: 0.0, ..Default::default() }.validate().is_err());
    }
}
