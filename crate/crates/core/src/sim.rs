//! Drives the single-step workflows over a time window.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{update_aw_status, PiParams, SimState};
use crate::scenario::{ScenarioConfig, SolverConfig};
use crate::signal::SignalSpec;
use crate::step::{adapt_step, step_elm, step_epm, step_itm, ItmSettings, Method, StepOutcome, StepRecord};

/// Ordered record of every step attempt of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventLog {
    pub method: Method,
    pub params: PiParams,
    pub initial: SimState,
    pub records: Vec<StepRecord>,
}

impl EventLog {
    /// Records of accepted steps, in time order.
    pub fn accepted(&self) -> impl Iterator<Item = &StepRecord> + '_ {
        self.records.iter().filter(|r| r.converged())
    }

    pub fn final_state(&self) -> SimState {
        self.accepted().last().map_or(self.initial, |r| r.state_after)
    }

    pub fn rejected_count(&self) -> usize {
        self.records.iter().filter(|r| !r.converged()).count()
    }
}

/// Consistent initial state for a prescribed pre-limit output `y0`.
///
/// The integrator value is chosen so that `kp*u(t_start) + x = y0`. The
/// output must lie within the closed interval `[w_min, w_max]`.
pub fn initialize(params: &PiParams, signal: &SignalSpec, t_start: f64, y0: f64) -> Result<SimState> {
    if !y0.is_finite() || y0 < params.w_min || y0 > params.w_max {
        return Err(Error::InvalidScenario(format!(
            "initial output {y0} lies outside the limits [{}, {}]",
            params.w_min, params.w_max
        )));
    }
    let u = signal.sample(t_start);
    let x = y0 - params.kp * u;
    let limiter = update_aw_status(params, y0);
    Ok(SimState::from_parts(params, t_start, x, u, limiter))
}

/// Runs a scenario from `t_start` to `t_end`.
///
/// EPM and ELM march at a fixed step. ITM adapts the step after every
/// attempt and retries a rejected attempt from the same start time with
/// the adapted step. The final step of either march is shortened to land
/// on `t_end`.
pub fn simulate(config: &ScenarioConfig) -> Result<EventLog> {
    config.validate()?;
    let params = config.params;
    let initial = initialize(&params, &config.signal, config.t_start, config.initial_output)?;
    let records = match &config.solver {
        SolverConfig::Epm(f) => march_fixed(&params, &config.signal, initial, f.h, config.t_end, step_epm),
        SolverConfig::Elm(f) => march_fixed(&params, &config.signal, initial, f.h, config.t_end, step_elm),
        SolverConfig::Itm(s) => march_itm(&params, &config.signal, initial, s, config.t_end)?,
    };
    Ok(EventLog { method: config.method(), params, initial, records })
}

fn march_fixed(
    params: &PiParams,
    signal: &SignalSpec,
    initial: SimState,
    h: f64,
    t_end: f64,
    step: fn(&PiParams, &SimState, f64, f64) -> StepRecord,
) -> Vec<StepRecord> {
    let t0 = initial.t;
    // a trailing remainder below 1e-9 steps is absorbed into the last step
    let n_steps = ((t_end - t0) / h - 1e-9).ceil().max(1.0) as usize;
    let mut records = Vec::with_capacity(n_steps);
    let mut state = initial;
    for k in 1..=n_steps {
        let (t_next, h_k) = if k == n_steps { (t_end, t_end - state.t) } else { (t0 + k as f64 * h, h) };
        let mut rec = step(params, &state, signal.sample(t_next), h_k);
        // pin the clock to the grid rather than accumulating h
        rec.t = t_next;
        rec.state_after.t = t_next;
        state = rec.state_after;
        records.push(rec);
    }
    records
}

fn march_itm(
    params: &PiParams,
    signal: &SignalSpec,
    initial: SimState,
    settings: &ItmSettings,
    t_end: f64,
) -> Result<Vec<StepRecord>> {
    // remainders shorter than this are absorbed into the previous step
    let t_eps = settings.h_min_floor * 1e-6;
    let mut records = Vec::new();
    let mut state = initial;
    let mut h = settings.h_init;
    let mut floor_failures = 0usize;

    while t_end - state.t > t_eps {
        let remaining = t_end - state.t;
        // a step that would leave less than t_eps is stretched onto t_end
        let last = h >= remaining - t_eps;
        let (t_next, h_try) = if last { (t_end, remaining) } else { (state.t + h, h) };
        let u_next = signal.sample(t_next);
        let mut rec = step_itm(params, &state, u_next, h_try, settings);
        rec.t = t_next;
        rec.state_after.t = t_next;
        if rec.outcome == StepOutcome::Converged {
            rec.iteration_trace = None;
        }
        let n = rec.n_iterations;
        if rec.converged() {
            state = rec.state_after;
            floor_failures = 0;
        } else if h <= settings.h_min_floor {
            floor_failures += 1;
            if floor_failures > settings.max_floor_failures {
                return Err(Error::Stalled { t: state.t, h, attempts: floor_failures });
            }
        }
        records.push(rec);
        h = adapt_step(h, n, settings);
    }
    Ok(records)
}
