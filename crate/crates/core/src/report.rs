//! Predictions and detector results gathered for one scenario.

use serde::{Deserialize, Serialize};

use crate::analysis::{
    chattering_threshold, deadlock_bounds, detect_chattering, detect_deadlock, last_relock, ChatterInterval,
    ChatterPrediction, DeadlockBounds, DeadlockEpisode, SummandReading, Transition,
};
use crate::error::{Error, Result};
use crate::model::{PiParams, SimState};
use crate::scenario::{ScenarioConfig, SolverConfig};
use crate::sim::{simulate, EventLog};
use crate::step::{ItmSettings, Method};

/// Version of the report and event-record layouts.
pub const SCHEMA_VERSION: u32 = 1;

/// Closed-form predictions for a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predictions {
    /// Step size the predictions are evaluated at.
    pub h: f64,
    /// Input increment per step on the first falling segment.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub du_per_step: Option<f64>,
    pub chatter: Vec<ChatterPrediction>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deadlock: Option<DeadlockBounds>,
    /// Why a prediction could not be made.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Evaluates the chattering and deadlock predictors for a scenario.
///
/// The chattering thresholds use the slope of the first falling segment
/// of the input. The deadlock bounds are evaluated at `u_ref` (argument,
/// then the scenario's `analysis.u_ref`); without either, an ITM scenario
/// is simulated and the input at the first deadlock onset is used.
pub fn predict(config: &ScenarioConfig, k_max: Option<usize>, u_ref: Option<f64>) -> Result<Predictions> {
    predict_inner(config, k_max, u_ref, true)
}

fn predict_inner(
    config: &ScenarioConfig,
    k_max: Option<usize>,
    u_ref: Option<f64>,
    simulate_for_ref: bool,
) -> Result<Predictions> {
    config.validate()?;
    let params = config.params;
    let h = config.solver.nominal_step();
    let k_max = k_max.unwrap_or(config.analysis.k_max);
    let epsilon = match &config.solver {
        SolverConfig::Itm(s) => s.epsilon,
        _ => ItmSettings::default().epsilon,
    };
    let mut notes = Vec::new();

    let mut u_ref = u_ref.or(config.analysis.u_ref);
    if u_ref.is_none() && simulate_for_ref && config.method() == Method::Itm {
        let log = simulate(config)?;
        u_ref = detect_deadlock(&log).first().map(|e| e.u_onset);
    }
    if u_ref.is_none() {
        notes.push("no reference input; deadlock bounds need analysis.u_ref or a simulated deadlock".into());
    }

    let falling = first_falling_slope(config);
    let du_per_step = falling.map(|slope| slope * h);
    let mut chatter = Vec::new();
    match du_per_step {
        Some(du) => {
            for method in [Method::Epm, Method::Elm] {
                let reference = u_ref.unwrap_or(f64::NAN);
                chatter.push(chattering_threshold(method, &params, h, du, reference, k_max, SummandReading::Cumulative)?);
            }
        }
        None => notes.push("the input never falls; chattering thresholds need a falling input".into()),
    }

    let deadlock = match u_ref {
        Some(u) => match config.signal.falling_crossing(u) {
            Some(t) => {
                let udot_t = config.signal.derivative(t);
                let udot_prev = config.signal.derivative((t - h).max(0.0));
                Some(deadlock_bounds(&params, u, udot_t, udot_prev, udot_t * h, epsilon)?)
            }
            None => {
                notes.push(format!("the input never falls through u_ref = {u}"));
                None
            }
        },
        None => None,
    };

    Ok(Predictions { h, du_per_step, chatter, deadlock, notes })
}

fn first_falling_slope(config: &ScenarioConfig) -> Option<f64> {
    let signal = &config.signal;
    std::iter::once(config.t_start)
        .chain(signal.breakpoints())
        .filter(|&t| t >= config.t_start && t < config.t_end)
        .map(|t| signal.derivative(t))
        .find(|&d| d < 0.0)
}

/// Summary of one simulated run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub scenario: String,
    pub method: Method,
    pub params: PiParams,
    pub t_start: f64,
    pub t_end: f64,
    pub accepted_steps: usize,
    pub rejected_attempts: usize,
    pub limiter_transitions: usize,
    pub final_state: SimState,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub last_relock: Option<Transition>,
    pub chattering: Vec<ChatterInterval>,
    pub deadlocks: Vec<DeadlockEpisode>,
    pub predictions: Predictions,
}

impl RunReport {
    pub fn build(config: &ScenarioConfig, log: &EventLog) -> Result<Self> {
        if log.records.is_empty() {
            return Err(Error::InvalidArgument("cannot report on an empty log".into()));
        }
        let a = &config.analysis;
        // reuse this run for the reference input instead of simulating again
        let u_ref = a.u_ref.or_else(|| detect_deadlock(log).first().map(|e| e.u_onset));
        let predictions = predict_inner(config, None, u_ref, false)?;
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            scenario: config.display_name().to_string(),
            method: log.method,
            params: log.params,
            t_start: config.t_start,
            t_end: config.t_end,
            accepted_steps: log.accepted().count(),
            rejected_attempts: log.rejected_count(),
            limiter_transitions: crate::analysis::transitions(log).len(),
            final_state: log.final_state(),
            last_relock: last_relock(log),
            chattering: detect_chattering(log, a.chatter_window, a.chatter_min_toggles),
            deadlocks: detect_deadlock(log),
            predictions,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::bundled;

    #[test]
    fn itm_predictions() {
        let p = predict(&bundled("ramp_itm").unwrap(), None, None).unwrap();
        let d = p.deadlock.unwrap();
        assert!((d.h_min_avoid - 0.1915).abs() < 1e-12);
        assert!((d.h_max_exit - 3.431e-4).abs() < 1e-7);
        assert_eq!(p.chatter.len(), 2);
        assert!((p.chatter[0].threshold_u - 0.0595).abs() < 5e-4);
        assert!((p.chatter[1].threshold_u - 0.0605).abs() < 5e-4);
    }

    #[test]
    fn rising_only_input_has_no_chatter_prediction() {
        let mut cfg = bundled("ramp_epm").unwrap();
        cfg.t_end = 1.0;
        let p = predict(&cfg, Some(3), None).unwrap();
        assert!(p.chatter.is_empty());
        assert!(p.deadlock.is_none());
        assert!(!p.notes.is_empty());
    }

    #[test]
    fn report_counts() {
        let cfg = bundled("unsaturated_ramp").unwrap();
        let log = simulate(&cfg).unwrap();
        let r = RunReport::build(&cfg, &log).unwrap();
        assert_eq!(r.accepted_steps, 2000);
        assert_eq!(r.rejected_attempts, 0);
        assert_eq!(r.limiter_transitions, 0);
        assert!(r.chattering.is_empty() && r.deadlocks.is_empty());
    }
}
