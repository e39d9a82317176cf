//! Classifies event logs into chattering intervals and deadlock episodes.

use serde::{Deserialize, Serialize};

use crate::model::LimiterState;
use crate::sim::EventLog;
use crate::step::{StepOutcome, StepRecord};

/// Limiter status change between two accepted steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub t: f64,
    pub u: f64,
    pub from: LimiterState,
    pub to: LimiterState,
}

impl Transition {
    /// Integrator going from running to frozen.
    pub fn is_relock(&self) -> bool {
        self.from.z_i() && self.to.is_limited()
    }

    pub fn is_unlock(&self) -> bool {
        self.from.is_limited() && self.to.z_i()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChatterInterval {
    pub t_start: f64,
    pub t_end: f64,
    /// Input at the first and last toggle of the interval.
    pub u_start: f64,
    pub u_end: f64,
    pub toggles: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeadlockExit {
    /// Left by the increment test while the status was still toggling.
    Tolerance,
    /// The retried step found a consistent status.
    Stabilized,
    /// The log ends inside the episode.
    Unresolved,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeadlockEpisode {
    /// Start time shared by all attempts of the episode.
    pub t_step_start: f64,
    /// End time and input of the first rejected attempt.
    pub t_onset: f64,
    pub u_onset: f64,
    pub h_onset: f64,
    /// Rejected attempts in the episode.
    pub attempts: usize,
    /// Step size and input of the attempt that ended the episode.
    pub exit_h: Option<f64>,
    pub exit_u: Option<f64>,
    pub exit_kind: DeadlockExit,
}

/// Status changes across accepted steps.
pub fn transitions(log: &EventLog) -> Vec<Transition> {
    log.accepted()
        .filter(|r| r.toggled())
        .map(|r| Transition { t: r.t, u: r.state_after.u, from: r.limiter_before, to: r.limiter_after })
        .collect()
}

/// Transitions that lock the integrator at the same limit it was last
/// unlocked from. Saturating at the opposite limit is not a relock.
pub fn relocks(log: &EventLog) -> Vec<Transition> {
    let mut left: Option<LimiterState> = None;
    let mut out = Vec::new();
    for tr in transitions(log) {
        if tr.is_unlock() {
            left = Some(tr.from);
        } else if tr.is_relock() && left == Some(tr.to) {
            out.push(tr);
        }
    }
    out
}

/// Last relock in the log.
pub fn last_relock(log: &EventLog) -> Option<Transition> {
    relocks(log).pop()
}

/// Maximal intervals in which the status toggles at least `min_toggles`
/// times within some window of `window` consecutive accepted steps.
pub fn detect_chattering(log: &EventLog, window: usize, min_toggles: usize) -> Vec<ChatterInterval> {
    let steps: Vec<&StepRecord> = log.accepted().collect();
    let toggles: Vec<usize> = steps.iter().enumerate().filter(|(_, r)| r.toggled()).map(|(i, _)| i).collect();
    let m = min_toggles.max(1);
    if window == 0 || toggles.len() < m {
        return Vec::new();
    }

    // spans of toggle positions [first, last] that fit m toggles in one window
    let mut spans: Vec<(usize, usize)> = Vec::new();
    for j in 0..=toggles.len() - m {
        let (a, b) = (j, j + m - 1);
        if toggles[b] - toggles[a] < window {
            match spans.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => spans.push((a, b)),
            }
        }
    }

    spans
        .into_iter()
        .map(|(a, b)| {
            let (first, last) = (steps[toggles[a]], steps[toggles[b]]);
            ChatterInterval {
                t_start: first.t,
                t_end: last.t,
                u_start: first.state_after.u,
                u_end: last.state_after.u,
                toggles: b - a + 1,
            }
        })
        .collect()
}

/// Groups consecutive rejected attempts into deadlock episodes.
pub fn detect_deadlock(log: &EventLog) -> Vec<DeadlockEpisode> {
    let mut episodes = Vec::new();
    let mut open: Option<DeadlockEpisode> = None;
    for rec in &log.records {
        match (rec.outcome, open.as_mut()) {
            (StepOutcome::NotConverged, Some(ep)) => ep.attempts += 1,
            (StepOutcome::NotConverged, None) => {
                open = Some(DeadlockEpisode {
                    t_step_start: rec.t_start(),
                    t_onset: rec.t,
                    u_onset: rec.state_after.u,
                    h_onset: rec.h_used,
                    attempts: 1,
                    exit_h: None,
                    exit_u: None,
                    exit_kind: DeadlockExit::Unresolved,
                })
            }
            (outcome, Some(_)) => {
                let mut ep = open.take().unwrap();
                ep.exit_h = Some(rec.h_used);
                ep.exit_u = Some(rec.state_after.u);
                ep.exit_kind = if outcome == StepOutcome::ConvergedByTolerance {
                    DeadlockExit::Tolerance
                } else {
                    DeadlockExit::Stabilized
                };
                episodes.push(ep);
            }
            (_, None) => {}
        }
    }
    episodes.extend(open);
    episodes
}
