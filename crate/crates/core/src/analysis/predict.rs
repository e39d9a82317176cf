//! Closed-form predictors for chattering stop and deadlock step bounds.
//!
//! # Chattering stop
//!
//! Take the output sitting at `w_max` with the integrator locked, and the
//! input starting to fall. The step at time `t` unlocks the integrator.
//! For the output to stay below the limit `k` steps later, the explicit
//! partitioned workflow needs
//!
//! ```text
//!   Kp * sum_{i=0}^{k} du_{t+ih} + h*Ki * (k*u_t + sum_{i=0}^{k-1} c_i * du_{t+ih}) < 0
//! ```
//!
//! and the execution-list workflow, whose integrator runs one step ahead,
//! the same with the second sum over `i = 1..=k`. The coefficient `c_i` is
//! `i` under the cumulative reading, which is what a step-by-step
//! simulation produces, and `k` under the literal reading of the printed
//! formula. Both are available through [`SummandReading`].
//!
//! # Deadlock
//!
//! With the implicit trapezoidal method, an unlocked iterate increments the
//! integrator by `h/2 * Ki * u`. The step escapes the toggling when that
//! increment falls below the tolerance, and avoids it altogether when the
//! proportional drop outweighs it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PiParams;
use crate::step::Method;

/// How the index inside the integral sum of the chattering condition is
/// read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SummandReading {
    /// `sum i*du`: the integrator picks up the ramp cumulatively.
    #[default]
    Cumulative,
    /// `sum k*du`, taken verbatim.
    Literal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatterPrediction {
    pub method: Method,
    pub reading: SummandReading,
    pub k_max: usize,
    /// The integrator stays unlocked when it is unlocked at an input below
    /// this value. Infinite for a pure proportional block.
    pub threshold_u: f64,
    /// Horizon at which the threshold is attained.
    pub binding_k: usize,
    pub per_k_thresholds: Vec<(usize, f64)>,
    /// Whether `u_ref` lies below the threshold.
    pub stays_unlocked_at_ref: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeadlockBounds {
    /// Input the bounds were evaluated at.
    pub u_ref: f64,
    /// Smallest step that avoids deadlock for a differentiable input.
    pub h_min_avoid: f64,
    /// Largest step that avoids deadlock for a discrete input increment.
    pub h_avoid_discrete: f64,
    /// Largest step that exits a deadlock under the tolerance.
    pub h_max_exit: f64,
}

fn check_gains(params: &PiParams) -> Result<()> {
    if !(params.kp >= 0.0 && params.ki >= 0.0 && params.kp.is_finite() && params.ki.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "gains must be finite and non-negative, got kp = {}, ki = {}",
            params.kp, params.ki
        )));
    }
    Ok(())
}

/// Range of the integral sum for horizon `k`.
fn integral_range(method: Method, k: usize) -> std::ops::Range<usize> {
    match method {
        Method::Epm => 0..k,
        Method::Elm => 1..k + 1,
        Method::Itm => unreachable!("no chattering condition for the implicit method"),
    }
}

/// Left-hand side of the chattering-stop condition at horizon `k` for an
/// explicit increment sequence.
///
/// `increments[i]` is the input increment at step `t + i*h`; the sequence
/// must hold at least `k + 1` entries. A negative value means the output is
/// below the limit `k` steps after unlocking.
pub fn chatter_condition(
    method: Method,
    params: &PiParams,
    h: f64,
    u_t: f64,
    increments: &[f64],
    k: usize,
    reading: SummandReading,
) -> Result<f64> {
    if method == Method::Itm {
        return Err(Error::InvalidArgument("the chattering condition applies to EPM and ELM only".into()));
    }
    if increments.len() < k + 1 {
        return Err(Error::InvalidArgument(format!(
            "horizon {k} needs {} increments, got {}",
            k + 1,
            increments.len()
        )));
    }
    let proportional: f64 = increments[..=k].iter().sum();
    let integral: f64 = integral_range(method, k)
        .map(|i| {
            let c = match reading {
                SummandReading::Cumulative => i as f64,
                SummandReading::Literal => k as f64,
            };
            c * increments[i]
        })
        .sum();
    Ok(params.kp * proportional + h * params.ki * (k as f64 * u_t + integral))
}

/// Input below which the integrator stays unlocked, for a constant input
/// increment `du_per_step < 0`.
///
/// For each horizon `k` in `1..=k_max` the condition is linear in `u_t` and
/// is solved as an equality; the threshold is the smallest of those roots.
pub fn chattering_threshold(
    method: Method,
    params: &PiParams,
    h: f64,
    du_per_step: f64,
    u_ref: f64,
    k_max: usize,
    reading: SummandReading,
) -> Result<ChatterPrediction> {
    check_gains(params)?;
    if method == Method::Itm {
        return Err(Error::InvalidArgument("chattering thresholds apply to EPM and ELM only".into()));
    }
    if !(du_per_step < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "input increment must be negative (falling input), got {du_per_step}"
        )));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("step size must be > 0, got {h}")));
    }
    if k_max < 1 {
        return Err(Error::InvalidArgument("k_max must be >= 1".into()));
    }

    let increments = vec![du_per_step; k_max + 1];
    let mut per_k = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        // condition(u) = a + b*u with b = h*Ki*k
        let a = chatter_condition(method, params, h, 0.0, &increments, k, reading)?;
        let b = h * params.ki * k as f64;
        let bound = if b == 0.0 {
            // proportional path alone: always satisfied for a falling input
            if a < 0.0 {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            }
        } else {
            -a / b
        };
        per_k.push((k, bound));
    }
    let (binding_k, threshold_u) = per_k
        .iter()
        .copied()
        .fold((0, f64::INFINITY), |best, (k, b)| if b < best.1 { (k, b) } else { best });
    let binding_k = if binding_k == 0 { k_max } else { binding_k };
    Ok(ChatterPrediction {
        method,
        reading,
        k_max,
        threshold_u,
        binding_k,
        per_k_thresholds: per_k,
        stays_unlocked_at_ref: u_ref < threshold_u,
    })
}

pub fn chattering_threshold_epm(
    params: &PiParams,
    h: f64,
    du_per_step: f64,
    u_ref: f64,
    k_max: usize,
) -> Result<ChatterPrediction> {
    chattering_threshold(Method::Epm, params, h, du_per_step, u_ref, k_max, SummandReading::Cumulative)
}

pub fn chattering_threshold_elm(
    params: &PiParams,
    h: f64,
    du_per_step: f64,
    u_ref: f64,
    k_max: usize,
) -> Result<ChatterPrediction> {
    chattering_threshold(Method::Elm, params, h, du_per_step, u_ref, k_max, SummandReading::Cumulative)
}

/// Upper step-size bound that avoids deadlock when the input moves by a
/// discrete increment `du_t` per step: `h < -(2 Kp/Ki) * du_t/u_t`.
pub fn min_step_avoid_deadlock_discrete(params: &PiParams, u_t: f64, du_t: f64) -> Result<f64> {
    check_gains(params)?;
    if !(u_t > 0.0) {
        return Err(Error::InvalidArgument(format!("input must be > 0 in the locked-high scenario, got {u_t}")));
    }
    if params.ki == 0.0 {
        return Ok(f64::INFINITY);
    }
    let bound = -(2.0 * params.kp / params.ki) * (du_t / u_t);
    // normalise -0.0
    Ok(bound + 0.0)
}

/// Minimum step size that keeps the integrator unlocked for a
/// differentiable input:
///
/// ```text
///   h > -2 Kp/Ki - 2 u_{t-h} / (udot_t + udot_{t-h})
/// ```
///
/// obtained by dividing `h*(udot_t + udot_prev) < -2(Kp/Ki)(udot_t +
/// udot_prev) - 2 u_prev` by the (negative) rate sum.
pub fn min_step_avoid_deadlock_differentiable(
    params: &PiParams,
    u_prev: f64,
    udot_t: f64,
    udot_prev: f64,
) -> Result<f64> {
    check_gains(params)?;
    let rate_sum = udot_t + udot_prev;
    if !(rate_sum < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "the input must be falling (udot_t + udot_prev < 0), got {rate_sum}"
        )));
    }
    if params.ki == 0.0 {
        return Err(Error::InvalidArgument("ki must be > 0".into()));
    }
    Ok(-2.0 * (params.kp / params.ki) - 2.0 * u_prev / rate_sum)
}

/// Largest step size for which a toggling implicit step exits by tolerance:
/// `h < 2*epsilon / (Ki*|u|)`. Infinite when `u = 0`.
pub fn max_step_exit_deadlock(params: &PiParams, u_t: f64, epsilon: f64) -> Result<f64> {
    check_gains(params)?;
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be > 0, got {epsilon}")));
    }
    let denom = params.ki * u_t.abs();
    if denom == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(2.0 * epsilon / denom)
}

/// All deadlock bounds at one operating point.
pub fn deadlock_bounds(
    params: &PiParams,
    u_ref: f64,
    udot_t: f64,
    udot_prev: f64,
    du_t: f64,
    epsilon: f64,
) -> Result<DeadlockBounds> {
    Ok(DeadlockBounds {
        u_ref,
        h_min_avoid: min_step_avoid_deadlock_differentiable(params, u_ref, udot_t, udot_prev)?,
        h_avoid_discrete: min_step_avoid_deadlock_discrete(params, u_ref, du_t)?,
        h_max_exit: max_step_exit_deadlock(params, u_ref, epsilon)?,
    })
}
