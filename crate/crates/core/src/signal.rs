//! Input signals `u(t)`.
//!
//! All signals are continuous and piecewise linear. The derivative is the
//! right-hand slope, so a step that starts exactly on a breakpoint sees the
//! slope of the segment it is entering.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SignalSpec {
    /// Rises at `slope` until `t_down`, falls at `slope` until `t_up`, then
    /// rises again.
    TriangularRamp {
        u0: f64,
        t_down: f64,
        t_up: f64,
        slope: f64,
    },
    Constant {
        value: f64,
    },
    /// Linear interpolation between `(t, u)` breakpoints; the end values
    /// are held outside the covered range.
    PiecewiseLinear {
        points: Vec<(f64, f64)>,
    },
}

impl SignalSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            SignalSpec::TriangularRamp { u0, t_down, t_up, slope } => {
                if ![u0, t_down, t_up, slope].iter().all(|v| v.is_finite()) {
                    return Err(Error::InvalidSignal("triangular-ramp fields must be finite".into()));
                }
                if !(*t_down >= 0.0 && t_down < t_up) {
                    return Err(Error::InvalidSignal(format!(
                        "triangular-ramp needs 0 <= t_down < t_up, got t_down = {t_down}, t_up = {t_up}"
                    )));
                }
                if *slope < 0.0 {
                    return Err(Error::InvalidSignal(format!("triangular-ramp slope must be >= 0, got {slope}")));
                }
            }
            SignalSpec::Constant { value } => {
                if !value.is_finite() {
                    return Err(Error::InvalidSignal("constant value must be finite".into()));
                }
            }
            SignalSpec::PiecewiseLinear { points } => {
                if points.is_empty() {
                    return Err(Error::InvalidSignal("piecewise-linear needs at least one breakpoint".into()));
                }
                if points.iter().any(|(t, u)| !t.is_finite() || !u.is_finite()) {
                    return Err(Error::InvalidSignal("piecewise-linear breakpoints must be finite".into()));
                }
                if let Some(w) = points.windows(2).find(|w| w[1].0 <= w[0].0) {
                    return Err(Error::InvalidSignal(format!(
                        "piecewise-linear breakpoints must be strictly increasing in time: {} then {}",
                        w[0].0, w[1].0
                    )));
                }
            }
        }
        Ok(())
    }

    /// Value of the signal at time `t`.
    pub fn sample(&self, t: f64) -> f64 {
        match self {
            SignalSpec::TriangularRamp { u0, t_down, t_up, slope } => {
                let peak = u0 + slope * t_down;
                if t <= *t_down {
                    u0 + slope * t
                } else if t <= *t_up {
                    peak - slope * (t - t_down)
                } else {
                    let valley = peak - slope * (t_up - t_down);
                    valley + slope * (t - t_up)
                }
            }
            SignalSpec::Constant { value } => *value,
            SignalSpec::PiecewiseLinear { points } => {
                let (t0, u0) = points[0];
                if t <= t0 {
                    return u0;
                }
                for seg in points.windows(2) {
                    let ((ta, ua), (tb, ub)) = (seg[0], seg[1]);
                    if t <= tb {
                        return ua + (ub - ua) * (t - ta) / (tb - ta);
                    }
                }
                points[points.len() - 1].1
            }
        }
    }

    /// Right-hand derivative of the signal at time `t`.
    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            SignalSpec::TriangularRamp { t_down, t_up, slope, .. } => {
                if t < *t_down || t >= *t_up {
                    *slope
                } else {
                    -slope
                }
            }
            SignalSpec::Constant { .. } => 0.0,
            SignalSpec::PiecewiseLinear { points } => points
                .windows(2)
                .find(|seg| t >= seg[0].0 && t < seg[1].0)
                .map(|seg| (seg[1].1 - seg[0].1) / (seg[1].0 - seg[0].0))
                .unwrap_or(0.0),
        }
    }

    /// Largest absolute slope over the whole signal.
    pub fn max_slope(&self) -> f64 {
        match self {
            SignalSpec::TriangularRamp { slope, .. } => slope.abs(),
            SignalSpec::Constant { .. } => 0.0,
            SignalSpec::PiecewiseLinear { points } => points
                .windows(2)
                .map(|seg| ((seg[1].1 - seg[0].1) / (seg[1].0 - seg[0].0)).abs())
                .fold(0.0, f64::max),
        }
    }

    /// Earliest time at which the signal passes through `u` while falling.
    ///
    /// On a falling segment that starts exactly at `u` the segment start is
    /// returned.
    pub fn falling_crossing(&self, u: f64) -> Option<f64> {
        let mut edges = vec![0.0];
        edges.extend(self.breakpoints().into_iter().filter(|&b| b > 0.0));
        edges.push(f64::INFINITY);
        edges.windows(2).find_map(|seg| {
            let (t0, t1) = (seg[0], seg[1]);
            let slope = self.derivative(t0);
            if slope >= 0.0 {
                return None;
            }
            let u0 = self.sample(t0);
            let t = t0 + (u - u0) / slope;
            (t >= t0 && t <= t1).then_some(t)
        })
    }

    /// Breakpoint times in increasing order.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            SignalSpec::TriangularRamp { t_down, t_up, .. } => vec![*t_down, *t_up],
            SignalSpec::Constant { .. } => Vec::new(),
            SignalSpec::PiecewiseLinear { points } => points.iter().map(|p| p.0).collect(),
        }
    }
}
