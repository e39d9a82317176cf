//! The PI block with conditional anti-windup and output hard limiter.
//!
//! The block carries one differential variable `x` (integrator output) and
//! two algebraic variables, the pre-limit output `y` and the limited output
//! `w`:
//!
//! ```text
//!   dx/dt = z_i * Ki * u
//!       0 = (Kp * u + x) - y
//!       0 = (z_i * y + z_l * w_min + z_u * w_max) - w
//! ```
//!
//! The status flags `z_i`, `z_u`, `z_l` are one-hot. Keying on `z_i` splits
//! the system into two equation sets: integrator frozen with `w` pinned to
//! a limit, or integrator running with `w = y`. Every integrator in this
//! crate evaluates the block only through the functions in this module.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gains and output limits of the PI block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiParams {
    pub kp: f64,
    pub ki: f64,
    pub w_min: f64,
    pub w_max: f64,
}

impl PiParams {
    /// Builds validated parameters. Requires `kp >= 0`, `ki > 0` and
    /// `w_min < w_max`, all finite.
    pub fn new(kp: f64, ki: f64, w_min: f64, w_max: f64) -> Result<Self> {
        let params = Self { kp, ki, w_min, w_max };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [("kp", self.kp), ("ki", self.ki), ("w_min", self.w_min), ("w_max", self.w_max)];
        if let Some((name, _)) = fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidParams(format!("{name} must be finite")));
        }
        if self.kp < 0.0 {
            return Err(Error::InvalidParams(format!("kp must be >= 0, got {}", self.kp)));
        }
        if self.ki <= 0.0 {
            return Err(Error::InvalidParams(format!("ki must be > 0, got {}", self.ki)));
        }
        if self.w_min >= self.w_max {
            return Err(Error::InvalidParams(format!(
                "w_min < w_max violated: w_min = {}, w_max = {}",
                self.w_min, self.w_max
            )));
        }
        Ok(())
    }
}

/// Which of the three limiter regions the block is in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    /// Integrator running, `w = y` (`z_i`).
    Within,
    /// Output at the upper limit, integrator frozen (`z_u`).
    Upper,
    /// Output at the lower limit, integrator frozen (`z_l`).
    Lower,
}

/// One-hot limiter status `(z_i, z_u, z_l)`.
///
/// Stored as a single [`Region`], so the one-hot property holds by
/// construction; the flag accessors expose the triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LimiterState(Region);

impl LimiterState {
    pub const WITHIN: Self = Self(Region::Within);
    pub const UPPER: Self = Self(Region::Upper);
    pub const LOWER: Self = Self(Region::Lower);

    pub fn new(region: Region) -> Self {
        Self(region)
    }

    /// Builds a status from explicit flags, rejecting anything that is not
    /// exactly one-hot.
    pub fn from_flags(z_i: bool, z_u: bool, z_l: bool) -> Result<Self> {
        match (z_i, z_u, z_l) {
            (true, false, false) => Ok(Self::WITHIN),
            (false, true, false) => Ok(Self::UPPER),
            (false, false, true) => Ok(Self::LOWER),
            _ => Err(Error::InvalidArgument(format!(
                "limiter flags must be one-hot, got z_i={z_i} z_u={z_u} z_l={z_l}"
            ))),
        }
    }

    pub fn region(self) -> Region {
        self.0
    }

    pub fn z_i(self) -> bool {
        self.0 == Region::Within
    }

    pub fn z_u(self) -> bool {
        self.0 == Region::Upper
    }

    pub fn z_l(self) -> bool {
        self.0 == Region::Lower
    }

    /// `(z_i, z_u, z_l)` as 0/1 integers.
    pub fn flags(self) -> (u8, u8, u8) {
        (self.z_i() as u8, self.z_u() as u8, self.z_l() as u8)
    }

    /// True when the integrator is frozen (either limit).
    pub fn is_limited(self) -> bool {
        !self.z_i()
    }
}

impl fmt::Display for LimiterState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.0 {
            Region::Within => "z_i",
            Region::Upper => "z_u",
            Region::Lower => "z_l",
        })
    }
}

/// Controller variables at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub u: f64,
    pub limiter: LimiterState,
}

impl SimState {
    /// Builds a consistent state from the integrator value and input: `y`
    /// and `w` are evaluated under `limiter`.
    pub fn from_parts(params: &PiParams, t: f64, x: f64, u: f64, limiter: LimiterState) -> Self {
        let (y, w) = eval_algebraic(params, x, u, limiter);
        Self { t, x, y, w, u, limiter }
    }

    /// Like [`SimState::from_parts`], but with the limiter status taken from
    /// the freshly evaluated `y`.
    pub fn settled(params: &PiParams, t: f64, x: f64, u: f64) -> Self {
        let y = params.kp * u + x;
        Self::from_parts(params, t, x, u, update_aw_status(params, y))
    }
}

/// Evaluates the algebraic rows of the active equation set.
///
/// Returns `(y, w)` with `y = kp*u + x` and `w` equal to `y`, `w_max` or
/// `w_min` depending on the status.
pub fn eval_algebraic(params: &PiParams, x: f64, u: f64, limiter: LimiterState) -> (f64, f64) {
    let y = params.kp * u + x;
    let w = match limiter.region() {
        Region::Within => y,
        Region::Upper => params.w_max,
        Region::Lower => params.w_min,
    };
    (y, w)
}

/// Integrator derivative: `ki*u` while within limits, zero otherwise.
pub fn rate(params: &PiParams, u: f64, limiter: LimiterState) -> f64 {
    if limiter.z_i() {
        params.ki * u
    } else {
        0.0
    }
}

/// Limiter status implied by the pre-limit output. Equality with a limit
/// counts as limited.
pub fn update_aw_status(params: &PiParams, y: f64) -> LimiterState {
    if y >= params.w_max {
        LimiterState::UPPER
    } else if y <= params.w_min {
        LimiterState::LOWER
    } else {
        LimiterState::WITHIN
    }
}
