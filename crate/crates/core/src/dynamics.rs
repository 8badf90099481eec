//! Double-integrator vehicle model.
//!
//! Positions are arclength along a vehicle's path, measured from the point
//! where it entered the control zone. Every vehicle shares one set of
//! [`Limits`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Position (m) and speed (m/s) of a vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub p: f64,
    pub v: f64,
}

impl VehicleState {
    pub const fn new(p: f64, v: f64) -> Self {
        Self { p, v }
    }
}

/// Control and speed bounds shared by all vehicles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Limits {
    pub u_min: f64,
    pub u_max: f64,
    pub v_min: f64,
    pub v_max: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("negative time step {0}")]
    NegativeStep(f64),
    #[error("invalid limits: {0}")]
    InvalidLimits(&'static str),
}

impl Limits {
    pub fn new(u_min: f64, u_max: f64, v_min: f64, v_max: f64) -> Result<Self, DynamicsError> {
        let lim = Self {
            u_min,
            u_max,
            v_min,
            v_max,
        };
        lim.validate()?;
        Ok(lim)
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.u_min < 0.0) {
            return Err(DynamicsError::InvalidLimits("u_min must be negative"));
        }
        if !(self.u_max > 0.0) {
            return Err(DynamicsError::InvalidLimits("u_max must be positive"));
        }
        if !(self.v_min > 0.0) {
            return Err(DynamicsError::InvalidLimits("v_min must be positive"));
        }
        if !(self.v_max >= self.v_min) || !self.v_max.is_finite() {
            return Err(DynamicsError::InvalidLimits("v_max must be finite and at least v_min"));
        }
        Ok(())
    }

    pub fn contains_speed(&self, v: f64) -> bool {
        v >= self.v_min && v <= self.v_max
    }
}

impl Default for Limits {
    /// ±3 m/s² and a 1..25 m/s speed band.
    fn default() -> Self {
        Self {
            u_min: -3.0,
            u_max: 3.0,
            v_min: 1.0,
            v_max: 25.0,
        }
    }
}

/// Advances `s` under constant control `u` for `dt` seconds, in closed form.
pub fn integrate_const_accel(s: VehicleState, u: f64, dt: f64) -> Result<VehicleState, DynamicsError> {
    if dt < 0.0 {
        return Err(DynamicsError::NegativeStep(dt));
    }
    Ok(VehicleState {
        p: s.p + s.v * dt + 0.5 * u * dt * dt,
        v: s.v + u * dt,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LimitViolation {
    ControlBelowMin { u: f64, bound: f64 },
    ControlAboveMax { u: f64, bound: f64 },
    SpeedBelowMin { v: f64, bound: f64 },
    SpeedAboveMax { v: f64, bound: f64 },
}

/// Returns every bound that `(u, v)` violates; empty means admissible.
pub fn check_limits(u: f64, v: f64, lim: &Limits) -> Vec<LimitViolation> {
    let mut out = Vec::new();
    if u < lim.u_min {
        out.push(LimitViolation::ControlBelowMin { u, bound: lim.u_min });
    }
    if u > lim.u_max {
        out.push(LimitViolation::ControlAboveMax { u, bound: lim.u_max });
    }
    if v < lim.v_min {
        out.push(LimitViolation::SpeedBelowMin { v, bound: lim.v_min });
    }
    if v > lim.v_max {
        out.push(LimitViolation::SpeedAboveMax { v, bound: lim.v_max });
    }
    out
}
