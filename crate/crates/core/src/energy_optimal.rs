//! Minimum-∫u² motion between two timed states.
//!
//! With no active constraint the optimal control is affine in time, so
//! position is a cubic: `u = a·t + b`, `v = ½a·t² + b·t + c`,
//! `p = ⅙a·t³ + ½b·t² + c·t + d`. The four coefficients come from the four
//! boundary conditions.
//!
//! Coefficients are kept about the start of the horizon. In absolute time
//! the terms of `p` late in a run are of order 10⁷ m and cancel, which costs
//! the evaluated state about nine digits; [`CubicCoeffs::absolute`] gives
//! the absolute-time form when it is wanted.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{check_limits, LimitViolation, Limits, VehicleState};
use crate::linalg;
use crate::time_optimal::ZoneBoundary;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnergyError {
    #[error("degenerate horizon [{t_entry}, {t_exit}]")]
    DegenerateHorizon { t_entry: f64, t_exit: f64 },
    #[error("replan time {t_now} outside [{t_entry}, {t_exit})")]
    ReplanOutsideHorizon { t_now: f64, t_entry: f64, t_exit: f64 },
}

/// Zone boundary states pinned to entry and exit times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimedBoundary {
    pub boundary: ZoneBoundary,
    pub t_entry: f64,
    pub t_exit: f64,
}

impl TimedBoundary {
    pub fn new(boundary: ZoneBoundary, t_entry: f64, t_exit: f64) -> Self {
        Self {
            boundary,
            t_entry,
            t_exit,
        }
    }

    pub fn horizon(&self) -> f64 {
        self.t_exit - self.t_entry
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t_entry && t <= self.t_exit
    }
}

/// Cubic in `τ = t − origin`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubicCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    #[serde(default)]
    pub origin: f64,
}

impl CubicCoeffs {
    /// Coefficients in absolute time.
    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        CubicCoeffs {
            a,
            b,
            c,
            d,
            origin: 0.0,
        }
    }

    /// The same cubic about another origin.
    pub fn with_origin(&self, origin: f64) -> CubicCoeffs {
        let CubicCoeffs { a, b, c, d, .. } = *self;
        let dt = origin - self.origin;
        CubicCoeffs {
            a,
            b: b + a * dt,
            c: c + b * dt + a * dt * dt / 2.0,
            d: d + c * dt + b * dt * dt / 2.0 + a * dt * dt * dt / 6.0,
            origin,
        }
    }

    /// The same cubic with origin 0, i.e. coefficients in absolute time.
    pub fn absolute(&self) -> CubicCoeffs {
        self.with_origin(0.0)
    }

    pub fn control(&self, t: f64) -> f64 {
        let t = t - self.origin;
        self.a * t + self.b
    }

    pub fn speed(&self, t: f64) -> f64 {
        let t = t - self.origin;
        (0.5 * self.a * t + self.b) * t + self.c
    }

    pub fn position(&self, t: f64) -> f64 {
        let t = t - self.origin;
        ((self.a / 6.0 * t + 0.5 * self.b) * t + self.c) * t + self.d
    }

    pub fn state(&self, t: f64) -> VehicleState {
        VehicleState::new(self.position(t), self.speed(t))
    }
}

/// A point on a cubic trajectory; `extrapolated` is set outside the horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergySample {
    pub u: f64,
    pub state: VehicleState,
    pub extrapolated: bool,
}

/// Solves the 4×4 boundary system by elimination with partial pivoting, in
/// time measured from `t_entry`.
pub fn solve_energy(tb: &TimedBoundary) -> Result<CubicCoeffs, EnergyError> {
    let (t0, t1) = (tb.t_entry, tb.t_exit);
    let degenerate = EnergyError::DegenerateHorizon {
        t_entry: t0,
        t_exit: t1,
    };
    if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
        return Err(degenerate);
    }
    let rows = |t: f64| [[t * t * t / 6.0, t * t / 2.0, t, 1.0], [t * t / 2.0, t, 1.0, 0.0]];
    let [r0, r1] = rows(0.0);
    let [r2, r3] = rows(t1 - t0);
    let m = [r0, r1, r2, r3];
    let b = &tb.boundary;
    let q = [b.p_s, b.v_s, b.p_e, b.v_e];
    let [a, b, c, d] = linalg::solve(&m, &q, 1e-14).ok_or(degenerate)?;
    Ok(CubicCoeffs { a, b, c, d, origin: t0 })
}

/// Control and state of `c` at absolute time `t`.
pub fn eval_energy(c: &CubicCoeffs, t: f64) -> (f64, VehicleState) {
    (c.control(t), c.state(t))
}

/// Like [`eval_energy`], flagging evaluation outside the horizon of `tb`.
pub fn sample_energy(c: &CubicCoeffs, tb: &TimedBoundary, t: f64) -> EnergySample {
    EnergySample {
        u: c.control(t),
        state: c.state(t),
        extrapolated: !tb.contains(t),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimedViolation {
    pub t: f64,
    pub violation: LimitViolation,
}

/// Bounds the unconstrained solution breaks on its horizon. Control is
/// affine, so its extremes are at the endpoints; speed is quadratic, so its
/// extremes are at the endpoints or the vertex.
pub fn check_inactive_constraints(c: &CubicCoeffs, tb: &TimedBoundary, lim: &Limits) -> Vec<TimedViolation> {
    let mut candidates = vec![tb.t_entry, tb.t_exit];
    if c.a != 0.0 {
        let vertex = c.origin - c.b / c.a;
        if vertex > tb.t_entry && vertex < tb.t_exit {
            candidates.push(vertex);
        }
    }
    let mut out = Vec::new();
    for (k, &t) in candidates.iter().enumerate() {
        let u = c.control(t);
        let v = c.speed(t);
        for violation in check_limits(u, v, lim) {
            let is_control = matches!(
                violation,
                LimitViolation::ControlAboveMax { .. } | LimitViolation::ControlBelowMin { .. }
            );
            // the vertex is only a speed extremum
            if k == 2 && is_control {
                continue;
            }
            out.push(TimedViolation { t, violation });
        }
    }
    out
}

/// Re-solves from the state on `c` at `t_now`, keeping the exit condition.
pub fn replan_from(c: &CubicCoeffs, t_now: f64, tb: &TimedBoundary) -> Result<CubicCoeffs, EnergyError> {
    replan_from_state(c.state(t_now), t_now, tb)
}

/// Re-solves from an arbitrary measured state at `t_now`.
pub fn replan_from_state(state: VehicleState, t_now: f64, tb: &TimedBoundary) -> Result<CubicCoeffs, EnergyError> {
    if !(t_now >= tb.t_entry && t_now < tb.t_exit) {
        return Err(EnergyError::ReplanOutsideHorizon {
            t_now,
            t_entry: tb.t_entry,
            t_exit: tb.t_exit,
        });
    }
    let mut boundary = tb.boundary;
    boundary.p_s = state.p;
    boundary.v_s = state.v;
    solve_energy(&TimedBoundary::new(boundary, t_now, tb.t_exit))
}
