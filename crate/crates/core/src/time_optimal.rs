//! Minimum-time traversal of a single zone.
//!
//! Between fixed entry and exit states the fastest admissible control is
//! bang-bang: full acceleration up to a single switching point, then full
//! braking. The switching state, switch time and exit time are all closed
//! form. When the switching speed would exceed `v_max` the plan instead
//! accelerates to `v_max`, cruises, and brakes (flagged as saturated).
//!
//! All times in a [`BangBangPlan`] are measured from zone entry.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{Limits, VehicleState};
use crate::linalg;
use crate::topology::{Zone, ZoneKind};

/// Relative band inside which an exit speed counts as sitting on a
/// reachable-speed bound.
pub const BOUND_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TimeOptimalError {
    #[error("invalid zone boundary: {0}")]
    InvalidBoundary(String),
    #[error("exit speed {v_e} is on a reachable bound; no switching point ({profile:?})")]
    NoSwitchingPoint { v_e: f64, profile: Profile },
    #[error("exit speed {v_e} outside reachable range [{v_lo}, {v_hi}]")]
    Infeasible { v_e: f64, v_lo: f64, v_hi: f64 },
    #[error("time {t} outside plan window [{start}, {end}]")]
    OutsideWindow { t: f64, start: f64, end: f64 },
}

/// Entry and exit states of a zone, in path coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoneBoundary {
    pub p_s: f64,
    pub v_s: f64,
    pub p_e: f64,
    pub v_e: f64,
}

impl ZoneBoundary {
    pub const fn new(p_s: f64, v_s: f64, p_e: f64, v_e: f64) -> Self {
        Self { p_s, v_s, p_e, v_e }
    }

    pub fn length(&self) -> f64 {
        self.p_e - self.p_s
    }

    pub fn entry(&self) -> VehicleState {
        VehicleState::new(self.p_s, self.v_s)
    }

    pub fn exit(&self) -> VehicleState {
        VehicleState::new(self.p_e, self.v_e)
    }

    pub fn validate(&self, lim: &Limits) -> Result<(), TimeOptimalError> {
        let all = [self.p_s, self.v_s, self.p_e, self.v_e];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(TimeOptimalError::InvalidBoundary("non-finite value".into()));
        }
        if !(self.p_e > self.p_s) {
            return Err(TimeOptimalError::InvalidBoundary(format!(
                "exit position {} not beyond entry {}",
                self.p_e, self.p_s
            )));
        }
        for (name, v) in [("entry", self.v_s), ("exit", self.v_e)] {
            if !lim.contains_speed(v) {
                return Err(TimeOptimalError::InvalidBoundary(format!(
                    "{name} speed {v} outside [{}, {}]",
                    lim.v_min, lim.v_max
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    AccelThenDecel,
    PureAccel,
    PureDecel,
    AccelCruiseDecel,
}

/// One constant-control piece: on `[start, end)` (closed on the last
/// phase), `v(t) = accel·t + b` and `p(t) = ½·accel·t² + b·t + c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub start: f64,
    pub end: f64,
    pub accel: f64,
    pub b: f64,
    pub c: f64,
}

impl Phase {
    /// Solves `[[τ, 1], [1, 0]]·[b, c]ᵀ = [p − ½·u·τ², v − u·τ]ᵀ` for a phase
    /// whose state at time `τ` is `(p, v)`.
    fn anchored(start: f64, end: f64, accel: f64, tau: f64, at: VehicleState) -> Self {
        let m = [[tau, 1.0], [1.0, 0.0]];
        let q = [at.p - 0.5 * accel * tau * tau, at.v - accel * tau];
        let [b, c] = linalg::solve(&m, &q, 0.0).expect("phase system has determinant -1");
        Self {
            start,
            end,
            accel,
            b,
            c,
        }
    }

    pub fn eval(&self, t: f64) -> VehicleState {
        VehicleState {
            p: 0.5 * self.accel * t * t + self.b * t + self.c,
            v: self.accel * t + self.b,
        }
    }
}

/// Solution of the minimum-time problem for one zone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BangBangPlan {
    pub boundary: ZoneBoundary,
    /// Switching state. For pure profiles this is the entry (decel) or the
    /// exit (accel); for saturated plans it is where `v_max` is reached.
    pub p_c: f64,
    pub v_c: f64,
    pub t_c: f64,
    pub t_e: f64,
    pub profile: Profile,
    pub phases: Vec<Phase>,
}

impl BangBangPlan {
    pub fn saturated(&self) -> bool {
        self.profile == Profile::AccelCruiseDecel
    }

    fn phase_at(&self, t: f64) -> &Phase {
        self.phases
            .iter()
            .rev()
            .find(|ph| t >= ph.start)
            .unwrap_or(&self.phases[0])
    }

    /// State `t` seconds after zone entry.
    pub fn eval(&self, t: f64) -> Result<VehicleState, TimeOptimalError> {
        if !(0.0..=self.t_e).contains(&t) {
            return Err(TimeOptimalError::OutsideWindow {
                t,
                start: 0.0,
                end: self.t_e,
            });
        }
        Ok(self.phase_at(t).eval(t))
    }

    /// Control at absolute time `t` for a vehicle that entered at `t_entry`.
    pub fn control(&self, t: f64, t_entry: f64) -> Result<f64, TimeOptimalError> {
        let end = t_entry + self.t_e;
        if t < t_entry || t > end {
            return Err(TimeOptimalError::OutsideWindow { t, start: t_entry, end });
        }
        let ph = self
            .phases
            .iter()
            .rev()
            .find(|ph| t >= t_entry + ph.start)
            .unwrap_or(&self.phases[0]);
        Ok(ph.accel)
    }
}

/// Range of exit speeds reachable over `[p_s, p_e]` from `v_s`, clipped to
/// the speed limits. When full braking would stop the vehicle before `p_e`
/// the lower end is `v_min`.
pub fn final_speed_bounds(p_s: f64, v_s: f64, p_e: f64, lim: &Limits) -> (f64, f64) {
    let len = p_e - p_s;
    let hi = (2.0 * lim.u_max * len + v_s * v_s).sqrt();
    let lo = (2.0 * lim.u_min * len + v_s * v_s).max(0.0).sqrt();
    (lo.max(lim.v_min), hi.min(lim.v_max))
}

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() <= BOUND_REL_TOL * a.abs().max(b.abs())
}

/// Which single-phase case (if any) the exit speed sits on.
fn classify(b: &ZoneBoundary, lim: &Limits) -> Result<Option<Profile>, TimeOptimalError> {
    let len = b.length();
    let raw_hi = (2.0 * lim.u_max * len + b.v_s * b.v_s).sqrt();
    let lo_sq = 2.0 * lim.u_min * len + b.v_s * b.v_s;
    let (v_lo, v_hi) = final_speed_bounds(b.p_s, b.v_s, b.p_e, lim);

    if near(b.v_e, raw_hi) && raw_hi <= lim.v_max * (1.0 + BOUND_REL_TOL) {
        return Ok(Some(Profile::PureAccel));
    }
    if lo_sq >= 0.0 && near(b.v_e, lo_sq.sqrt()) && lo_sq.sqrt() >= lim.v_min * (1.0 - BOUND_REL_TOL) {
        return Ok(Some(Profile::PureDecel));
    }
    if b.v_e < v_lo || b.v_e > v_hi {
        return Err(TimeOptimalError::Infeasible { v_e: b.v_e, v_lo, v_hi });
    }
    Ok(None)
}

/// Unsaturated switching state: accelerate at `u_max` from the entry and
/// brake at `u_min` into the exit.
fn raw_switching_state(b: &ZoneBoundary, lim: &Limits) -> (f64, f64) {
    let p_c = (b.v_e * b.v_e - b.v_s * b.v_s + 2.0 * (lim.u_max * b.p_s - lim.u_min * b.p_e))
        / (2.0 * (lim.u_max - lim.u_min));
    let v_c = (b.v_s * b.v_s + 2.0 * lim.u_max * (p_c - b.p_s)).sqrt();
    (p_c, v_c)
}

/// Switching state `(p_c, v_c)` of the accelerate-then-brake profile.
///
/// Fails with [`TimeOptimalError::NoSwitchingPoint`] when the exit speed is
/// one of the reachable bounds; the plan is then a single phase.
pub fn switching_state(b: &ZoneBoundary, lim: &Limits) -> Result<(f64, f64), TimeOptimalError> {
    b.validate(lim)?;
    if let Some(profile) = classify(b, lim)? {
        return Err(TimeOptimalError::NoSwitchingPoint { v_e: b.v_e, profile });
    }
    Ok(raw_switching_state(b, lim))
}

/// Minimum-time plan through one zone.
pub fn plan_min_time(b: &ZoneBoundary, lim: &Limits) -> Result<BangBangPlan, TimeOptimalError> {
    b.validate(lim)?;
    let entry = b.entry();
    let exit = b.exit();
    let plan = match classify(b, lim)? {
        Some(Profile::PureAccel) => {
            let t_e = (b.v_e - b.v_s) / lim.u_max;
            BangBangPlan {
                boundary: *b,
                p_c: b.p_e,
                v_c: b.v_e,
                t_c: t_e,
                t_e,
                profile: Profile::PureAccel,
                phases: vec![Phase::anchored(0.0, t_e, lim.u_max, 0.0, entry)],
            }
        }
        Some(Profile::PureDecel) => {
            let t_e = (b.v_e - b.v_s) / lim.u_min;
            BangBangPlan {
                boundary: *b,
                p_c: b.p_s,
                v_c: b.v_s,
                t_c: 0.0,
                t_e,
                profile: Profile::PureDecel,
                phases: vec![Phase::anchored(0.0, t_e, lim.u_min, 0.0, entry)],
            }
        }
        _ => {
            let (p_c, v_c) = raw_switching_state(b, lim);
            if v_c > lim.v_max {
                saturated_plan(b, lim)
            } else {
                let t_c = (v_c - b.v_s) / lim.u_max;
                let t_e = t_c + (b.v_e - v_c) / lim.u_min;
                BangBangPlan {
                    boundary: *b,
                    p_c,
                    v_c,
                    t_c,
                    t_e,
                    profile: Profile::AccelThenDecel,
                    phases: vec![
                        Phase::anchored(0.0, t_c, lim.u_max, 0.0, entry),
                        Phase::anchored(t_c, t_e, lim.u_min, t_e, exit),
                    ],
                }
            }
        }
    };
    Ok(plan)
}

fn saturated_plan(b: &ZoneBoundary, lim: &Limits) -> BangBangPlan {
    let vm = lim.v_max;
    let d_acc = (vm * vm - b.v_s * b.v_s) / (2.0 * lim.u_max);
    let d_dec = (b.v_e * b.v_e - vm * vm) / (2.0 * lim.u_min);
    let d_cruise = (b.length() - d_acc - d_dec).max(0.0);
    let t_acc = (vm - b.v_s) / lim.u_max;
    let t_cruise_end = t_acc + d_cruise / vm;
    let t_e = t_cruise_end + (b.v_e - vm) / lim.u_min;
    let p_c = b.p_s + d_acc;

    let mut phases = Vec::with_capacity(3);
    if t_acc > 0.0 {
        phases.push(Phase::anchored(0.0, t_acc, lim.u_max, 0.0, b.entry()));
    }
    if t_cruise_end > t_acc {
        phases.push(Phase::anchored(
            t_acc,
            t_cruise_end,
            0.0,
            t_acc,
            VehicleState::new(p_c, vm),
        ));
    }
    if t_e > t_cruise_end {
        phases.push(Phase::anchored(t_cruise_end, t_e, lim.u_min, t_e, b.exit()));
    }
    BangBangPlan {
        boundary: *b,
        p_c,
        v_c: vm,
        t_c: t_acc,
        t_e,
        profile: Profile::AccelCruiseDecel,
        phases,
    }
}

/// Shortest traversal time of `zone`: the minimum-time plan for regular
/// zones, length over the merging speed for merging zones.
pub fn process_time(zone: &Zone, b: &ZoneBoundary, lim: &Limits, v_z: f64) -> Result<f64, TimeOptimalError> {
    if b.length() == 0.0 {
        return Ok(0.0);
    }
    match zone.kind {
        ZoneKind::Regular => Ok(plan_min_time(b, lim)?.t_e),
        ZoneKind::Merging => {
            if b.v_s != v_z || b.v_e != v_z {
                return Err(TimeOptimalError::InvalidBoundary(format!(
                    "merging zone {} must be crossed at {v_z} m/s",
                    zone.id
                )));
            }
            Ok(b.length() / v_z)
        }
    }
}

/// Feedback law of `plan` at absolute time `t` for entry time `t_entry`.
pub fn feedback_control(plan: &BangBangPlan, t: f64, t_entry: f64) -> Result<f64, TimeOptimalError> {
    plan.control(t, t_entry)
}

/// State on `plan`, `t` seconds after zone entry.
pub fn eval_trajectory(plan: &BangBangPlan, t: f64) -> Result<VehicleState, TimeOptimalError> {
    plan.eval(t)
}
