//! Decentralized sequential scheduling of zone entry times.
//!
//! Each arriving vehicle, in queue order, reads the schedules already
//! committed to the coordinator and fixes its own entry time for every zone
//! on its path:
//!
//! * the release time of the next zone is the current entry time plus the
//!   minimum-time process time of the current zone;
//! * the entry time is the earliest headway-feasible time at or after the
//!   release;
//! * when the entry equals the release the current zone is driven
//!   time-optimally, otherwise the current zone absorbs the delay with a
//!   minimum-energy trajectory over the fixed horizon.
//!
//! On top of the headway, lanes are first-in-first-out: a vehicle may not
//! enter a lane zone ahead of a committed vehicle travelling the same way,
//! nor leave it less than one headway after that vehicle. Merging zones are
//! crossed at constant speed, so their delay is pushed back to the entry of
//! the merging zone itself.

mod memory;
mod queue;
mod slot;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use memory::{commit, CommitError, DroneMemory, Occupancy};
pub use queue::{Queue, QueueEntry, QueueError};
pub use slot::{earliest_feasible_entry, within_headway, DeadlineMissed};

use crate::dynamics::{Limits, VehicleState};
use crate::energy_optimal::{
    check_inactive_constraints, solve_energy, CubicCoeffs, EnergyError, TimedBoundary, TimedViolation,
};
use crate::time_optimal::{plan_min_time, process_time, BangBangPlan, TimeOptimalError, ZoneBoundary};
use crate::topology::{conflict_zones, Path, PathId, Topology, ZoneId, ZoneKind};
use slot::{first_free, Block};

pub type CavId = u32;

/// Extra clearance on constraints carried back through a merging zone, so
/// that re-checking them after adding the crossing time cannot fail on
/// rounding.
const CARRY_MARGIN: f64 = 1e-9;

/// Exit floors that beat the release by less than this are treated as met.
/// They come from another vehicle's exit plus a headway and otherwise turn
/// rounding noise into a spurious delayed zone.
const EXIT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    TimeOptimal,
    EnergyOptimal,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::TimeOptimal => "time_optimal",
            Mode::EnergyOptimal => "energy_optimal",
        }
    }
}

/// How deadlines are assigned to zone entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeadlineRule {
    #[default]
    Unbounded,
    /// `D(next) = T(current) + length(current) / v_min`.
    MinSpeedCap,
}

/// Motion used inside one zone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ZoneMotion {
    MinTime {
        plan: BangBangPlan,
    },
    MinEnergy {
        coeffs: CubicCoeffs,
        horizon: TimedBoundary,
    },
    ConstantSpeed {
        speed: f64,
    },
}

impl ZoneMotion {
    /// Control and state at absolute time `t` for a zone entered at `t_entry`.
    pub fn sample(&self, t: f64, t_entry: f64, p_entry: f64) -> (f64, VehicleState) {
        match self {
            ZoneMotion::MinTime { plan } => {
                let tau = (t - t_entry).clamp(0.0, plan.t_e);
                let u = plan
                    .control(t.clamp(t_entry, t_entry + plan.t_e), t_entry)
                    .unwrap_or(0.0);
                let s = plan.eval(tau).expect("clamped into plan window");
                (u, s)
            }
            ZoneMotion::MinEnergy { coeffs, .. } => (coeffs.control(t), coeffs.state(t)),
            ZoneMotion::ConstantSpeed { speed } => (0.0, VehicleState::new(p_entry + speed * (t - t_entry), *speed)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub zone: ZoneId,
    pub kind: ZoneKind,
    /// Entry time `T`.
    pub entry_time: f64,
    /// Release time `R`.
    pub release: f64,
    /// Deadline `D`; `None` is unbounded.
    pub deadline: Option<f64>,
    /// Minimum-time process time `P`.
    pub process_time: f64,
    pub mode: Mode,
    pub boundary: ZoneBoundary,
    /// Exit time of this zone: the next entry time, or the control-zone exit.
    pub exit_time: f64,
    pub motion: ZoneMotion,
    /// Bounds broken by an unconstrained minimum-energy solution.
    pub energy_violations: Vec<TimedViolation>,
}

impl ScheduleEntry {
    pub fn saturated(&self) -> bool {
        matches!(&self.motion, ZoneMotion::MinTime { plan } if plan.saturated())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub cav_id: CavId,
    pub path_id: PathId,
    pub arrival: f64,
    pub entries: Vec<ScheduleEntry>,
    /// Earliest control-zone exit given the last entry time.
    pub exit_release: f64,
    pub exit_time: f64,
}

impl Schedule {
    pub fn entry(&self, zone: ZoneId) -> Option<&ScheduleEntry> {
        self.entries.iter().find(|e| e.zone == zone)
    }

    pub fn entry_time(&self, zone: ZoneId) -> Option<f64> {
        self.entry(zone).map(|e| e.entry_time)
    }

    pub fn travel_time(&self) -> f64 {
        self.exit_time - self.arrival
    }

    /// Release/entry pair that decides the mode of entry `k`: the next
    /// zone's, or the exit's for the last zone.
    pub fn next_release_pair(&self, k: usize) -> (f64, f64) {
        match self.entries.get(k + 1) {
            Some(n) => (n.release, n.entry_time),
            None => (self.exit_release, self.exit_time),
        }
    }
}

/// Knobs shared by every vehicle's scheduling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchedulingParams {
    pub limits: Limits,
    pub headway: f64,
    /// Speed at the control-zone entry.
    pub entry_speed: f64,
    /// Speed at the control-zone exit.
    pub exit_speed: f64,
    pub deadline_rule: DeadlineRule,
}

/// What committed vehicles impose on one zone of the arriving vehicle.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ZoneConstraints {
    /// Committed entry times of vehicles whose path shares this zone.
    pub occupied: Vec<f64>,
    /// First-in-first-out floor on the entry time.
    pub min_entry: Option<f64>,
    /// Floor on the exit time from this zone.
    pub min_exit: Option<f64>,
}

/// Constraints from every lower-order vehicle, keyed by zone.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConflictContext {
    pub zones: BTreeMap<ZoneId, ZoneConstraints>,
}

impl ConflictContext {
    /// Collects the constraints committed schedules place on `path`.
    pub fn build(path: &Path, memory: &DroneMemory, topo: &Topology) -> Self {
        let h = memory.headway();
        let mut zones: BTreeMap<ZoneId, ZoneConstraints> = path
            .zone_sequence
            .iter()
            .map(|z| (*z, ZoneConstraints::default()))
            .collect();
        for other in memory.schedules() {
            let Some(other_path) = topo.path(other.path_id) else {
                continue;
            };
            for zone in conflict_zones(path, other_path).zones() {
                let e = other.entry(*zone).expect("committed schedule covers its path");
                let c = zones.get_mut(zone).expect("conflict zone lies on path");
                c.occupied.push(e.entry_time);
                if topo.same_direction(path, other_path, *zone) {
                    let fifo = e.entry_time + h;
                    let clear = e.exit_time + h;
                    c.min_entry = Some(c.min_entry.map_or(fifo, |m| m.max(fifo)));
                    c.min_exit = Some(c.min_exit.map_or(clear, |m| m.max(clear)));
                }
            }
        }
        for c in zones.values_mut() {
            c.occupied.sort_by(f64::total_cmp);
        }
        Self { zones }
    }

    pub fn zone(&self, zone: ZoneId) -> Option<&ZoneConstraints> {
        self.zones.get(&zone)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleError {
    #[error("unknown path {0}")]
    UnknownPath(PathId),
    #[error("zone {zone}: {source}")]
    Plan { zone: ZoneId, source: TimeOptimalError },
    #[error("zone {zone}: {source}")]
    Energy { zone: ZoneId, source: EnergyError },
    #[error("zone {zone}: earliest entry {earliest} misses deadline {deadline}")]
    Deadline { zone: ZoneId, earliest: f64, deadline: f64 },
    #[error("zone {zone}: arrival at {arrival} conflicts with committed vehicles (earliest free {earliest})")]
    ArrivalConflict { zone: ZoneId, arrival: f64, earliest: f64 },
    #[error("merging zone {zone} cannot be entered at {speed} m/s (merging speed {merging_speed})")]
    MergingSpeed {
        zone: ZoneId,
        speed: f64,
        merging_speed: f64,
    },
    #[error("zone {zone}: internal scheduling inconsistency: {detail}")]
    Internal { zone: ZoneId, detail: String },
}

/// Per-zone quantities fixed before any timing decision.
struct ZoneSlot {
    zone: ZoneId,
    kind: ZoneKind,
    boundary: ZoneBoundary,
    process: f64,
    plan: Option<BangBangPlan>,
}

fn zone_slots(path: &Path, topo: &Topology, params: &SchedulingParams) -> Result<Vec<ZoneSlot>, ScheduleError> {
    let v_z = topo.merging_speed();
    let n = path.zone_sequence.len();
    let offsets = topo.zone_offsets(path);
    let mut out = Vec::with_capacity(n);
    for (k, &zid) in path.zone_sequence.iter().enumerate() {
        let zone = topo.zone(zid).expect("validated path");
        let v_s = if k == 0 { params.entry_speed } else { v_z };
        let v_e = if k + 1 == n { params.exit_speed } else { v_z };
        if zone.is_merging() && (v_s != v_z || v_e != v_z) {
            let speed = if v_s != v_z { v_s } else { v_e };
            return Err(ScheduleError::MergingSpeed {
                zone: zid,
                speed,
                merging_speed: v_z,
            });
        }
        let boundary = ZoneBoundary::new(offsets[k], v_s, offsets[k] + zone.length, v_e);
        let plan = match zone.kind {
            ZoneKind::Regular => Some(
                plan_min_time(&boundary, &params.limits).map_err(|source| ScheduleError::Plan { zone: zid, source })?,
            ),
            ZoneKind::Merging => None,
        };
        let process = process_time(zone, &boundary, &params.limits, v_z)
            .map_err(|source| ScheduleError::Plan { zone: zid, source })?;
        out.push(ZoneSlot {
            zone: zid,
            kind: zone.kind,
            boundary,
            process,
            plan,
        });
    }
    Ok(out)
}

/// Earliest entry into zone `k` at or after `release` that satisfies the
/// zone's own constraints, the exit floor of zone `k - 1`, and everything
/// downstream that is rigidly tied to it through merging zones.
fn earliest_entry(slots: &[ZoneSlot], k: usize, release: f64, ctx: &ConflictContext, h: f64) -> f64 {
    let mut start = release;
    let mut blocks = Vec::new();
    let mut floor = |value: Option<f64>, shift: f64, margin: f64, slack: f64| {
        if let Some(v) = value {
            let cand = v - shift + margin;
            if cand > start + slack {
                start = cand;
            }
        }
    };
    let empty = ZoneConstraints::default();
    let own = ctx.zone(slots[k].zone).unwrap_or(&empty);
    floor(own.min_entry, 0.0, 0.0, 0.0);
    if k > 0 {
        let prev = ctx.zone(slots[k - 1].zone).unwrap_or(&empty);
        floor(prev.min_exit, 0.0, 0.0, EXIT_SLACK);
    }
    blocks.extend(own.occupied.iter().map(|&c| Block {
        center: c,
        half_width: h,
    }));

    // carry constraints back across consecutive merging zones
    let mut shift = 0.0;
    let mut j = k;
    while slots[j].kind == ZoneKind::Merging {
        shift += slots[j].process;
        let cur = ctx.zone(slots[j].zone).unwrap_or(&empty);
        floor(cur.min_exit, shift, CARRY_MARGIN, 0.0);
        if j + 1 == slots.len() {
            break;
        }
        j += 1;
        let next = ctx.zone(slots[j].zone).unwrap_or(&empty);
        floor(next.min_entry, shift, CARRY_MARGIN, 0.0);
        blocks.extend(next.occupied.iter().map(|&c| Block {
            center: c - shift,
            half_width: h + CARRY_MARGIN,
        }));
    }
    first_free(start, &mut blocks)
}

fn deadline_for(rule: DeadlineRule, prev_entry: f64, prev_length: f64, lim: &Limits) -> Option<f64> {
    match rule {
        DeadlineRule::Unbounded => None,
        DeadlineRule::MinSpeedCap => Some(prev_entry + prev_length / lim.v_min),
    }
}

/// Fixes the entry time of every zone on `cav`'s path against the committed
/// vehicles in `ctx`, and the motion used inside each zone.
pub fn schedule_path(
    cav: &QueueEntry,
    ctx: &ConflictContext,
    topo: &Topology,
    params: &SchedulingParams,
) -> Result<Schedule, ScheduleError> {
    let path = topo.path(cav.path_id).ok_or(ScheduleError::UnknownPath(cav.path_id))?;
    let slots = zone_slots(path, topo, params)?;
    let n = slots.len();
    let h = params.headway;

    let mut entry = vec![0.0; n];
    let mut release = vec![0.0; n];
    let mut deadline = vec![None; n];

    entry[0] = cav.arrival;
    release[0] = cav.arrival;
    let earliest = earliest_entry(&slots, 0, cav.arrival, ctx, h);
    if earliest != cav.arrival {
        return Err(ScheduleError::ArrivalConflict {
            zone: slots[0].zone,
            arrival: cav.arrival,
            earliest,
        });
    }

    for k in 0..n - 1 {
        let next = k + 1;
        release[next] = entry[k] + slots[k].process;
        deadline[next] = deadline_for(
            params.deadline_rule,
            entry[k],
            slots[k].boundary.length(),
            &params.limits,
        );
        let t = earliest_entry(&slots, next, release[next], ctx, h);
        if slots[k].kind == ZoneKind::Merging && t != release[next] {
            return Err(ScheduleError::Internal {
                zone: slots[next].zone,
                detail: format!("entry after merging zone moved from {} to {t}", release[next]),
            });
        }
        if let Some(d) = deadline[next] {
            if t > d {
                return Err(ScheduleError::Deadline {
                    zone: slots[next].zone,
                    earliest: t,
                    deadline: d,
                });
            }
        }
        entry[next] = t;
    }

    let last = &slots[n - 1];
    let exit_release = entry[n - 1] + last.process;
    let exit_floor = ctx.zone(last.zone).and_then(|c| c.min_exit);
    let exit_time = match exit_floor {
        Some(f) if f > exit_release + EXIT_SLACK => f,
        _ => exit_release,
    };
    if last.kind == ZoneKind::Merging && exit_time != exit_release {
        return Err(ScheduleError::Internal {
            zone: last.zone,
            detail: "exit floor reached past a merging zone".into(),
        });
    }

    let mut entries = Vec::with_capacity(n);
    for (k, slot) in slots.into_iter().enumerate() {
        let (next_release, exit) = if k + 1 < n {
            (release[k + 1], entry[k + 1])
        } else {
            (exit_release, exit_time)
        };
        let mode = if exit == next_release {
            Mode::TimeOptimal
        } else {
            Mode::EnergyOptimal
        };
        let mut energy_violations = Vec::new();
        let motion = match (mode, slot.kind) {
            (_, ZoneKind::Merging) => ZoneMotion::ConstantSpeed {
                speed: topo.merging_speed(),
            },
            (Mode::TimeOptimal, ZoneKind::Regular) => ZoneMotion::MinTime {
                plan: slot.plan.expect("regular zones are planned"),
            },
            (Mode::EnergyOptimal, ZoneKind::Regular) => {
                let horizon = TimedBoundary::new(slot.boundary, entry[k], exit);
                let coeffs = solve_energy(&horizon).map_err(|source| ScheduleError::Energy {
                    zone: slot.zone,
                    source,
                })?;
                energy_violations = check_inactive_constraints(&coeffs, &horizon, &params.limits);
                ZoneMotion::MinEnergy { coeffs, horizon }
            }
        };
        entries.push(ScheduleEntry {
            zone: slot.zone,
            kind: slot.kind,
            entry_time: entry[k],
            release: release[k],
            deadline: deadline[k],
            process_time: slot.process,
            mode,
            boundary: slot.boundary,
            exit_time: exit,
            motion,
            energy_violations,
        });
    }

    Ok(Schedule {
        cav_id: cav.cav_id,
        path_id: cav.path_id,
        arrival: cav.arrival,
        entries,
        exit_release,
        exit_time,
    })
}
