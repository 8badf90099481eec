//! Simulation of a corridor: arrivals, sequential scheduling, trajectory
//! synthesis and an independent safety check.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{check_limits, LimitViolation, Limits};
use crate::scenario::Scenario;
use crate::scheduler::{
    schedule_path, CavId, CommitError, ConflictContext, DeadlineRule, DroneMemory, Mode, Queue, QueueError, Schedule,
    ScheduleError, SchedulingParams,
};
use crate::topology::{conflict_zones, PathId, Topology, ZoneId};

/// Resampling attempts per vehicle before the arrival window is declared
/// overcrowded.
pub const MAX_ARRIVAL_ATTEMPTS: usize = 10_000;

/// Slack on the verifier's comparisons, so that quantities equal up to
/// rounding are not reported.
const VERIFY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub limits: Limits,
    pub headway: f64,
    pub merging_speed: f64,
    pub n_cavs: usize,
    pub window: f64,
    pub seed: u64,
    pub sample_step: f64,
    pub entry_speed: f64,
    pub exit_speed: f64,
    pub deadline: DeadlineRule,
    pub min_gap: Option<f64>,
}

impl SimConfig {
    pub fn from_scenario(sc: &Scenario) -> Self {
        let s = &sc.simulation;
        let v_z = sc.topology.merging_speed();
        SimConfig {
            limits: s.limits,
            headway: s.headway_s,
            merging_speed: v_z,
            n_cavs: s.n_cavs,
            window: s.window_s,
            seed: s.seed,
            sample_step: s.sample_step_s,
            entry_speed: s.entry_speed_mps,
            exit_speed: s.exit_speed_mps.unwrap_or(v_z),
            deadline: s.deadline,
            min_gap: s.min_gap_m,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |reason: &str| Err(SimError::InvalidConfig(reason.to_string()));
        if self.n_cavs < 1 {
            return bad("n_cavs must be at least 1");
        }
        if !(self.window > 0.0 && self.window.is_finite()) {
            return bad("arrival window must be positive");
        }
        if !(self.sample_step > 0.0 && self.sample_step.is_finite()) {
            return bad("sample step must be positive");
        }
        if !(self.headway > 0.0 && self.headway.is_finite()) {
            return bad("headway must be positive");
        }
        self.limits
            .validate()
            .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        for (name, v) in [("entry speed", self.entry_speed), ("exit speed", self.exit_speed)] {
            if !self.limits.contains_speed(v) {
                return Err(SimError::InvalidConfig(format!(
                    "{name} {v} is outside the speed limits"
                )));
            }
        }
        Ok(())
    }

    pub fn params(&self) -> SchedulingParams {
        SchedulingParams {
            limits: self.limits,
            headway: self.headway,
            entry_speed: self.entry_speed,
            exit_speed: self.exit_speed,
            deadline_rule: self.deadline,
        }
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("vehicle {cav_id}: no arrival time found after {attempts} attempts; the arrival window is overcrowded")]
    WindowOvercrowded { cav_id: CavId, attempts: usize },
    #[error(transparent)]
    Queue(#[from] QueueError),
    #[error("vehicle {cav_id}: {source}")]
    Schedule { cav_id: CavId, source: ScheduleError },
    #[error("vehicle {cav_id}: {source}")]
    Commit { cav_id: CavId, source: CommitError },
}

impl SimError {
    /// Whether the failure is an infeasible instance rather than bad input.
    pub fn is_infeasible(&self) -> bool {
        !matches!(self, SimError::InvalidConfig(_) | SimError::Queue(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arrival {
    pub cav_id: CavId,
    pub time: f64,
    pub path_id: PathId,
}

/// Uniform arrivals on the window with paths assigned round-robin; a draw
/// closer than one headway to an earlier vehicle entering through the same
/// zone is redrawn.
pub fn sample_arrivals(topo: &Topology, cfg: &SimConfig) -> Result<Vec<Arrival>, SimError> {
    cfg.validate()?;
    let paths: Vec<_> = topo.paths().map(|p| (p.id, p.zone_sequence[0])).collect();
    if paths.is_empty() {
        return Err(SimError::InvalidConfig("topology has no paths".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out: Vec<Arrival> = Vec::with_capacity(cfg.n_cavs);
    let mut first_zone: Vec<ZoneId> = Vec::with_capacity(cfg.n_cavs);
    for k in 0..cfg.n_cavs {
        let cav_id = k as CavId + 1;
        let (path_id, zone) = paths[k % paths.len()];
        let mut found = None;
        for _ in 0..MAX_ARRIVAL_ATTEMPTS {
            let t = rng.random::<f64>() * cfg.window;
            let clash = out
                .iter()
                .zip(&first_zone)
                .any(|(a, &z)| z == zone && (t - a.time).abs() < cfg.headway);
            if !clash {
                found = Some(t);
                break;
            }
        }
        let time = found.ok_or(SimError::WindowOvercrowded {
            cav_id,
            attempts: MAX_ARRIVAL_ATTEMPTS,
        })?;
        out.push(Arrival { cav_id, time, path_id });
        first_zone.push(zone);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub cav_id: CavId,
    pub t: f64,
    /// Position along the vehicle's path from the control-zone entry.
    pub p: f64,
    pub v: f64,
    pub u: f64,
    pub zone: ZoneId,
    pub mode: Mode,
}

/// Samples of every vehicle on the global grid `t = k · step`, grouped by
/// vehicle in id order and by time within a vehicle.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLog {
    pub step: f64,
    pub rows: Vec<TrajectoryRow>,
}

impl TrajectoryLog {
    pub fn for_cav(&self, cav_id: CavId) -> impl Iterator<Item = &TrajectoryRow> {
        self.rows.iter().filter(move |r| r.cav_id == cav_id)
    }
}

/// Samples `schedules` on the grid of `step`. A sample at a zone boundary
/// belongs to the zone being entered.
pub fn synthesize(schedules: &[Schedule], step: f64) -> TrajectoryLog {
    let mut sorted: Vec<&Schedule> = schedules.iter().collect();
    sorted.sort_by_key(|s| s.cav_id);
    let mut rows = Vec::new();
    for s in sorted {
        let first = (s.arrival / step).ceil() as i64;
        let last = (s.exit_time / step).floor() as i64;
        let mut k_zone = 0;
        for k in first..=last {
            let t = k as f64 * step;
            if t < s.arrival || t > s.exit_time {
                continue;
            }
            while k_zone + 1 < s.entries.len() && s.entries[k_zone + 1].entry_time <= t {
                k_zone += 1;
            }
            let e = &s.entries[k_zone];
            let (u, state) = e.motion.sample(t, e.entry_time, e.boundary.p_s);
            rows.push(TrajectoryRow {
                cav_id: s.cav_id,
                t,
                p: state.p,
                v: state.v,
                u,
                zone: e.zone,
                mode: e.mode,
            });
        }
    }
    TrajectoryLog { step, rows }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LateralViolation {
    pub zone: ZoneId,
    pub pair: (CavId, CavId),
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RearEndViolation {
    pub zone: ZoneId,
    /// Leader, then follower.
    pub pair: (CavId, CavId),
    pub t: f64,
    /// Leader position minus follower position inside the zone.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderViolation {
    pub zone: ZoneId,
    /// Leader by entry time, then follower.
    pub pair: (CavId, CavId),
    pub leader_exit: f64,
    pub follower_exit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundViolation {
    pub cav_id: CavId,
    pub zone: ZoneId,
    pub t: f64,
    pub violation: LimitViolation,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SafetyCounts {
    pub lateral: usize,
    pub rear_end: usize,
    pub order: usize,
    pub gap: usize,
    pub bounds: usize,
    pub total: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SafetyReport {
    pub lateral: Vec<LateralViolation>,
    pub rear_end: Vec<RearEndViolation>,
    pub order: Vec<OrderViolation>,
    /// Same-direction pairs closer than the configured minimum gap.
    pub gap: Vec<RearEndViolation>,
    /// Samples outside the limits in zones not flagged by the energy planner.
    pub bounds: Vec<BoundViolation>,
    pub counts: SafetyCounts,
}

impl SafetyReport {
    pub fn is_safe(&self) -> bool {
        self.counts.total == 0
    }

    fn recount(&mut self) {
        let c = &mut self.counts;
        c.lateral = self.lateral.len();
        c.rear_end = self.rear_end.len();
        c.order = self.order.len();
        c.gap = self.gap.len();
        c.bounds = self.bounds.len();
        c.total = c.lateral + c.rear_end + c.order + c.gap + c.bounds;
    }
}

/// Checks a finished run without consulting the coordinator's bookkeeping:
/// entry headways at every conflict zone from the schedules, and
/// no-overtaking, exit order and optional minimum gap between vehicles
/// sharing a zone in the same direction from the sampled log.
pub fn verify_safety(
    schedules: &[Schedule],
    topo: &Topology,
    h: f64,
    log: &TrajectoryLog,
    limits: &Limits,
    min_gap: Option<f64>,
) -> SafetyReport {
    let mut report = SafetyReport::default();
    let mut sorted: Vec<&Schedule> = schedules.iter().collect();
    sorted.sort_by_key(|s| s.cav_id);

    // samples indexed by (zone, grid index) for the position checks
    let mut local: BTreeMap<(ZoneId, i64), Vec<(CavId, f64)>> = BTreeMap::new();
    let entry_pos: BTreeMap<(CavId, ZoneId), (f64, bool)> = sorted
        .iter()
        .flat_map(|s| {
            s.entries
                .iter()
                .map(move |e| ((s.cav_id, e.zone), (e.boundary.p_s, !e.energy_violations.is_empty())))
        })
        .collect();
    for r in &log.rows {
        let Some(&(p_s, flagged)) = entry_pos.get(&(r.cav_id, r.zone)) else {
            continue;
        };
        let k = (r.t / log.step).round() as i64;
        local.entry((r.zone, k)).or_default().push((r.cav_id, r.p - p_s));
        if !flagged {
            let loose = Limits {
                u_min: limits.u_min - VERIFY_TOL,
                u_max: limits.u_max + VERIFY_TOL,
                v_min: limits.v_min - VERIFY_TOL,
                v_max: limits.v_max + VERIFY_TOL,
            };
            for violation in check_limits(r.u, r.v, &loose) {
                report.bounds.push(BoundViolation {
                    cav_id: r.cav_id,
                    zone: r.zone,
                    t: r.t,
                    violation,
                });
            }
        }
    }

    for (a_idx, a) in sorted.iter().enumerate() {
        for b in &sorted[a_idx + 1..] {
            let (Some(pa), Some(pb)) = (topo.path(a.path_id), topo.path(b.path_id)) else {
                continue;
            };
            for &zone in conflict_zones(pa, pb).zones() {
                let (Some(ea), Some(eb)) = (a.entry(zone), b.entry(zone)) else {
                    continue;
                };
                let gap = (ea.entry_time - eb.entry_time).abs();
                if gap < h - VERIFY_TOL {
                    report.lateral.push(LateralViolation {
                        zone,
                        pair: (a.cav_id, b.cav_id),
                        gap,
                    });
                }
                if !topo.same_direction(pa, pb, zone) {
                    continue;
                }
                let (lead, follow) = if ea.entry_time <= eb.entry_time { (a, b) } else { (b, a) };
                let (el, ef) = (lead.entry(zone).unwrap(), follow.entry(zone).unwrap());
                if ef.exit_time < el.exit_time + VERIFY_TOL && ef.entry_time > el.entry_time {
                    report.order.push(OrderViolation {
                        zone,
                        pair: (lead.cav_id, follow.cav_id),
                        leader_exit: el.exit_time,
                        follower_exit: ef.exit_time,
                    });
                }
                let first = (ef.entry_time / log.step).ceil() as i64;
                let last = (el.exit_time.min(ef.exit_time) / log.step).floor() as i64;
                for k in first..=last {
                    let Some(samples) = local.get(&(zone, k)) else { continue };
                    let find = |id| samples.iter().find(|(c, _)| *c == id).map(|(_, p)| *p);
                    let (Some(pl), Some(pf)) = (find(lead.cav_id), find(follow.cav_id)) else {
                        continue;
                    };
                    let gap = pl - pf;
                    let t = k as f64 * log.step;
                    if gap < -VERIFY_TOL {
                        report.rear_end.push(RearEndViolation {
                            zone,
                            pair: (lead.cav_id, follow.cav_id),
                            t,
                            gap,
                        });
                    } else if let Some(g) = min_gap {
                        if gap < g {
                            report.gap.push(RearEndViolation {
                                zone,
                                pair: (lead.cav_id, follow.cav_id),
                                t,
                                gap,
                            });
                        }
                    }
                }
            }
        }
    }
    report.recount();
    report
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Control-zone travel time `t_f − t_0` per vehicle, in id order.
    pub travel_times: Vec<(CavId, f64)>,
    pub mean_travel_time: f64,
    pub time_optimal_zones: usize,
    pub energy_optimal_zones: usize,
    /// Zone entries later than their release.
    pub delayed_entries: usize,
    /// Minimum-time zones that cruise at the speed limit.
    pub saturated_zones: usize,
    /// Minimum-energy zones whose unconstrained solution breaks a bound.
    pub energy_violation_zones: usize,
}

pub fn metrics(schedules: &[Schedule]) -> Metrics {
    let mut m = Metrics::default();
    let mut sorted: Vec<&Schedule> = schedules.iter().collect();
    sorted.sort_by_key(|s| s.cav_id);
    for s in sorted {
        m.travel_times.push((s.cav_id, s.travel_time()));
        for e in &s.entries {
            match e.mode {
                Mode::TimeOptimal => m.time_optimal_zones += 1,
                Mode::EnergyOptimal => m.energy_optimal_zones += 1,
            }
            m.delayed_entries += usize::from(e.entry_time > e.release);
            m.saturated_zones += usize::from(e.saturated());
            m.energy_violation_zones += usize::from(!e.energy_violations.is_empty());
        }
    }
    if !m.travel_times.is_empty() {
        m.mean_travel_time = m.travel_times.iter().map(|(_, t)| t).sum::<f64>() / m.travel_times.len() as f64;
    }
    m
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutput {
    pub config: SimConfig,
    pub arrivals: Vec<Arrival>,
    /// Schedules in the order they were committed.
    pub schedules: Vec<Schedule>,
    pub log: TrajectoryLog,
    pub safety: SafetyReport,
    pub metrics: Metrics,
}

/// Samples arrivals from the seed and runs them.
pub fn run(topo: &Topology, cfg: &SimConfig) -> Result<RunOutput, SimError> {
    let arrivals = sample_arrivals(topo, cfg)?;
    run_with_arrivals(topo, cfg, &arrivals)
}

/// Schedules `arrivals` one at a time in queue order, each against the
/// schedules committed before it, then samples and verifies the result.
pub fn run_with_arrivals(topo: &Topology, cfg: &SimConfig, arrivals: &[Arrival]) -> Result<RunOutput, SimError> {
    cfg.validate()?;
    let mut queue = Queue::new();
    for a in arrivals {
        queue.enqueue(topo, a.cav_id, a.time, a.path_id)?;
    }
    let params = cfg.params();
    let mut memory = DroneMemory::new(cfg.headway);
    let mut schedules = Vec::with_capacity(queue.len());
    for q in queue.entries() {
        let path = topo.path(q.path_id).expect("queue checked the path");
        let ctx = ConflictContext::build(path, &memory, topo);
        let s = schedule_path(q, &ctx, topo, &params).map_err(|source| SimError::Schedule {
            cav_id: q.cav_id,
            source,
        })?;
        log::debug!("vehicle {} scheduled, exit at {:.3} s", s.cav_id, s.exit_time);
        memory.commit(s.clone()).map_err(|source| SimError::Commit {
            cav_id: q.cav_id,
            source,
        })?;
        schedules.push(s);
    }
    let log = synthesize(&schedules, cfg.sample_step);
    let safety = verify_safety(&schedules, topo, cfg.headway, &log, &cfg.limits, cfg.min_gap);
    let metrics = metrics(&schedules);
    Ok(RunOutput {
        config: cfg.clone(),
        arrivals: arrivals.to_vec(),
        schedules,
        log,
        safety,
        metrics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{Zone, ZoneKind};

    fn default_setup() -> (Topology, SimConfig) {
        let sc = Scenario::default_scenario();
        let cfg = SimConfig::from_scenario(&sc);
        (sc.topology, cfg)
    }

    #[test]
    fn arrivals_deterministic_and_spaced() {
        let (topo, cfg) = default_setup();
        let a = sample_arrivals(&topo, &cfg).unwrap();
        assert_eq!(a, sample_arrivals(&topo, &cfg).unwrap());
        assert_eq!(a.len(), 16);
        for (k, x) in a.iter().enumerate() {
            assert!((0.0..=20.0).contains(&x.time));
            assert_eq!(x.path_id, (k % 4) as u32 + 1);
            for y in &a[..k] {
                if y.path_id == x.path_id {
                    assert!((x.time - y.time).abs() >= 1.5);
                }
            }
        }
    }

    #[test]
    fn single_arrival() {
        let (topo, mut cfg) = default_setup();
        cfg.n_cavs = 1;
        let a = sample_arrivals(&topo, &cfg).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(a[0].cav_id, 1);
        assert_eq!(a[0].path_id, 1);
    }

    #[test]
    fn overcrowded_window() {
        let (topo, mut cfg) = default_setup();
        cfg.headway = 1000.0;
        let err = sample_arrivals(&topo, &cfg).unwrap_err();
        assert!(matches!(err, SimError::WindowOvercrowded { cav_id: 5, .. }), "{err}");
        assert!(err.is_infeasible());
    }

    #[test]
    fn invalid_config() {
        let (topo, mut cfg) = default_setup();
        cfg.n_cavs = 0;
        assert!(matches!(sample_arrivals(&topo, &cfg), Err(SimError::InvalidConfig(_))));
    }

    #[test]
    fn lone_vehicle_is_time_optimal() {
        let (topo, cfg) = default_setup();
        let out = run_with_arrivals(
            &topo,
            &cfg,
            &[Arrival {
                cav_id: 1,
                time: 0.3,
                path_id: 3,
            }],
        )
        .unwrap();
        let s = &out.schedules[0];
        assert!(s.entries.iter().all(|e| e.mode == Mode::TimeOptimal));
        let sum: f64 = s.entries.iter().map(|e| e.process_time).sum();
        assert!((s.travel_time() - sum).abs() < 1e-9);
        assert!(out.safety.is_safe());
        assert_eq!(out.metrics.energy_optimal_zones, 0);
    }

    #[test]
    fn lateral_violation_from_close_entries() {
        let (topo, cfg) = default_setup();
        let out = run_with_arrivals(
            &topo,
            &cfg,
            &[
                Arrival {
                    cav_id: 1,
                    time: 0.0,
                    path_id: 1,
                },
                Arrival {
                    cav_id: 2,
                    time: 10.0,
                    path_id: 4,
                },
            ],
        )
        .unwrap();
        let mut schedules = out.schedules.clone();
        let t1 = schedules[0].entry_time(1).unwrap();
        let e = schedules[1].entries.iter_mut().find(|e| e.zone == 1).unwrap();
        e.entry_time = t1 + 1.4;
        let report = verify_safety(&schedules, &topo, 1.5, &out.log, &cfg.limits, None);
        assert_eq!(report.counts.lateral, 1);
        assert!((report.lateral[0].gap - 1.4).abs() < 1e-9);
    }

    #[test]
    fn swapped_exit_order_is_flagged() {
        let z = |id| Zone {
            id,
            kind: ZoneKind::Regular,
            length: 100.0,
        };
        let topo = Topology::new(vec![z(1), z(2)], vec![(1, vec![1, 2])], 15.0).unwrap();
        let mut cfg = default_setup().1;
        cfg.entry_speed = 15.0;
        cfg.exit_speed = 15.0;
        cfg.merging_speed = 15.0;
        let out = run_with_arrivals(
            &topo,
            &cfg,
            &[
                Arrival {
                    cav_id: 1,
                    time: 0.0,
                    path_id: 1,
                },
                Arrival {
                    cav_id: 2,
                    time: 2.0,
                    path_id: 1,
                },
            ],
        )
        .unwrap();
        assert!(out.safety.is_safe(), "{:?}", out.safety);

        // corrupt: vehicle 2 leaves zone 1 before vehicle 1 does
        let mut schedules = out.schedules.clone();
        let lead_exit = schedules[0].entries[0].exit_time;
        schedules[1].entries[0].exit_time = lead_exit - 0.5;
        let mut log = out.log.clone();
        for r in log.rows.iter_mut().filter(|r| r.cav_id == 2 && r.zone == 1) {
            r.p += 40.0;
        }
        let report = verify_safety(&schedules, &topo, 1.5, &log, &cfg.limits, None);
        assert_eq!(report.counts.order, 1);
        assert!(report.counts.rear_end > 0);
        assert!(!report.is_safe());
    }

    #[test]
    fn default_run_is_safe() {
        let (topo, cfg) = default_setup();
        let out = run(&topo, &cfg).unwrap();
        assert_eq!(out.schedules.len(), 16);
        assert!(out.safety.is_safe(), "{:#?}", out.safety.counts);
        assert_eq!(out.metrics.travel_times.len(), 16);
    }
}
