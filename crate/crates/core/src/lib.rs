//! Coordination of connected automated vehicles through two coupled
//! intersections.
//!
//! Each vehicle, on entering the control zone, plans a minimum-time
//! bang-bang traversal of every zone on its path, then schedules its zone
//! entry times against the vehicles already committed to the coordinator
//! under a safety headway. Zones whose exit is delayed by the schedule are
//! driven with a minimum-energy cubic trajectory instead.

// Bounds are checked with negated comparisons so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod energy_optimal;
pub mod export;
mod linalg;
pub mod scenario;
pub mod scheduler;
pub mod sim;
pub mod time_optimal;
pub mod topology;

pub use dynamics::{check_limits, integrate_const_accel, LimitViolation, Limits, VehicleState};
pub use energy_optimal::{
    check_inactive_constraints, eval_energy, replan_from, solve_energy, CubicCoeffs, TimedBoundary,
};
pub use scenario::{load_topology, Scenario, ScenarioError, SimSettings};
pub use scheduler::{
    earliest_feasible_entry, schedule_path, ConflictContext, DeadlineRule, DroneMemory, Mode, Queue, QueueEntry,
    Schedule, ScheduleEntry, SchedulingParams,
};
pub use sim::{
    run, run_with_arrivals, sample_arrivals, synthesize, verify_safety, Arrival, Metrics, RunOutput, SafetyReport,
    SimConfig, SimError, TrajectoryLog, TrajectoryRow,
};
pub use time_optimal::{
    eval_trajectory, feedback_control, final_speed_bounds, plan_min_time, process_time, switching_state, BangBangPlan,
    Profile, ZoneBoundary,
};
pub use topology::{conflict_zones, ConflictTuple, Path, Topology, Zone, ZoneKind};
