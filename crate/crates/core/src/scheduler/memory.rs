//! The coordinator's store of committed schedules.
//!
//! The coordinator makes no decisions: vehicles read the committed state,
//! compute their own schedule, and commit it. Commits are all-or-nothing.

use std::collections::BTreeMap;

use thiserror::Error;

use super::slot::within_headway;
use super::{CavId, Schedule};
use crate::topology::{PathId, ZoneId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CommitError {
    #[error("vehicle {0} already has a committed schedule")]
    Duplicate(CavId),
    #[error("zone {zone}: vehicle {cav_id} at {time} is within {gap} s of vehicle {other} at {other_time} (headway {headway})")]
    Headway {
        zone: ZoneId,
        cav_id: CavId,
        time: f64,
        other: CavId,
        other_time: f64,
        gap: f64,
        headway: f64,
    },
}

/// One committed zone entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Occupancy {
    pub time: f64,
    pub cav_id: CavId,
}

#[derive(Debug, Clone)]
pub struct DroneMemory {
    headway: f64,
    schedules: BTreeMap<CavId, Schedule>,
    occupancy: BTreeMap<ZoneId, Vec<Occupancy>>,
}

impl DroneMemory {
    pub fn new(headway: f64) -> Self {
        Self {
            headway,
            schedules: BTreeMap::new(),
            occupancy: BTreeMap::new(),
        }
    }

    pub fn headway(&self) -> f64 {
        self.headway
    }

    pub fn schedules(&self) -> impl Iterator<Item = &Schedule> {
        self.schedules.values()
    }

    pub fn schedule(&self, cav_id: CavId) -> Option<&Schedule> {
        self.schedules.get(&cav_id)
    }

    pub fn path_of(&self, cav_id: CavId) -> Option<PathId> {
        self.schedules.get(&cav_id).map(|s| s.path_id)
    }

    pub fn len(&self) -> usize {
        self.schedules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.schedules.is_empty()
    }

    /// Committed entries of `zone`, sorted by time.
    pub fn occupancy(&self, zone: ZoneId) -> &[Occupancy] {
        self.occupancy.get(&zone).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Stores `schedule` after checking it against every committed time in
    /// each of its zones. On error the memory is left untouched.
    pub fn commit(&mut self, schedule: Schedule) -> Result<(), CommitError> {
        if self.schedules.contains_key(&schedule.cav_id) {
            return Err(CommitError::Duplicate(schedule.cav_id));
        }
        let h = self.headway;
        for e in &schedule.entries {
            for o in self.occupancy(e.zone) {
                if within_headway(e.entry_time, o.time, h) {
                    let gap = (e.entry_time - o.time).abs();
                    return Err(CommitError::Headway {
                        zone: e.zone,
                        cav_id: schedule.cav_id,
                        time: e.entry_time,
                        other: o.cav_id,
                        other_time: o.time,
                        gap,
                        headway: h,
                    });
                }
            }
        }
        for e in &schedule.entries {
            let list = self.occupancy.entry(e.zone).or_default();
            let at = list.partition_point(|o| o.time < e.entry_time);
            list.insert(
                at,
                Occupancy {
                    time: e.entry_time,
                    cav_id: schedule.cav_id,
                },
            );
        }
        self.schedules.insert(schedule.cav_id, schedule);
        Ok(())
    }
}

/// Free-function form of [`DroneMemory::commit`].
pub fn commit(schedule: Schedule, memory: &mut DroneMemory) -> Result<(), CommitError> {
    memory.commit(schedule)
}
