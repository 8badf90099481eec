//! Arrival queue.
//!
//! Orders vehicles by control-zone arrival time; simultaneous arrivals go
//! shorter path first, then lower id.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::CavId;
use crate::topology::{PathId, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueueEntry {
    pub cav_id: CavId,
    pub arrival: f64,
    pub path_id: PathId,
    /// 1-based position in the queue.
    pub order: usize,
    pub path_length: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QueueError {
    #[error("vehicle {0} is already queued")]
    Duplicate(CavId),
    #[error("vehicle {cav_id}: arrival time {t0} must be a non-negative number")]
    BadArrival { cav_id: CavId, t0: f64 },
    #[error("vehicle {cav_id}: unknown path {path_id}")]
    UnknownPath { cav_id: CavId, path_id: PathId },
}

#[derive(Debug, Clone, Default)]
pub struct Queue {
    entries: Vec<QueueEntry>,
}

fn queue_cmp(a: &QueueEntry, b: &QueueEntry) -> Ordering {
    a.arrival
        .total_cmp(&b.arrival)
        .then(a.path_length.total_cmp(&b.path_length))
        .then(a.cav_id.cmp(&b.cav_id))
}

impl Queue {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a vehicle and renumbers the queue. The returned entry carries
    /// the order at insertion time; a later, earlier-arriving insertion can
    /// still shift it.
    pub fn enqueue(
        &mut self,
        topo: &Topology,
        cav_id: CavId,
        t0: f64,
        path_id: PathId,
    ) -> Result<QueueEntry, QueueError> {
        if !(t0 >= 0.0) || !t0.is_finite() {
            return Err(QueueError::BadArrival { cav_id, t0 });
        }
        if self.entries.iter().any(|e| e.cav_id == cav_id) {
            return Err(QueueError::Duplicate(cav_id));
        }
        let path = topo.path(path_id).ok_or(QueueError::UnknownPath { cav_id, path_id })?;
        let entry = QueueEntry {
            cav_id,
            arrival: t0,
            path_id,
            order: 0,
            path_length: path.total_length,
        };
        let at = self.entries.partition_point(|e| queue_cmp(e, &entry) == Ordering::Less);
        self.entries.insert(at, entry);
        for (k, e) in self.entries.iter_mut().enumerate() {
            e.order = k + 1;
        }
        Ok(self.entries[at])
    }

    pub fn entries(&self) -> &[QueueEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
