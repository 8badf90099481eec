//! Zone partition, fixed vehicle paths and conflict tuples.
//!
//! Regular zones are one-way lane segments: any two paths that share a
//! regular zone travel it in the same direction. Merging zones are the
//! crossing areas, traversed at the fixed merging speed.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub type ZoneId = u32;
pub type PathId = u32;

/// Paths never list more zones than the partition has.
pub const MAX_PATH_ZONES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZoneKind {
    Regular,
    Merging,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub id: ZoneId,
    pub kind: ZoneKind,
    /// Meters, strictly positive.
    pub length: f64,
}

impl Zone {
    pub fn is_merging(&self) -> bool {
        self.kind == ZoneKind::Merging
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub id: PathId,
    pub zone_sequence: Vec<ZoneId>,
    pub total_length: f64,
}

impl Path {
    pub fn position_of(&self, zone: ZoneId) -> Option<usize> {
        self.zone_sequence.iter().position(|&z| z == zone)
    }

    pub fn contains(&self, zone: ZoneId) -> bool {
        self.zone_sequence.contains(&zone)
    }

    pub fn predecessor(&self, zone: ZoneId) -> Option<ZoneId> {
        let k = self.position_of(zone)?;
        k.checked_sub(1).map(|k| self.zone_sequence[k])
    }

    pub fn successor(&self, zone: ZoneId) -> Option<ZoneId> {
        let k = self.position_of(zone)?;
        self.zone_sequence.get(k + 1).copied()
    }
}

/// Ordered tuple of zones two paths have in common.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConflictTuple(pub Vec<ZoneId>);

impl ConflictTuple {
    pub fn zones(&self) -> &[ZoneId] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, zone: ZoneId) -> bool {
        self.0.contains(&zone)
    }
}

/// Zones shared by `path_i` and `path_j`, in `path_i` order.
pub fn conflict_zones(path_i: &Path, path_j: &Path) -> ConflictTuple {
    ConflictTuple(
        path_i
            .zone_sequence
            .iter()
            .copied()
            .filter(|z| path_j.contains(*z))
            .collect(),
    )
}

/// Validated zone partition and path set. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    zones: BTreeMap<ZoneId, Zone>,
    paths: BTreeMap<PathId, Path>,
    merging_speed: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TopologyError {
    #[error("{field}: {reason}")]
    Invalid { field: String, reason: String },
    #[error("{field}: zone {zone} is not defined")]
    DanglingZone { field: String, zone: ZoneId },
}

impl TopologyError {
    fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl Topology {
    /// Builds a topology from raw zones and `(path id, zone ids)` pairs.
    /// Error fields are reported as `zones[i].…` / `paths[i].…` indices into
    /// the given slices.
    pub fn new(zones: Vec<Zone>, paths: Vec<(PathId, Vec<ZoneId>)>, merging_speed: f64) -> Result<Self, TopologyError> {
        if !(merging_speed > 0.0 && merging_speed.is_finite()) {
            return Err(TopologyError::invalid("merging_speed_mps", "must be positive"));
        }
        if zones.is_empty() {
            return Err(TopologyError::invalid("zones", "at least one zone is required"));
        }
        let mut zone_map = BTreeMap::new();
        for (i, z) in zones.into_iter().enumerate() {
            if !(z.length > 0.0 && z.length.is_finite()) {
                return Err(TopologyError::invalid(
                    format!("zones[{i}].length_m"),
                    format!("zone {} has non-positive length {}", z.id, z.length),
                ));
            }
            if zone_map.contains_key(&z.id) {
                return Err(TopologyError::invalid(
                    format!("zones[{i}].id"),
                    format!("duplicate zone id {}", z.id),
                ));
            }
            zone_map.insert(z.id, z);
        }

        let mut path_map = BTreeMap::new();
        for (i, (id, seq)) in paths.into_iter().enumerate() {
            if seq.is_empty() {
                return Err(TopologyError::invalid(
                    format!("paths[{i}].zones"),
                    "empty zone sequence",
                ));
            }
            if seq.len() > MAX_PATH_ZONES {
                return Err(TopologyError::invalid(
                    format!("paths[{i}].zones"),
                    format!("{} zones exceeds the limit of {MAX_PATH_ZONES}", seq.len()),
                ));
            }
            let mut total = 0.0;
            for (k, z) in seq.iter().enumerate() {
                let zone = zone_map.get(z).ok_or_else(|| TopologyError::DanglingZone {
                    field: format!("paths[{i}].zones[{k}]"),
                    zone: *z,
                })?;
                if seq[..k].contains(z) {
                    return Err(TopologyError::invalid(
                        format!("paths[{i}].zones[{k}]"),
                        format!("zone {z} repeated"),
                    ));
                }
                total += zone.length;
            }
            if path_map.contains_key(&id) {
                return Err(TopologyError::invalid(
                    format!("paths[{i}].id"),
                    format!("duplicate path id {id}"),
                ));
            }
            path_map.insert(
                id,
                Path {
                    id,
                    zone_sequence: seq,
                    total_length: total,
                },
            );
        }
        if path_map.is_empty() {
            return Err(TopologyError::invalid("paths", "at least one path is required"));
        }
        Ok(Self {
            zones: zone_map,
            paths: path_map,
            merging_speed,
        })
    }

    pub fn zone(&self, id: ZoneId) -> Option<&Zone> {
        self.zones.get(&id)
    }

    pub fn path(&self, id: PathId) -> Option<&Path> {
        self.paths.get(&id)
    }

    pub fn zones(&self) -> impl Iterator<Item = &Zone> {
        self.zones.values()
    }

    pub fn paths(&self) -> impl Iterator<Item = &Path> {
        self.paths.values()
    }

    pub fn zone_count(&self) -> usize {
        self.zones.len()
    }

    pub fn path_count(&self) -> usize {
        self.paths.len()
    }

    /// Constant speed inside merging zones (m/s).
    pub fn merging_speed(&self) -> f64 {
        self.merging_speed
    }

    /// Distance from the start of `path` to the entry of each of its zones.
    pub fn zone_offsets(&self, path: &Path) -> Vec<f64> {
        let mut acc = 0.0;
        path.zone_sequence
            .iter()
            .map(|z| {
                let start = acc;
                acc += self.zones[z].length;
                start
            })
            .collect()
    }

    /// Whether two paths that both contain `zone` move through it the same
    /// way, so that one vehicle can end up behind the other.
    pub fn same_direction(&self, a: &Path, b: &Path, zone: ZoneId) -> bool {
        match self.zones.get(&zone).map(|z| z.kind) {
            Some(ZoneKind::Regular) => a.contains(zone) && b.contains(zone),
            Some(ZoneKind::Merging) => {
                let pred = a.predecessor(zone).is_some() && a.predecessor(zone) == b.predecessor(zone);
                let succ = a.successor(zone).is_some() && a.successor(zone) == b.successor(zone);
                pred || succ
            }
            None => false,
        }
    }
}
