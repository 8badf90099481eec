//! Scenario documents (TOML).
//!
//! ```toml
//! merging_speed_mps = 15.0
//! zones = [ { id = 1, kind = "merging", length_m = 30.0 }, ... ]
//! paths = [ { id = 1, zones = [3, 1, 11, 2, 8] }, ... ]
//!
//! [simulation]            # optional; defaults shown in `SimSettings::default`
//! n_cavs = 16
//! window_s = 20.0
//! headway_s = 1.5
//! seed = 2019
//! sample_step_s = 0.05
//! entry_speed_mps = 12.0
//! exit_speed_mps = 15.0   # optional, defaults to the merging speed
//! deadline = "unbounded"  # or "min_speed_cap"
//! min_gap_m = 5.0         # optional rear-end distance check, off when absent
//!
//! [simulation.limits]
//! u_min = -3.0
//! u_max = 3.0
//! v_min = 1.0
//! v_max = 25.0
//! ```

use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::Limits;
use crate::scheduler::DeadlineRule;
use crate::topology::{Topology, TopologyError, Zone, ZoneKind};

/// The shipped two-intersection layout.
pub const DEFAULT_SCENARIO: &str = include_str!("../scenarios/two_intersections.toml");

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed scenario document: {0}")]
    Parse(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("{field}: {reason}")]
    Invalid { field: String, reason: String },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    merging_speed_mps: f64,
    zones: Vec<ZoneDoc>,
    paths: Vec<PathDoc>,
    simulation: Option<SimDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ZoneDoc {
    id: u32,
    kind: ZoneKind,
    length_m: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PathDoc {
    id: u32,
    zones: Vec<u32>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimDoc {
    n_cavs: Option<usize>,
    window_s: Option<f64>,
    headway_s: Option<f64>,
    seed: Option<u64>,
    sample_step_s: Option<f64>,
    entry_speed_mps: Option<f64>,
    exit_speed_mps: Option<f64>,
    deadline: Option<DeadlineRule>,
    min_gap_m: Option<f64>,
    limits: Option<Limits>,
}

/// The `simulation` section of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSettings {
    pub n_cavs: usize,
    pub window_s: f64,
    pub headway_s: f64,
    pub seed: u64,
    pub sample_step_s: f64,
    pub entry_speed_mps: f64,
    /// Control-zone exit speed; `None` means the merging speed.
    pub exit_speed_mps: Option<f64>,
    pub deadline: DeadlineRule,
    pub min_gap_m: Option<f64>,
    pub limits: Limits,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            n_cavs: 16,
            window_s: 20.0,
            headway_s: 1.5,
            seed: 2019,
            sample_step_s: 0.05,
            entry_speed_mps: 12.0,
            exit_speed_mps: None,
            deadline: DeadlineRule::Unbounded,
            min_gap_m: None,
            limits: Limits::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub topology: Topology,
    pub simulation: SimSettings,
}

/// Parses and validates only the topology part of a scenario document.
pub fn load_topology(text: &str) -> Result<Topology, ScenarioError> {
    let doc = parse(text)?;
    build_topology(&doc)
}

fn parse(text: &str) -> Result<Document, ScenarioError> {
    toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string().trim_end().to_owned()))
}

fn build_topology(doc: &Document) -> Result<Topology, ScenarioError> {
    let zones = doc
        .zones
        .iter()
        .map(|z| Zone {
            id: z.id,
            kind: z.kind,
            length: z.length_m,
        })
        .collect();
    let paths = doc.paths.iter().map(|p| (p.id, p.zones.clone())).collect();
    Ok(Topology::new(zones, paths, doc.merging_speed_mps)?)
}

fn invalid(field: &str, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        field: field.to_owned(),
        reason: reason.into(),
    }
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let doc = parse(text)?;
        let topology = build_topology(&doc)?;
        let mut sim = SimSettings::default();
        if let Some(s) = &doc.simulation {
            if let Some(v) = s.n_cavs {
                sim.n_cavs = v;
            }
            if let Some(v) = s.window_s {
                sim.window_s = v;
            }
            if let Some(v) = s.headway_s {
                sim.headway_s = v;
            }
            if let Some(v) = s.seed {
                sim.seed = v;
            }
            if let Some(v) = s.sample_step_s {
                sim.sample_step_s = v;
            }
            if let Some(v) = s.entry_speed_mps {
                sim.entry_speed_mps = v;
            }
            sim.exit_speed_mps = s.exit_speed_mps;
            if let Some(v) = s.deadline {
                sim.deadline = v;
            }
            sim.min_gap_m = s.min_gap_m;
            if let Some(v) = s.limits {
                sim.limits = v;
            }
        }
        let scenario = Self {
            topology,
            simulation: sim,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn from_path(path: impl AsRef<FsPath>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn default_scenario() -> Self {
        Self::parse(DEFAULT_SCENARIO).expect("shipped scenario is valid")
    }

    /// Checks the simulation section and its coupling with the topology.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let s = &self.simulation;
        let lim = &s.limits;
        lim.validate()
            .map_err(|e| invalid("simulation.limits", e.to_string()))?;
        let vz = self.topology.merging_speed();
        if !lim.contains_speed(vz) {
            return Err(invalid(
                "merging_speed_mps",
                format!("{vz} outside speed limits [{}, {}]", lim.v_min, lim.v_max),
            ));
        }
        if s.n_cavs == 0 {
            return Err(invalid("simulation.n_cavs", "must be at least 1"));
        }
        if !(s.window_s > 0.0 && s.window_s.is_finite()) {
            return Err(invalid("simulation.window_s", "must be positive"));
        }
        if !(s.headway_s > 0.0 && s.headway_s.is_finite()) {
            return Err(invalid("simulation.headway_s", "must be positive"));
        }
        if !(s.sample_step_s > 0.0 && s.sample_step_s.is_finite()) {
            return Err(invalid("simulation.sample_step_s", "must be positive"));
        }
        if !lim.contains_speed(s.entry_speed_mps) {
            return Err(invalid("simulation.entry_speed_mps", "outside speed limits"));
        }
        if let Some(v) = s.exit_speed_mps {
            if !lim.contains_speed(v) {
                return Err(invalid("simulation.exit_speed_mps", "outside speed limits"));
            }
        }
        if let Some(g) = s.min_gap_m {
            if !(g >= 0.0) {
                return Err(invalid("simulation.min_gap_m", "must be non-negative"));
            }
        }
        Ok(())
    }
}
