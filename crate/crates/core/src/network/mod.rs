//! Grid, demand and wildfire-risk data.
//!
//! All quantities are per unit on a 100 MW base. The base is carried as
//! metadata only; nothing in the model rescales by it.

mod psps;
mod series;

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use psps::{compute_off_sets, energized_components, DeenergizationSchedule};
pub use series::{DemandSeries, RiskSeries};

pub const BASE_MVA: f64 = 100.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("network document: {0}")]
    Schema(String),
    #[error("duplicate {kind} id '{id}'")]
    DuplicateId { kind: &'static str, id: String },
    #[error("{kind} '{id}' references missing bus '{bus}'")]
    DanglingBus {
        kind: &'static str,
        id: String,
        bus: String,
    },
    #[error("{kind} '{id}': {reason}")]
    Invalid {
        kind: &'static str,
        id: String,
        reason: String,
    },
    #[error("{file}: line {line}: {reason}")]
    Csv {
        file: String,
        line: usize,
        reason: String,
    },
    #[error("series is missing a row for {kind} '{id}'")]
    MissingSeries { kind: &'static str, id: String },
    #[error("unknown line '{0}' in de-energization schedule")]
    UnknownLine(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bus {
    pub id: String,
    /// Row of the demand table serving this bus; `None` means no load.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demand_ref: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate_battery: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Line {
    pub id: String,
    pub from_bus: String,
    pub to_bus: String,
    pub susceptance: f64,
    pub flow_limit: f64,
    pub angle_diff_min: f64,
    pub angle_diff_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generator {
    pub id: String,
    pub bus: String,
    pub g_min: f64,
    pub g_max: f64,
    /// `c_0, c_1, ...` in $/p.u.^j per hour.
    pub cost_coeffs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDocument {
    buses: Vec<Bus>,
    lines: Vec<Line>,
    generators: Vec<Generator>,
    reference_bus: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    battery_candidates: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
    pub generators: Vec<Generator>,
    pub reference_bus: usize,
    /// Bus indices eligible for batteries, ascending.
    pub candidates: Vec<usize>,
    line_from: Vec<usize>,
    line_to: Vec<usize>,
    gen_bus: Vec<usize>,
    lines_from_bus: Vec<Vec<usize>>,
    lines_to_bus: Vec<Vec<usize>>,
    gens_at_bus: Vec<Vec<usize>>,
    bus_index: HashMap<String, usize>,
    line_index: HashMap<String, usize>,
}

pub fn parse_network(document: &str) -> Result<Network, NetworkError> {
    let doc: NetworkDocument =
        serde_json::from_str(document).map_err(|e| NetworkError::Schema(e.to_string()))?;
    Network::from_document(doc)
}

impl Network {
    pub fn new(
        buses: Vec<Bus>,
        lines: Vec<Line>,
        generators: Vec<Generator>,
        reference_bus: &str,
        battery_candidates: Option<Vec<String>>,
    ) -> Result<Self, NetworkError> {
        Self::from_document(NetworkDocument {
            buses,
            lines,
            generators,
            reference_bus: reference_bus.to_string(),
            battery_candidates,
        })
    }

    fn from_document(doc: NetworkDocument) -> Result<Self, NetworkError> {
        let mut bus_index = HashMap::new();
        for (i, b) in doc.buses.iter().enumerate() {
            if bus_index.insert(b.id.clone(), i).is_some() {
                return Err(NetworkError::DuplicateId {
                    kind: "bus",
                    id: b.id.clone(),
                });
            }
        }
        let lookup = |kind: &'static str, id: &str, bus: &str| {
            bus_index.get(bus).copied().ok_or_else(|| NetworkError::DanglingBus {
                kind,
                id: id.to_string(),
                bus: bus.to_string(),
            })
        };
        let nb = doc.buses.len();
        let mut line_index = HashMap::new();
        let mut line_from = Vec::with_capacity(doc.lines.len());
        let mut line_to = Vec::with_capacity(doc.lines.len());
        let mut lines_from_bus = vec![Vec::new(); nb];
        let mut lines_to_bus = vec![Vec::new(); nb];
        for (k, l) in doc.lines.iter().enumerate() {
            if line_index.insert(l.id.clone(), k).is_some() {
                return Err(NetworkError::DuplicateId {
                    kind: "line",
                    id: l.id.clone(),
                });
            }
            let f = lookup("line", &l.id, &l.from_bus)?;
            let t = lookup("line", &l.id, &l.to_bus)?;
            let invalid = |reason: &str| NetworkError::Invalid {
                kind: "line",
                id: l.id.clone(),
                reason: reason.to_string(),
            };
            if f == t {
                return Err(invalid("from_bus equals to_bus"));
            }
            if ![l.susceptance, l.flow_limit, l.angle_diff_min, l.angle_diff_max]
                .iter()
                .all(|v| v.is_finite())
            {
                return Err(invalid("parameters must be finite"));
            }
            if l.flow_limit < 0.0 {
                return Err(invalid("flow_limit must be non-negative"));
            }
            if l.angle_diff_min > l.angle_diff_max {
                return Err(invalid("angle_diff_min exceeds angle_diff_max"));
            }
            line_from.push(f);
            line_to.push(t);
            lines_from_bus[f].push(k);
            lines_to_bus[t].push(k);
        }
        let mut gen_ids = HashSet::new();
        let mut gen_bus = Vec::with_capacity(doc.generators.len());
        let mut gens_at_bus = vec![Vec::new(); nb];
        for (k, g) in doc.generators.iter().enumerate() {
            if !gen_ids.insert(g.id.clone()) {
                return Err(NetworkError::DuplicateId {
                    kind: "generator",
                    id: g.id.clone(),
                });
            }
            let b = lookup("generator", &g.id, &g.bus)?;
            let invalid = |reason: &str| NetworkError::Invalid {
                kind: "generator",
                id: g.id.clone(),
                reason: reason.to_string(),
            };
            if !(g.g_min.is_finite() && g.g_max.is_finite()) || g.cost_coeffs.iter().any(|c| !c.is_finite()) {
                return Err(invalid("parameters must be finite"));
            }
            if g.g_min > g.g_max {
                return Err(invalid("g_min exceeds g_max"));
            }
            if g.cost_coeffs.is_empty() {
                return Err(invalid("cost_coeffs must not be empty"));
            }
            gen_bus.push(b);
            gens_at_bus[b].push(k);
        }
        let reference_bus = *bus_index.get(&doc.reference_bus).ok_or_else(|| NetworkError::DanglingBus {
            kind: "network",
            id: "reference_bus".into(),
            bus: doc.reference_bus.clone(),
        })?;
        let candidates: Vec<usize> = match &doc.battery_candidates {
            Some(list) => {
                let mut idx = Vec::with_capacity(list.len());
                for id in list {
                    let i = lookup("battery_candidates", id, id)?;
                    if idx.contains(&i) {
                        return Err(NetworkError::DuplicateId {
                            kind: "battery candidate",
                            id: id.clone(),
                        });
                    }
                    idx.push(i);
                }
                idx.sort_unstable();
                idx
            }
            None if doc.buses.iter().any(|b| b.candidate_battery.is_some()) => (0..nb)
                .filter(|&i| doc.buses[i].candidate_battery.unwrap_or(false))
                .collect(),
            None => (0..nb).collect(),
        };
        Ok(Network {
            buses: doc.buses,
            lines: doc.lines,
            generators: doc.generators,
            reference_bus,
            candidates,
            line_from,
            line_to,
            gen_bus,
            lines_from_bus,
            lines_to_bus,
            gens_at_bus,
            bus_index,
            line_index,
        })
    }

    /// Serializes back to the document format. The candidate set is
    /// written explicitly so re-parsing reproduces this network.
    pub fn to_document(&self) -> String {
        let doc = NetworkDocument {
            buses: self.buses.clone(),
            lines: self.lines.clone(),
            generators: self.generators.clone(),
            reference_bus: self.buses[self.reference_bus].id.clone(),
            battery_candidates: Some(self.candidates.iter().map(|&i| self.buses[i].id.clone()).collect()),
        };
        serde_json::to_string_pretty(&doc).expect("network document serializes")
    }

    pub fn num_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn num_lines(&self) -> usize {
        self.lines.len()
    }

    pub fn num_generators(&self) -> usize {
        self.generators.len()
    }

    pub fn bus_index(&self, id: &str) -> Option<usize> {
        self.bus_index.get(id).copied()
    }

    pub fn line_index(&self, id: &str) -> Option<usize> {
        self.line_index.get(id).copied()
    }

    pub fn line_ends(&self, line: usize) -> (usize, usize) {
        (self.line_from[line], self.line_to[line])
    }

    pub fn generator_bus(&self, gen: usize) -> usize {
        self.gen_bus[gen]
    }

    /// Lines whose from-end is bus `n`.
    pub fn lines_from(&self, n: usize) -> &[usize] {
        &self.lines_from_bus[n]
    }

    pub fn lines_to(&self, n: usize) -> &[usize] {
        &self.lines_to_bus[n]
    }

    pub fn generators_at(&self, n: usize) -> &[usize] {
        &self.gens_at_bus[n]
    }

    pub fn is_candidate(&self, n: usize) -> bool {
        self.candidates.binary_search(&n).is_ok()
    }

    /// Warning text when the fully energized grid is not connected.
    pub fn connectivity_warning(&self) -> Option<String> {
        let comps = energized_components(self, &HashSet::new());
        (comps.len() > 1).then(|| {
            format!(
                "network has {} islands with all lines energized; islands are served by slack and shed only",
                comps.len()
            )
        })
    }
}
