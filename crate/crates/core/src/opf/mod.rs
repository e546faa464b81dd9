//! Multi-hour DC-OPF with battery siting, compiled to a bounded-variable LP.

mod builder;
mod evaluate;
mod solution;
mod verify;

use std::collections::BTreeMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::LpStatus;
use crate::network::{DeenergizationSchedule, DemandSeries, Network, NetworkError};

pub use builder::{
    build_extensive_form, build_period_lp, solve_extensive_form, EfResult, PeriodSubproblem, VarMap, ANGLE_BOX,
};
pub use evaluate::{evaluate_cost, soc_trajectory};
pub use solution::{CostBreakdown, PlanningSolution};
pub use verify::{check_feasibility, Constraint, Violation, ViolationReport};

pub const DEFAULT_EF_HOUR_CAP: usize = 2000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OpfError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("invalid battery configuration: {0}")]
    Battery(String),
    #[error("invalid cost configuration: {0}")]
    Cost(String),
    #[error("empty period slice")]
    EmptySlice,
    #[error("hours {start}..{end} fall outside the {horizon}-hour horizon")]
    SliceOutOfRange {
        start: usize,
        end: usize,
        horizon: usize,
    },
    #[error("generator '{0}' has a nonzero cost term of degree 2 or higher; only affine costs are supported")]
    CostDegree(String),
    #[error("extensive form over {hours} hours exceeds the {cap}-hour limit; use progressive hedging (solve-ph)")]
    Guardrail { hours: usize, cap: usize },
    #[error("integer placement enumeration supports at most 6 candidate buses, found {0}")]
    IntegerTooLarge(usize),
    #[error("LP solve ended with status {0:?}")]
    Solve(LpStatus),
    #[error("solution shape does not match the case: {0}")]
    Shape(String),
}

/// Battery technology and placement limits. Defaults are the reference
/// 100 MWh lithium-ion unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatteryConfig {
    pub e_min: f64,
    pub e_max: f64,
    pub p_rate_min: f64,
    pub p_rate_max: f64,
    pub efficiency: f64,
    pub carryover: f64,
    pub x_max: f64,
    pub x_total: f64,
    /// Initial stored energy per candidate bus id; missing buses start empty.
    pub initial_soc: BTreeMap<String, f64>,
    pub integer_placement: bool,
    /// Require final SOC to be at least the initial SOC.
    pub terminal_soc_floor: bool,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        BatteryConfig {
            e_min: 0.0,
            e_max: 1.0,
            p_rate_min: 0.0,
            p_rate_max: 1.0,
            efficiency: 0.95,
            carryover: 0.999958,
            x_max: 4.0,
            x_total: 10.0,
            initial_soc: BTreeMap::new(),
            integer_placement: false,
            terminal_soc_floor: false,
        }
    }
}

impl BatteryConfig {
    pub fn validate(&self) -> Result<(), OpfError> {
        let all = [
            self.e_min,
            self.e_max,
            self.p_rate_min,
            self.p_rate_max,
            self.efficiency,
            self.carryover,
            self.x_max,
            self.x_total,
        ];
        if all.iter().any(|v| !v.is_finite()) || self.initial_soc.values().any(|v| !v.is_finite()) {
            return Err(OpfError::Battery("parameters must be finite".into()));
        }
        if self.e_min > self.e_max {
            return Err(OpfError::Battery("e_min exceeds e_max".into()));
        }
        if self.p_rate_min > self.p_rate_max {
            return Err(OpfError::Battery("p_rate_min exceeds p_rate_max".into()));
        }
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(OpfError::Battery("efficiency must lie in (0, 1]".into()));
        }
        if !(self.carryover > 0.0 && self.carryover <= 1.0) {
            return Err(OpfError::Battery("carryover must lie in (0, 1]".into()));
        }
        if self.x_max < 0.0 || self.x_total < 0.0 {
            return Err(OpfError::Battery("battery counts must be non-negative".into()));
        }
        if self.x_max > self.x_total {
            return Err(OpfError::Battery("x_max exceeds x_total".into()));
        }
        Ok(())
    }

    pub fn initial_soc_of(&self, bus_id: &str) -> f64 {
        self.initial_soc.get(bus_id).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostConfig {
    /// $ per p.u.-hour of unserved demand.
    pub load_shed: f64,
    /// $ per p.u.-hour of slack generation.
    pub slack: f64,
    pub slack_upper: f64,
}

impl Default for CostConfig {
    fn default() -> Self {
        CostConfig {
            load_shed: 20_000.0,
            slack: 50.0 * 20_000.0,
            slack_upper: 10_000.0,
        }
    }
}

impl CostConfig {
    pub fn validate(&self) -> Result<(), OpfError> {
        if !(self.load_shed.is_finite() && self.slack.is_finite() && self.slack_upper.is_finite()) {
            return Err(OpfError::Cost("values must be finite".into()));
        }
        if self.load_shed <= 0.0 {
            return Err(OpfError::Cost("load_shed cost must be positive".into()));
        }
        if self.slack < self.load_shed {
            return Err(OpfError::Cost("slack cost must be at least the load-shed cost".into()));
        }
        if self.slack_upper < 0.0 {
            return Err(OpfError::Cost("slack_upper must be non-negative".into()));
        }
        Ok(())
    }
}

/// Network plus the hourly data it is operated against.
#[derive(Debug, Clone, PartialEq)]
pub struct Case {
    pub network: Network,
    /// Bus-by-hour demand in p.u.
    pub demand: Vec<Vec<f64>>,
    pub schedule: DeenergizationSchedule,
}

impl Case {
    pub fn new(
        network: Network,
        demand: &DemandSeries,
        schedule: DeenergizationSchedule,
        horizon: usize,
    ) -> Result<Self, OpfError> {
        let demand = demand.bus_matrix(&network, horizon)?;
        schedule.validate(&network)?;
        Ok(Case {
            network,
            demand,
            schedule,
        })
    }

    pub fn from_matrix(
        network: Network,
        demand: Vec<Vec<f64>>,
        schedule: DeenergizationSchedule,
    ) -> Result<Self, OpfError> {
        if demand.len() != network.num_buses() {
            return Err(OpfError::Shape(format!(
                "{} demand rows for {} buses",
                demand.len(),
                network.num_buses()
            )));
        }
        let h = demand.first().map_or(0, Vec::len);
        if demand.iter().any(|r| r.len() != h || r.iter().any(|v| !v.is_finite() || *v < 0.0)) {
            return Err(OpfError::Shape("demand rows must share a length and be non-negative".into()));
        }
        schedule.validate(&network)?;
        Ok(Case {
            network,
            demand,
            schedule,
        })
    }

    pub fn horizon(&self) -> usize {
        self.demand.first().map_or(0, Vec::len)
    }

    pub fn slice(&self, hours: Range<usize>, has_left_boundary: bool) -> Result<PeriodSlice, OpfError> {
        PeriodSlice::new(self, hours, has_left_boundary)
    }

    /// Same case restricted to hours `[0, horizon)`.
    pub fn truncated(&self, horizon: usize) -> Case {
        Case {
            network: self.network.clone(),
            demand: self.demand.iter().map(|r| r[..horizon.min(r.len())].to_vec()).collect(),
            schedule: self.schedule.clone(),
        }
    }
}

/// A contiguous block of hours with its demand and line status.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodSlice {
    pub hours: Range<usize>,
    /// Whether the SOC entering the first hour is a decision variable
    /// shared with the preceding period.
    pub has_left_boundary: bool,
    /// True when the slice ends at the horizon's final hour.
    pub closes_horizon: bool,
    /// Bus-by-slice-hour demand.
    pub demand: Vec<Vec<f64>>,
    /// Slice-hour-by-line de-energized flags.
    pub off: Vec<Vec<bool>>,
}

impl PeriodSlice {
    pub fn new(case: &Case, hours: Range<usize>, has_left_boundary: bool) -> Result<Self, OpfError> {
        if hours.is_empty() {
            return Err(OpfError::EmptySlice);
        }
        let horizon = case.horizon();
        if hours.end > horizon {
            return Err(OpfError::SliceOutOfRange {
                start: hours.start,
                end: hours.end,
                horizon,
            });
        }
        let demand = case.demand.iter().map(|r| r[hours.clone()].to_vec()).collect();
        let off = hours
            .clone()
            .map(|t| case.schedule.line_mask(&case.network, t))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PeriodSlice {
            closes_horizon: hours.end == horizon,
            hours,
            has_left_boundary,
            demand,
            off,
        })
    }

    pub fn len(&self) -> usize {
        self.hours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hours.is_empty()
    }
}
