//! Progressive hedging over time-period scenarios.
//!
//! Each period is one scenario. Two kinds of first-stage variables tie the
//! periods together: battery placement, shared by every period, and the
//! stored energy at each period boundary, shared by the two periods that
//! meet there with weight 1/2 each. The subproblem penalty is
//! `w·x + (ρ/2)(x − x̄)²`, with the quadratic replaced by tangent cuts so
//! every subproblem stays an LP.

mod consensus;
mod engine;
mod partition;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{LpStatus, SolverOptions};
use crate::opf::OpfError;
use crate::runtime::ExecPolicy;

pub use consensus::{
    aggregate, augment_subproblem, first_stage_vars, owned_by_period, price_update, residual, tangent_points,
    weight_imbalance, FirstStageVar, PenaltyTerm, VarClass,
};
pub use engine::{
    incumbent_from_consensus, lagrangian_lower_bound, repair_consensus, run_ph, run_ph_with, Incumbent, PHResult,
    PHState, PhModel, PhStatus, TraceEntry,
};
pub use partition::{make_partition, partition_by_count, ScenarioPartition};

/// Largest tolerated `|Σ owners weight·w|` before a lower bound is refused.
pub const WEIGHT_SUM_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhError {
    #[error(transparent)]
    Opf(#[from] OpfError),
    #[error("invalid partition: {0}")]
    Partition(String),
    #[error("invalid options: {0}")]
    Options(String),
    #[error("variable '{var}' expects values from {expected} owners, got {found}")]
    MissingOwner { var: String, expected: usize, found: usize },
    #[error("non-finite penalty data for column '{0}'")]
    NonFinite(String),
    #[error("period {period} subproblem ended with status {status:?}")]
    Solver { period: usize, status: LpStatus },
    #[error("weights do not sum to zero over owners (imbalance {0:e}); lower bound not computed")]
    WeightSum(f64),
    #[error("checkpoint does not match this model: {0}")]
    Checkpoint(String),
    #[error("integer placement is not supported by progressive hedging")]
    IntegerPlacement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PHOptions {
    pub rho: f64,
    /// Overrides `rho` for placement variables.
    pub rho_placement: Option<f64>,
    /// Overrides `rho` for boundary SOC variables.
    pub rho_soc: Option<f64>,
    pub max_iters: usize,
    /// Stop once the consensus residual is at most this.
    pub tol: f64,
    /// Optional early stop on relative gap between best bounds.
    pub gap_target: Option<f64>,
    /// Grid segments per variable range for the proximal cuts.
    pub breakpoints: usize,
    /// Extra cut pairs at `x̄ ± width/2^k`, `k = 1..=refine`.
    pub refine: usize,
    /// Evaluate an incumbent every this many iterations.
    pub incumbent_every: usize,
    pub workers: usize,
    pub policy: ExecPolicy,
    pub solver: SolverOptions,
    /// Tolerance used when verifying stitched incumbents.
    pub verify_tol: f64,
}

impl Default for PHOptions {
    fn default() -> Self {
        PHOptions {
            rho: 0.001,
            rho_placement: None,
            rho_soc: None,
            max_iters: 200,
            tol: 1e-4,
            gap_target: None,
            breakpoints: 8,
            refine: 20,
            incumbent_every: 1,
            workers: 1,
            policy: ExecPolicy::Sync,
            solver: SolverOptions::default(),
            verify_tol: 1e-6,
        }
    }
}

impl PHOptions {
    pub fn validate(&self) -> Result<(), PhError> {
        let rhos = [Some(self.rho), self.rho_placement, self.rho_soc];
        if rhos.iter().flatten().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(PhError::Options("rho must be positive and finite".into()));
        }
        if !(self.tol > 0.0) {
            return Err(PhError::Options("tol must be positive".into()));
        }
        if self.gap_target.is_some_and(|g| !(g >= 0.0)) {
            return Err(PhError::Options("gap target must be non-negative".into()));
        }
        if self.breakpoints == 0 || self.incumbent_every == 0 || self.workers == 0 {
            return Err(PhError::Options("breakpoints, incumbent cadence and workers must be at least 1".into()));
        }
        self.solver.validate().map_err(|e| PhError::Options(e.to_string()))
    }

    pub fn rho_for(&self, class: &VarClass) -> f64 {
        match class {
            VarClass::Placement { .. } => self.rho_placement.unwrap_or(self.rho),
            VarClass::SocBoundary { .. } => self.rho_soc.unwrap_or(self.rho),
        }
    }
}
