//! Linear programming core: model container, bounded-variable revised
//! simplex with a sparse LU basis, and fixed-format MPS interchange.

mod lu;
pub mod mps;
mod simplex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use mps::{read_mps, write_mps, MpsError, MpsOutput};
pub use simplex::{solve_lp, warm_solve};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("column {col} ({name}) has lower bound {lower} above upper bound {upper}")]
    InvertedBounds {
        col: usize,
        name: String,
        lower: f64,
        upper: f64,
    },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("duplicate matrix entry at row {row}, column {col}")]
    DuplicateEntry { row: usize, col: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowSense {
    Le,
    Eq,
    Ge,
}

/// One nonzero of the constraint matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Triplet {
    pub row: usize,
    pub col: usize,
    pub val: f64,
}

/// `min c·x + offset` subject to `A x (≤|=|≥) b` and `l ≤ x ≤ u`.
///
/// The matrix is kept as row-major triplets (sorted by row, then column)
/// so builders can append constraints in order and the layout stays
/// reproducible.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StandardFormLP {
    pub name: String,
    pub objective: Vec<f64>,
    pub obj_offset: f64,
    pub entries: Vec<Triplet>,
    pub senses: Vec<RowSense>,
    pub rhs: Vec<f64>,
    pub col_lower: Vec<f64>,
    pub col_upper: Vec<f64>,
    pub col_names: Vec<String>,
    pub row_names: Vec<String>,
}

impl StandardFormLP {
    pub fn new(name: impl Into<String>) -> Self {
        StandardFormLP {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn num_cols(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.senses.len()
    }

    pub fn add_col(&mut self, name: impl Into<String>, lower: f64, upper: f64, cost: f64) -> usize {
        self.objective.push(cost);
        self.col_lower.push(lower);
        self.col_upper.push(upper);
        self.col_names.push(name.into());
        self.objective.len() - 1
    }

    /// Appends a row. Zero coefficients are dropped and repeated columns
    /// are merged so the stored matrix has no duplicates.
    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        sense: RowSense,
        rhs: f64,
        coeffs: &[(usize, f64)],
    ) -> usize {
        let row = self.senses.len();
        let mut sorted: Vec<(usize, f64)> = coeffs.to_vec();
        sorted.sort_by_key(|&(c, _)| c);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(sorted.len());
        for (c, v) in sorted {
            match merged.last_mut() {
                Some(last) if last.0 == c => last.1 += v,
                _ => merged.push((c, v)),
            }
        }
        for (col, val) in merged {
            if val != 0.0 {
                self.entries.push(Triplet { row, col, val });
            }
        }
        self.senses.push(sense);
        self.rhs.push(rhs);
        self.row_names.push(name.into());
        row
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_cols();
        let m = self.num_rows();
        if self.col_lower.len() != n || self.col_upper.len() != n || self.col_names.len() != n {
            return Err(LpError::Dimension(format!(
                "{} objective coefficients but {} lower, {} upper, {} names",
                n,
                self.col_lower.len(),
                self.col_upper.len(),
                self.col_names.len()
            )));
        }
        if self.rhs.len() != m || self.row_names.len() != m {
            return Err(LpError::Dimension(format!(
                "{} row senses but {} right-hand sides, {} names",
                m,
                self.rhs.len(),
                self.row_names.len()
            )));
        }
        if self.objective.iter().any(|c| !c.is_finite()) || !self.obj_offset.is_finite() {
            return Err(LpError::NonFinite("objective".into()));
        }
        if self.rhs.iter().any(|b| !b.is_finite()) {
            return Err(LpError::NonFinite("right-hand side".into()));
        }
        for j in 0..n {
            let (l, u) = (self.col_lower[j], self.col_upper[j]);
            if l.is_nan() || u.is_nan() || l == f64::INFINITY || u == f64::NEG_INFINITY {
                return Err(LpError::NonFinite(format!("bounds of column {j}")));
            }
            if l > u {
                return Err(LpError::InvertedBounds {
                    col: j,
                    name: self.col_names[j].clone(),
                    lower: l,
                    upper: u,
                });
            }
        }
        let mut prev: Option<(usize, usize)> = None;
        for t in &self.entries {
            if t.row >= m || t.col >= n {
                return Err(LpError::Dimension(format!(
                    "entry ({}, {}) outside {}x{} matrix",
                    t.row, t.col, m, n
                )));
            }
            if !t.val.is_finite() {
                return Err(LpError::NonFinite(format!("matrix entry ({}, {})", t.row, t.col)));
            }
            if let Some(p) = prev {
                if p == (t.row, t.col) {
                    return Err(LpError::DuplicateEntry { row: t.row, col: t.col });
                }
                if p > (t.row, t.col) {
                    return Err(LpError::Dimension("matrix entries not in row-major order".into()));
                }
            }
            prev = Some((t.row, t.col));
        }
        Ok(())
    }

    /// Row activities `A x`.
    pub fn row_activity(&self, x: &[f64]) -> Vec<f64> {
        let mut act = vec![0.0; self.num_rows()];
        for t in &self.entries {
            act[t.row] += t.val * x[t.col];
        }
        act
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum::<f64>() + self.obj_offset
    }

    /// Largest violation of any row or column bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let act = self.row_activity(x);
        let mut worst: f64 = 0.0;
        for (i, a) in act.iter().enumerate() {
            let b = self.rhs[i];
            let v = match self.senses[i] {
                RowSense::Le => a - b,
                RowSense::Ge => b - a,
                RowSense::Eq => (a - b).abs(),
            };
            worst = worst.max(v);
        }
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.col_lower[j] - v).max(v - self.col_upper[j]);
        }
        worst
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.col_names.iter().position(|c| c == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pricing {
    /// Most negative reduced cost, switching to Bland's rule after a run of
    /// degenerate pivots and back once progress resumes.
    Dantzig,
    /// Smallest eligible index throughout.
    Bland,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub iteration_limit: usize,
    pub pricing: Pricing,
    /// Consecutive degenerate pivots tolerated before Bland's rule kicks in.
    pub degeneracy_streak: usize,
    pub refactor_interval: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            feasibility_tol: 1e-7,
            optimality_tol: 1e-9,
            iteration_limit: 1_000_000,
            pricing: Pricing::Dantzig,
            degeneracy_streak: 50,
            refactor_interval: 100,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<(), LpError> {
        if !(self.feasibility_tol > 0.0 && self.optimality_tol > 0.0) {
            return Err(LpError::Dimension("solver tolerances must be positive".into()));
        }
        if self.refactor_interval == 0 {
            return Err(LpError::Dimension("refactor interval must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    /// The basis could not be factorized or repaired.
    NumericalFailure,
    /// The model failed validation; nothing was solved.
    InvalidModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable resting at zero.
    Free,
}

/// Status of every structural column followed by every row logical.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Basis {
    pub cols: Vec<VarStatus>,
    pub rows: Vec<VarStatus>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WarmStart {
    Cold,
    Accepted,
    /// The supplied basis did not fit or was singular; solved from scratch.
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub phase1_iterations: usize,
    pub degenerate_pivots: usize,
    pub bound_flips: usize,
    pub refactorizations: usize,
    pub bland_activations: usize,
    pub warm_start: WarmStart,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LPSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    /// Row duals: `c - Aᵀy` gives the structural reduced costs.
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
    pub max_primal_residual: f64,
    pub max_dual_residual: f64,
    pub basis: Option<Basis>,
    pub stats: SolveStats,
}

impl LPSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// Dual objective `Σ b_i y_i + Σ_j d_j·(active bound of j)`; equals
    /// the primal objective at an optimal basis.
    pub fn dual_objective(&self, lp: &StandardFormLP) -> f64 {
        let mut total = lp.obj_offset;
        for (b, y) in lp.rhs.iter().zip(&self.duals) {
            total += b * y;
        }
        for (j, &d) in self.reduced_costs.iter().enumerate() {
            let bound = if d > 0.0 { lp.col_lower[j] } else { lp.col_upper[j] };
            if d != 0.0 && bound.is_finite() {
                total += d * bound;
            }
        }
        total
    }

    pub fn duality_gap(&self, lp: &StandardFormLP) -> f64 {
        (self.objective - self.dual_objective(lp)).abs()
    }

    /// Largest `|y_i · (a_i x - b_i)|` over rows.
    pub fn complementarity(&self, lp: &StandardFormLP) -> f64 {
        let act = lp.row_activity(&self.x);
        act.iter()
            .zip(&lp.rhs)
            .zip(&self.duals)
            .map(|((a, b), y)| (y * (a - b)).abs())
            .fold(0.0, f64::max)
    }
}
