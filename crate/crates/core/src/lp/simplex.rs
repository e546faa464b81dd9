//! Bounded-variable primal revised simplex.
//!
//! Every row `i` gets a logical `s_i` with `A x - s = 0`; the row sense
//! becomes a bound on `s_i` (an equality row fixes it). The all-logical
//! basis is therefore always available, and phase 1 minimizes the sum of
//! basic bound violations from whatever basis we start with, so warm
//! starts and cold starts share one code path.

use super::lu::{BasisFactor, Singular};
use super::{
    Basis, LPSolution, LpStatus, Pricing, RowSense, SolveStats, SolverOptions, StandardFormLP,
    VarStatus, WarmStart,
};

const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_STEP: f64 = 1e-12;
const MAX_REPAIRS: usize = 8;

/// Solves `lp` from the all-logical basis.
pub fn solve_lp(lp: &StandardFormLP, opts: &SolverOptions) -> LPSolution {
    run(lp, opts, None)
}

/// Solves `lp` starting from `basis`. A basis of the wrong shape, or one
/// that cannot be factorized, is discarded and the solve starts cold; the
/// outcome is recorded in [`SolveStats::warm_start`].
pub fn warm_solve(lp: &StandardFormLP, basis: &Basis, opts: &SolverOptions) -> LPSolution {
    run(lp, opts, Some(basis))
}

fn run(lp: &StandardFormLP, opts: &SolverOptions, warm: Option<&Basis>) -> LPSolution {
    if lp.validate().is_err() || opts.validate().is_err() {
        return failed(lp, LpStatus::InvalidModel, empty_stats(WarmStart::Cold));
    }
    let mut s = Simplex::new(lp, opts);
    let mut mode = WarmStart::Cold;
    if let Some(b) = warm {
        mode = if s.install_basis(b) {
            WarmStart::Accepted
        } else {
            s.cold_basis();
            WarmStart::Rejected
        };
    }
    s.stats.warm_start = mode;
    if !s.refactor() {
        if mode == WarmStart::Accepted {
            s.cold_basis();
            s.stats.warm_start = WarmStart::Rejected;
            if !s.refactor() {
                return failed(lp, LpStatus::NumericalFailure, s.stats);
            }
        } else {
            return failed(lp, LpStatus::NumericalFailure, s.stats);
        }
    }
    let status = s.iterate();
    s.finish(status)
}

fn empty_stats(warm_start: WarmStart) -> SolveStats {
    SolveStats {
        iterations: 0,
        phase1_iterations: 0,
        degenerate_pivots: 0,
        bound_flips: 0,
        refactorizations: 0,
        bland_activations: 0,
        warm_start,
    }
}

fn failed(lp: &StandardFormLP, status: LpStatus, stats: SolveStats) -> LPSolution {
    LPSolution {
        status,
        x: vec![0.0; lp.num_cols()],
        duals: vec![0.0; lp.num_rows()],
        reduced_costs: vec![0.0; lp.num_cols()],
        objective: f64::NAN,
        max_primal_residual: f64::INFINITY,
        max_dual_residual: f64::INFINITY,
        basis: None,
        stats,
    }
}

struct Csc {
    start: Vec<usize>,
    idx: Vec<usize>,
    val: Vec<f64>,
}

impl Csc {
    fn from_lp(lp: &StandardFormLP) -> Self {
        let n = lp.num_cols();
        let mut count = vec![0usize; n + 1];
        for t in &lp.entries {
            count[t.col + 1] += 1;
        }
        for j in 0..n {
            count[j + 1] += count[j];
        }
        let start = count.clone();
        let mut fill = count;
        let mut idx = vec![0; lp.entries.len()];
        let mut val = vec![0.0; lp.entries.len()];
        // Entries are row-major, so each column receives rows in order.
        for t in &lp.entries {
            let p = fill[t.col];
            idx[p] = t.row;
            val[p] = t.val;
            fill[t.col] += 1;
        }
        Csc { start, idx, val }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Phase {
    One,
    Two,
}

struct Ratio {
    step: f64,
    /// Basis position leaving, with the bound value it lands on.
    leaving: Option<(usize, f64, VarStatus)>,
}

struct Simplex<'a> {
    lp: &'a StandardFormLP,
    opts: &'a SolverOptions,
    n: usize,
    m: usize,
    a: Csc,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    x: Vec<f64>,
    status: Vec<VarStatus>,
    basis: Vec<usize>,
    position: Vec<usize>,
    factor: Option<BasisFactor>,
    dual_tol: f64,
    stats: SolveStats,
    // scratch
    row_buf: Vec<f64>,
    pos_buf: Vec<f64>,
    pi: Vec<f64>,
    alpha: Vec<f64>,
}

const NOT_BASIC: usize = usize::MAX;

impl<'a> Simplex<'a> {
    fn new(lp: &'a StandardFormLP, opts: &'a SolverOptions) -> Self {
        let n = lp.num_cols();
        let m = lp.num_rows();
        let mut lower = lp.col_lower.clone();
        let mut upper = lp.col_upper.clone();
        for i in 0..m {
            let b = lp.rhs[i];
            let (l, u) = match lp.senses[i] {
                RowSense::Le => (f64::NEG_INFINITY, b),
                RowSense::Ge => (b, f64::INFINITY),
                RowSense::Eq => (b, b),
            };
            lower.push(l);
            upper.push(u);
        }
        let mut cost = lp.objective.clone();
        cost.resize(n + m, 0.0);
        let cmax = lp.objective.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        let mut s = Simplex {
            lp,
            opts,
            n,
            m,
            a: Csc::from_lp(lp),
            lower,
            upper,
            cost,
            x: vec![0.0; n + m],
            status: vec![VarStatus::AtLower; n + m],
            basis: Vec::with_capacity(m),
            position: vec![NOT_BASIC; n + m],
            factor: None,
            dual_tol: opts.optimality_tol * cmax.max(1.0),
            stats: empty_stats(WarmStart::Cold),
            row_buf: vec![0.0; m],
            pos_buf: vec![0.0; m],
            pi: vec![0.0; m],
            alpha: vec![0.0; m],
        };
        s.cold_basis();
        s
    }

    fn nonbasic_home(&self, j: usize) -> (VarStatus, f64) {
        if self.lower[j].is_finite() {
            (VarStatus::AtLower, self.lower[j])
        } else if self.upper[j].is_finite() {
            (VarStatus::AtUpper, self.upper[j])
        } else {
            (VarStatus::Free, 0.0)
        }
    }

    fn cold_basis(&mut self) {
        self.basis.clear();
        self.position.iter_mut().for_each(|p| *p = NOT_BASIC);
        for j in 0..self.n {
            let (st, v) = self.nonbasic_home(j);
            self.status[j] = st;
            self.x[j] = v;
        }
        for i in 0..self.m {
            let j = self.n + i;
            self.status[j] = VarStatus::Basic;
            self.position[j] = i;
            self.basis.push(j);
        }
    }

    fn install_basis(&mut self, b: &Basis) -> bool {
        if b.cols.len() != self.n || b.rows.len() != self.m {
            return false;
        }
        let all: Vec<VarStatus> = b.cols.iter().chain(&b.rows).copied().collect();
        if all.iter().filter(|s| **s == VarStatus::Basic).count() != self.m {
            return false;
        }
        self.basis.clear();
        self.position.iter_mut().for_each(|p| *p = NOT_BASIC);
        for (j, st) in all.into_iter().enumerate() {
            let (l, u) = (self.lower[j], self.upper[j]);
            let placed = match st {
                VarStatus::Basic => {
                    self.position[j] = self.basis.len();
                    self.basis.push(j);
                    Some((VarStatus::Basic, 0.0))
                }
                VarStatus::AtLower if l.is_finite() => Some((VarStatus::AtLower, l)),
                VarStatus::AtUpper if u.is_finite() => Some((VarStatus::AtUpper, u)),
                VarStatus::Free if !l.is_finite() && !u.is_finite() => Some((VarStatus::Free, 0.0)),
                _ => None,
            };
            let (st, v) = placed.unwrap_or_else(|| self.nonbasic_home(j));
            self.status[j] = st;
            if st != VarStatus::Basic {
                self.x[j] = v;
            }
        }
        true
    }

    fn column(&self, j: usize) -> Vec<(usize, f64)> {
        if j < self.n {
            let (a, b) = (self.a.start[j], self.a.start[j + 1]);
            self.a.idx[a..b].iter().copied().zip(self.a.val[a..b].iter().copied()).collect()
        } else {
            vec![(j - self.n, -1.0)]
        }
    }

    fn scatter_column(&self, j: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        if j < self.n {
            for p in self.a.start[j]..self.a.start[j + 1] {
                out[self.a.idx[p]] = self.a.val[p];
            }
        } else {
            out[j - self.n] = -1.0;
        }
    }

    fn dot_column(&self, j: usize, y: &[f64]) -> f64 {
        if j < self.n {
            let mut s = 0.0;
            for p in self.a.start[j]..self.a.start[j + 1] {
                s += self.a.val[p] * y[self.a.idx[p]];
            }
            s
        } else {
            -y[j - self.n]
        }
    }

    /// Fresh factorization of the current basis; dependent columns are
    /// swapped for logicals of the uncovered rows. Returns false if the
    /// basis cannot be repaired.
    fn refactor(&mut self) -> bool {
        for _ in 0..MAX_REPAIRS {
            let cols: Vec<Vec<(usize, f64)>> = self.basis.iter().map(|&j| self.column(j)).collect();
            self.stats.refactorizations += 1;
            match BasisFactor::factorize(self.m, &cols) {
                Ok(f) => {
                    self.factor = Some(f);
                    self.recompute_basic_values();
                    return true;
                }
                Err(Singular { positions, rows }) => {
                    for (pos, row) in positions.into_iter().zip(rows) {
                        let out = self.basis[pos];
                        let v = self.x[out];
                        let (l, u) = (self.lower[out], self.upper[out]);
                        let (st, val) = if l.is_finite() && (!u.is_finite() || (v - l).abs() <= (u - v).abs()) {
                            (VarStatus::AtLower, l)
                        } else if u.is_finite() {
                            (VarStatus::AtUpper, u)
                        } else {
                            (VarStatus::Free, 0.0)
                        };
                        self.status[out] = st;
                        self.x[out] = val;
                        self.position[out] = NOT_BASIC;
                        let inn = self.n + row;
                        self.status[inn] = VarStatus::Basic;
                        self.position[inn] = pos;
                        self.basis[pos] = inn;
                    }
                }
            }
        }
        false
    }

    fn recompute_basic_values(&mut self) {
        let m = self.m;
        let mut rhs = std::mem::take(&mut self.row_buf);
        rhs.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..self.n + m {
            if self.status[j] == VarStatus::Basic || self.x[j] == 0.0 {
                continue;
            }
            let xj = self.x[j];
            if j < self.n {
                for p in self.a.start[j]..self.a.start[j + 1] {
                    rhs[self.a.idx[p]] -= self.a.val[p] * xj;
                }
            } else {
                rhs[j - self.n] += xj;
            }
        }
        let mut z = std::mem::take(&mut self.pos_buf);
        self.factor.as_ref().expect("factorized").ftran(&mut rhs, &mut z);
        for (pos, &j) in self.basis.iter().enumerate() {
            self.x[j] = z[pos];
        }
        self.row_buf = rhs;
        self.pos_buf = z;
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let tol = self.opts.feasibility_tol;
        let v = self.x[j];
        if v < self.lower[j] - tol {
            self.lower[j] - v
        } else if v > self.upper[j] + tol {
            v - self.upper[j]
        } else {
            0.0
        }
    }

    fn phase(&self) -> Phase {
        if self.basis.iter().any(|&j| self.infeasibility(j) > 0.0) {
            Phase::One
        } else {
            Phase::Two
        }
    }

    fn compute_duals(&mut self, phase: Phase) {
        let tol = self.opts.feasibility_tol;
        let mut c = std::mem::take(&mut self.pos_buf);
        for (pos, &j) in self.basis.iter().enumerate() {
            c[pos] = match phase {
                Phase::Two => self.cost[j],
                Phase::One => {
                    let v = self.x[j];
                    if v < self.lower[j] - tol {
                        -1.0
                    } else if v > self.upper[j] + tol {
                        1.0
                    } else {
                        0.0
                    }
                }
            };
        }
        let mut pi = std::mem::take(&mut self.pi);
        self.factor.as_mut().expect("factorized").btran(&mut c, &mut pi);
        self.pi = pi;
        self.pos_buf = c;
    }

    fn reduced_cost(&self, j: usize, phase: Phase) -> f64 {
        let c = if phase == Phase::Two { self.cost[j] } else { 0.0 };
        c - self.dot_column(j, &self.pi)
    }

    /// Entering variable and direction (+1 increase, -1 decrease).
    fn price(&self, phase: Phase, bland: bool) -> Option<(usize, f64)> {
        let tol = if phase == Phase::Two { self.dual_tol } else { self.opts.optimality_tol };
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.n + self.m {
            let st = self.status[j];
            if st == VarStatus::Basic || self.lower[j] == self.upper[j] {
                continue;
            }
            let d = self.reduced_cost(j, phase);
            let dir = match st {
                VarStatus::AtLower if d < -tol => 1.0,
                VarStatus::AtUpper if d > tol => -1.0,
                VarStatus::Free if d < -tol => 1.0,
                VarStatus::Free if d > tol => -1.0,
                _ => continue,
            };
            if bland {
                return Some((j, dir));
            }
            if best.is_none_or(|(_, _, m)| d.abs() > m) {
                best = Some((j, dir, d.abs()));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    fn ratio_test(&self, q: usize, dir: f64, phase: Phase, bland: bool) -> Option<Ratio> {
        let tol = self.opts.feasibility_tol;
        let flip = self.upper[q] - self.lower[q];
        // (position, exact ratio, harris ratio, target bound, status)
        let mut cands: Vec<(usize, f64, f64, f64, VarStatus)> = Vec::new();
        for pos in 0..self.m {
            let a = self.alpha[pos];
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let j = self.basis[pos];
            let rate = -dir * a;
            let v = self.x[j];
            let (l, u) = (self.lower[j], self.upper[j]);
            let target = if rate > 0.0 {
                if phase == Phase::One && v < l - tol {
                    Some((l, VarStatus::AtLower))
                } else if v > u + tol {
                    None
                } else if u.is_finite() {
                    Some((u, VarStatus::AtUpper))
                } else {
                    None
                }
            } else if phase == Phase::One && v > u + tol {
                Some((u, VarStatus::AtUpper))
            } else if v < l - tol {
                None
            } else if l.is_finite() {
                Some((l, VarStatus::AtLower))
            } else {
                None
            };
            if let Some((bound, st)) = target {
                let dist = (bound - v) / rate;
                let harris = (bound - v + tol * rate.signum()) / rate;
                let st = if l == u { VarStatus::AtLower } else { st };
                cands.push((pos, dist.max(0.0), harris.max(0.0), bound, st));
            }
        }
        let pick = if bland {
            let min = cands.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
            cands
                .iter()
                .filter(|c| c.1 <= min)
                .min_by_key(|c| self.basis[c.0])
                .copied()
        } else {
            let limit = cands.iter().map(|c| c.2).fold(f64::INFINITY, f64::min);
            let mut best: Option<(usize, f64, f64, f64, VarStatus)> = None;
            for c in &cands {
                if c.1 <= limit {
                    let better = match best {
                        None => true,
                        Some(b) => self.alpha[c.0].abs() > self.alpha[b.0].abs(),
                    };
                    if better {
                        best = Some(*c);
                    }
                }
            }
            best
        };
        match pick {
            Some((pos, step, _, bound, st)) if step < flip => Some(Ratio {
                step,
                leaving: Some((pos, bound, st)),
            }),
            _ if flip.is_finite() => Some(Ratio {
                step: flip,
                leaving: None,
            }),
            Some((pos, step, _, bound, st)) => Some(Ratio {
                step,
                leaving: Some((pos, bound, st)),
            }),
            None => None,
        }
    }

    fn iterate(&mut self) -> LpStatus {
        let mut degenerate_run = 0usize;
        let mut bland = self.opts.pricing == Pricing::Bland;
        let mut fresh = true;
        loop {
            if self.stats.iterations >= self.opts.iteration_limit {
                return LpStatus::IterationLimit;
            }
            if self.factor.as_ref().map_or(0, |f| f.num_etas()) >= self.opts.refactor_interval {
                if !self.refactor() {
                    return LpStatus::NumericalFailure;
                }
                fresh = true;
            }
            let phase = self.phase();
            self.compute_duals(phase);
            let Some((q, dir)) = self.price(phase, bland) else {
                if !fresh {
                    if !self.refactor() {
                        return LpStatus::NumericalFailure;
                    }
                    fresh = true;
                    continue;
                }
                return match phase {
                    Phase::One => LpStatus::Infeasible,
                    Phase::Two => LpStatus::Optimal,
                };
            };
            let mut col = std::mem::take(&mut self.row_buf);
            self.scatter_column(q, &mut col);
            let mut alpha = std::mem::take(&mut self.alpha);
            self.factor.as_ref().expect("factorized").ftran(&mut col, &mut alpha);
            self.row_buf = col;
            self.alpha = alpha;

            let Some(ratio) = self.ratio_test(q, dir, phase, bland) else {
                if phase == Phase::Two && fresh {
                    return LpStatus::Unbounded;
                }
                if !self.refactor() || fresh {
                    return LpStatus::NumericalFailure;
                }
                fresh = true;
                continue;
            };
            fresh = false;
            self.stats.iterations += 1;
            if phase == Phase::One {
                self.stats.phase1_iterations += 1;
            }
            let t = ratio.step;
            if t <= DEGENERATE_STEP {
                self.stats.degenerate_pivots += 1;
                degenerate_run += 1;
                if !bland && degenerate_run >= self.opts.degeneracy_streak {
                    bland = true;
                    self.stats.bland_activations += 1;
                }
            } else {
                degenerate_run = 0;
                if self.opts.pricing == Pricing::Dantzig {
                    bland = false;
                }
            }
            if t != 0.0 {
                self.x[q] += dir * t;
                for pos in 0..self.m {
                    let a = self.alpha[pos];
                    if a != 0.0 {
                        let j = self.basis[pos];
                        self.x[j] -= dir * t * a;
                    }
                }
            }
            match ratio.leaving {
                None => {
                    self.stats.bound_flips += 1;
                    let (st, v) = if dir > 0.0 {
                        (VarStatus::AtUpper, self.upper[q])
                    } else {
                        (VarStatus::AtLower, self.lower[q])
                    };
                    self.status[q] = st;
                    self.x[q] = v;
                }
                Some((pos, bound, st)) => {
                    let out = self.basis[pos];
                    self.x[out] = bound;
                    self.status[out] = st;
                    self.position[out] = NOT_BASIC;
                    self.status[q] = VarStatus::Basic;
                    self.position[q] = pos;
                    self.basis[pos] = q;
                    let alpha = std::mem::take(&mut self.alpha);
                    self.factor.as_mut().expect("factorized").push_eta(pos, &alpha);
                    self.alpha = alpha;
                }
            }
        }
    }

    fn finish(mut self, status: LpStatus) -> LPSolution {
        let n = self.n;
        let m = self.m;
        let x: Vec<f64> = self.x[..n].to_vec();
        let primal_res = self.lp.max_violation(&x);
        let mut reduced = vec![0.0; n];
        let mut dual_res: f64 = 0.0;
        if status == LpStatus::Optimal {
            self.compute_duals(Phase::Two);
            for j in 0..n + m {
                let d = if self.status[j] == VarStatus::Basic { 0.0 } else { self.reduced_cost(j, Phase::Two) };
                let bad = match self.status[j] {
                    VarStatus::Basic => 0.0,
                    VarStatus::AtLower if self.lower[j] == self.upper[j] => 0.0,
                    VarStatus::AtLower => (-d).max(0.0),
                    VarStatus::AtUpper => d.max(0.0),
                    VarStatus::Free => d.abs(),
                };
                dual_res = dual_res.max(bad);
                if j < n {
                    reduced[j] = d;
                }
            }
        }
        let duals = if status == LpStatus::Optimal { self.pi.clone() } else { vec![0.0; m] };
        let objective = self.lp.objective_value(&x);
        let basis = Basis {
            cols: self.status[..n].to_vec(),
            rows: self.status[n..].to_vec(),
        };
        LPSolution {
            status,
            x,
            duals,
            reduced_costs: reduced,
            objective,
            max_primal_residual: primal_res,
            max_dual_residual: if status == LpStatus::Optimal { dual_res } else { f64::INFINITY },
            basis: Some(basis),
            stats: self.stats,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::RowSense::*;

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    #[test]
    fn maximize_single_variable() {
        let mut lp = StandardFormLP::new("max_x");
        let x = lp.add_col("x", 0.0, f64::INFINITY, -1.0);
        lp.add_row("cap", Le, 1.0, &[(x, 1.0)]);
        let sol = solve_lp(&lp, &opts());
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.x[0] - 1.0).abs() < 1e-12);
        assert!((sol.objective + 1.0).abs() < 1e-12);
    }

    #[test]
    fn equality_row_picks_cheaper_variable() {
        let mut lp = StandardFormLP::new("split");
        let x = lp.add_col("x", 0.0, f64::INFINITY, 1.0);
        let y = lp.add_col("y", 0.0, f64::INFINITY, 0.0);
        lp.add_row("sum", Eq, 1.0, &[(x, 1.0), (y, 1.0)]);
        let sol = solve_lp(&lp, &opts());
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!(sol.x[0].abs() < 1e-12);
        assert!((sol.x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn detects_infeasible() {
        let mut lp = StandardFormLP::new("inf");
        let x = lp.add_col("x", 0.0, 1.0, 1.0);
        lp.add_row("need", Ge, 2.0, &[(x, 1.0)]);
        assert_eq!(solve_lp(&lp, &opts()).status, LpStatus::Infeasible);
    }

    #[test]
    fn detects_unbounded() {
        let mut lp = StandardFormLP::new("unb");
        let x = lp.add_col("x", 0.0, f64::INFINITY, -1.0);
        let y = lp.add_col("y", 0.0, f64::INFINITY, 0.0);
        lp.add_row("r", Ge, 1.0, &[(x, 1.0), (y, -1.0)]);
        assert_eq!(solve_lp(&lp, &opts()).status, LpStatus::Unbounded);
    }

    #[test]
    fn free_variable_and_bound_flip() {
        // min -x - y, x in [0, 2], y free, x + y <= 3, y <= x.
        let mut lp = StandardFormLP::new("flip");
        let x = lp.add_col("x", 0.0, 2.0, -1.0);
        let y = lp.add_col("y", f64::NEG_INFINITY, f64::INFINITY, -1.0);
        lp.add_row("a", Le, 3.0, &[(x, 1.0), (y, 1.0)]);
        lp.add_row("b", Le, 0.0, &[(y, 1.0), (x, -1.0)]);
        let sol = solve_lp(&lp, &opts());
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective + 3.0).abs() < 1e-9);
        assert!(sol.duality_gap(&lp) < 1e-9);
    }

    #[test]
    fn warm_start_from_optimal_basis_takes_no_pivots() {
        let mut lp = StandardFormLP::new("warm");
        let x = lp.add_col("x", 0.0, 4.0, -2.0);
        let y = lp.add_col("y", 0.0, 4.0, -3.0);
        lp.add_row("a", Le, 5.0, &[(x, 1.0), (y, 1.0)]);
        lp.add_row("b", Le, 8.0, &[(x, 1.0), (y, 3.0)]);
        let cold = solve_lp(&lp, &opts());
        assert!(cold.stats.iterations > 0);
        let warm = warm_solve(&lp, cold.basis.as_ref().unwrap(), &opts());
        assert_eq!(warm.stats.iterations, 0);
        assert_eq!(warm.stats.warm_start, WarmStart::Accepted);
        assert_eq!(warm.x, cold.x);
    }

    #[test]
    fn malformed_basis_is_rejected() {
        let mut lp = StandardFormLP::new("warm");
        let x = lp.add_col("x", 0.0, 4.0, -2.0);
        lp.add_row("a", Le, 5.0, &[(x, 1.0)]);
        let bad = Basis {
            cols: vec![VarStatus::Basic, VarStatus::Basic],
            rows: vec![],
        };
        let sol = warm_solve(&lp, &bad, &opts());
        assert_eq!(sol.stats.warm_start, WarmStart::Rejected);
        assert_eq!(sol.status, LpStatus::Optimal);
    }

    #[test]
    fn singular_warm_basis_is_repaired() {
        // Two identical columns both marked basic.
        let mut lp = StandardFormLP::new("dup");
        let x = lp.add_col("x", 0.0, 10.0, -1.0);
        let y = lp.add_col("y", 0.0, 10.0, -1.0);
        lp.add_row("a", Le, 3.0, &[(x, 1.0), (y, 1.0)]);
        lp.add_row("b", Le, 3.0, &[(x, 1.0), (y, 1.0)]);
        let basis = Basis {
            cols: vec![VarStatus::Basic, VarStatus::Basic],
            rows: vec![VarStatus::AtUpper, VarStatus::AtUpper],
        };
        let sol = warm_solve(&lp, &basis, &opts());
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective + 3.0).abs() < 1e-9);
    }

    #[test]
    fn invalid_model_is_reported() {
        let mut lp = StandardFormLP::new("bad");
        lp.add_col("x", 1.0, 0.0, 0.0);
        assert_eq!(solve_lp(&lp, &opts()).status, LpStatus::InvalidModel);
    }
}
