use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::consensus::{aggregate, augment_subproblem, first_stage_vars, owned_by_period, price_update, residual, weight_imbalance};
use super::{FirstStageVar, PHOptions, PenaltyTerm, PhError, ScenarioPartition, VarClass, WEIGHT_SUM_TOL};
use crate::lp::{solve_lp, warm_solve, Basis, LPSolution, SolverOptions, StandardFormLP};
use crate::opf::{
    build_period_lp, check_feasibility, BatteryConfig, Case, CostConfig, PeriodSubproblem, PlanningSolution, ViolationReport,
};
use crate::runtime::{ordered_sum, parallel_map, ExecPolicy, TaskError, WorkPlan};

/// The decomposed problem: one LP per period plus the first-stage
/// variables that couple them.
#[derive(Debug, Clone)]
pub struct PhModel {
    pub case: Case,
    pub partition: ScenarioPartition,
    pub batt: BatteryConfig,
    pub cost: CostConfig,
    pub subs: Vec<PeriodSubproblem>,
    pub vars: Vec<FirstStageVar>,
    /// Per period, `(variable, owner slot)` pairs in variable order.
    pub owned: Vec<Vec<(usize, usize)>>,
}

impl PhModel {
    pub fn new(case: &Case, partition: &ScenarioPartition, batt: &BatteryConfig, cost: &CostConfig) -> Result<Self, PhError> {
        partition.validate()?;
        if partition.horizon() != case.horizon() {
            return Err(PhError::Partition(format!(
                "partition covers {} hours but the case has {}",
                partition.horizon(),
                case.horizon()
            )));
        }
        if batt.integer_placement {
            return Err(PhError::IntegerPlacement);
        }
        let subs = partition
            .slices(case)?
            .iter()
            .map(|sl| build_period_lp(&case.network, sl, batt, cost))
            .collect::<Result<Vec<_>, _>>()?;
        let ids: Vec<String> = case.network.candidates.iter().map(|&n| case.network.buses[n].id.clone()).collect();
        let vars = first_stage_vars(&subs, &partition.probabilities, &ids);
        let owned = owned_by_period(&vars, subs.len());
        Ok(PhModel {
            case: case.clone(),
            partition: partition.clone(),
            batt: batt.clone(),
            cost: cost.clone(),
            subs,
            vars,
            owned,
        })
    }

    pub fn periods(&self) -> usize {
        self.subs.len()
    }

    /// Multiplier applied to an owner's price and proximal weight inside
    /// its subproblem. It is 1 whenever the owners of a variable are
    /// weighted equally, and in general keeps the per-variable sum of
    /// subproblem prices at zero.
    fn owner_scale(&self, v: usize, slot: usize) -> f64 {
        let var = &self.vars[v];
        var.owners.len() as f64 * var.owners[slot].1
    }

    fn penalty_terms(&self, s: usize, w: &[Vec<f64>], xbar: &[f64], opts: Option<&PHOptions>) -> Vec<PenaltyTerm> {
        self.owned[s]
            .iter()
            .map(|&(v, slot)| {
                let var = &self.vars[v];
                let k = self.owner_scale(v, slot);
                PenaltyTerm {
                    col: var.owners[slot].2,
                    w: k * w[v][slot],
                    xbar: xbar[v],
                    rho: opts.map_or(0.0, |o| k * o.rho_for(&var.class)),
                    lower: var.lower,
                    upper: var.upper,
                }
            })
            .collect()
    }

    /// First-stage values of period `s`, in `owned[s]` order.
    fn owned_values(&self, s: usize, x: &[f64]) -> Vec<f64> {
        self.owned[s].iter().map(|&(v, slot)| x[self.vars[v].owners[slot].2]).collect()
    }

    /// `values[v][slot]` from per-period vectors in `owned` order.
    fn by_variable(&self, per_period: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = self.vars.iter().map(|v| vec![0.0; v.owners.len()]).collect();
        for (s, vals) in per_period.iter().enumerate() {
            for (&(v, slot), &x) in self.owned[s].iter().zip(vals) {
                out[v][slot] = x;
            }
        }
        out
    }

    fn lb_lp(&self, s: usize, w: &[Vec<f64>]) -> Result<StandardFormLP, PhError> {
        let zero = vec![0.0; self.vars.len()];
        augment_subproblem(&self.subs[s].lp, &self.penalty_terms(s, w, &zero, None), 1, 0)
    }

    fn fixed_lp(&self, s: usize, repaired: &[f64]) -> StandardFormLP {
        let mut lp = self.subs[s].lp.clone();
        for &(v, slot) in &self.owned[s] {
            let col = self.vars[v].owners[slot].2;
            lp.col_lower[col] = repaired[v];
            lp.col_upper[col] = repaired[v];
        }
        lp
    }
}

/// Clips placement to `[0, X_max]`, scales it down uniformly if the total
/// exceeds `X_total`, then clips each boundary SOC into the energy range
/// of its bus's repaired placement.
pub fn repair_consensus(model: &PhModel, xbar: &[f64]) -> Vec<f64> {
    let b = &model.batt;
    let mut out = xbar.to_vec();
    let mut placement = vec![0.0; model.case.network.candidates.len()];
    for (v, var) in model.vars.iter().enumerate() {
        if let VarClass::Placement { candidate } = var.class {
            out[v] = xbar[v].clamp(0.0, b.x_max);
            placement[candidate] = out[v];
        }
    }
    let total: f64 = placement.iter().sum();
    if total > b.x_total && total > 0.0 {
        let f = b.x_total / total;
        for (v, var) in model.vars.iter().enumerate() {
            if let VarClass::Placement { candidate } = var.class {
                out[v] *= f;
                placement[candidate] = out[v];
            }
        }
    }
    for (v, var) in model.vars.iter().enumerate() {
        if let VarClass::SocBoundary { candidate, .. } = var.class {
            let x = placement[candidate];
            out[v] = xbar[v].clamp(x * b.e_min, x * b.e_max);
        }
    }
    out
}

/// A verified, fully non-anticipative plan over the whole horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Incumbent {
    pub solution: PlanningSolution,
    pub ub: f64,
}

fn solve_tracked(lp: &StandardFormLP, basis: &mut Option<Basis>, opts: &SolverOptions) -> LPSolution {
    let mut sol = match basis.as_ref() {
        Some(b) => warm_solve(lp, b, opts),
        None => solve_lp(lp, opts),
    };
    if !sol.is_optimal() && basis.is_some() {
        sol = solve_lp(lp, opts);
    }
    if sol.is_optimal() {
        *basis = sol.basis.clone();
    }
    sol
}

fn first_error<T>(r: Result<T, TaskError<PhError>>) -> Result<T, PhError> {
    r.map_err(|e| e.error)
}

fn stitch(model: &PhModel, xs: &[Vec<f64>]) -> Result<PlanningSolution, PhError> {
    let mut plans = model
        .subs
        .iter()
        .zip(xs)
        .map(|(sub, x)| sub.extract(&model.case.network, &model.cost, x));
    let first = plans.next().expect("at least one period");
    plans.try_fold(first, |acc, p| acc.concat(p)).map_err(PhError::from)
}

fn verified(model: &PhModel, solution: PlanningSolution, tol: f64) -> Result<(Incumbent, ViolationReport), PhError> {
    let report = check_feasibility(&solution, &model.case, &model.batt, &model.cost, tol)?;
    let ub = solution.cost.total;
    Ok((Incumbent { solution, ub }, report))
}

type Checked = Result<(Incumbent, ViolationReport), PhError>;
type PeriodBases = (Option<Basis>, Option<Basis>);

fn incumbent_with_bases(
    model: &PhModel,
    xbar: &[f64],
    bases: Vec<Option<Basis>>,
    plan: &WorkPlan,
    opts: &PHOptions,
) -> (Checked, Vec<Option<Basis>>) {
    let repaired = repair_consensus(model, xbar);
    let out = parallel_map(plan, bases, |s, mut basis| -> Result<_, PhError> {
        let sol = solve_tracked(&model.fixed_lp(s, &repaired), &mut basis, &opts.solver);
        Ok((basis, sol))
    })
    .expect("tasks are infallible");
    let mut bases = Vec::with_capacity(out.len());
    let mut xs = Vec::with_capacity(out.len());
    let mut failure = None;
    for (s, (basis, sol)) in out.into_iter().enumerate() {
        bases.push(basis);
        if !sol.is_optimal() && failure.is_none() {
            failure = Some(PhError::Solver {
                period: s,
                status: sol.status,
            });
        }
        xs.push(sol.x);
    }
    if let Some(e) = failure {
        return (Err(e), bases);
    }
    (stitch(model, &xs).and_then(|sol| verified(model, sol, opts.verify_tol)), bases)
}

/// Fixes every first-stage variable to the repaired consensus, re-solves
/// each period and stitches the results. The plan is returned with its
/// verifier report; it is a valid upper bound only when the report is
/// empty.
pub fn incumbent_from_consensus(
    model: &PhModel,
    xbar: &[f64],
    opts: &PHOptions,
) -> Result<(Incumbent, ViolationReport), PhError> {
    let plan = WorkPlan::new(model.periods(), opts.workers, ExecPolicy::Sync).map_err(|e| PhError::Options(e.to_string()))?;
    incumbent_with_bases(model, xbar, vec![None; model.periods()], &plan, opts).0
}

/// `Σ_s min f_s(x) + w_s·x`. Valid for the full problem whenever the
/// weighted sum of `w` over each variable's owners is zero.
pub fn lagrangian_lower_bound(model: &PhModel, w: &[Vec<f64>], opts: &PHOptions) -> Result<f64, PhError> {
    let imbalance = weight_imbalance(w, &model.vars);
    if imbalance > WEIGHT_SUM_TOL {
        return Err(PhError::WeightSum(imbalance));
    }
    let plan = WorkPlan::new(model.periods(), opts.workers, ExecPolicy::Sync).map_err(|e| PhError::Options(e.to_string()))?;
    let objs = first_error(parallel_map(&plan, vec![(); model.periods()], |s, _| {
        let sol = solve_lp(&model.lb_lp(s, w)?, &opts.solver);
        if !sol.is_optimal() {
            return Err(PhError::Solver {
                period: s,
                status: sol.status,
            });
        }
        Ok(sol.objective + model.subs[s].cost_offset)
    }))?;
    Ok(ordered_sum(&objs))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhStatus {
    Converged,
    GapReached,
    IterationLimit,
}

/// One line of the iteration trace. `LB` and `UB` are best-so-far bounds;
/// `lb_iter` and `ub_iter` are this iteration's values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub v: usize,
    pub residual: f64,
    #[serde(rename = "LB")]
    pub lb: Option<f64>,
    #[serde(rename = "UB")]
    pub ub: Option<f64>,
    pub gap: Option<f64>,
    pub lb_iter: Option<f64>,
    pub ub_iter: Option<f64>,
    /// Largest `|x_s − x̄|` over placement variables and owners.
    pub placement_deviation: f64,
    /// Largest disagreement between the two sides of a period boundary.
    pub soc_mismatch: f64,
    pub weight_imbalance: f64,
    /// Verifier findings on this iteration's incumbent, if it was rejected.
    pub incumbent_violations: usize,
    pub wall_ms: f64,
    pub solve_ms: f64,
    pub incumbent_ms: f64,
}

impl TraceEntry {
    /// Copy with the timing fields zeroed, for reproducibility checks.
    pub fn without_timing(&self) -> TraceEntry {
        TraceEntry {
            wall_ms: 0.0,
            solve_ms: 0.0,
            incumbent_ms: 0.0,
            ..self.clone()
        }
    }
}

/// Resumable algorithm state, written as the checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PHState {
    pub iteration: usize,
    pub var_ids: Vec<String>,
    pub xbar: Vec<f64>,
    /// `w[v][slot]` for every variable and owner.
    pub w: Vec<Vec<f64>>,
    pub best_lb: Option<f64>,
    pub best_ub: Option<f64>,
    pub incumbent: Option<Incumbent>,
    pub trace: Vec<TraceEntry>,
}

impl PHState {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("state serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, PhError> {
        serde_json::from_str(text).map_err(|e| PhError::Checkpoint(e.to_string()))
    }
}

#[derive(Debug, Clone)]
pub struct PHResult {
    pub status: PhStatus,
    pub iterations: usize,
    pub incumbent: Option<Incumbent>,
    pub ub: Option<f64>,
    pub lb: Option<f64>,
    pub gap: Option<f64>,
    pub trace: Vec<TraceEntry>,
    pub xbar: Vec<f64>,
    /// Final subproblem values `values[v][slot]`.
    pub values: Vec<Vec<f64>>,
    pub state: PHState,
    pub wall_ms: f64,
}

pub fn relative_gap(lb: Option<f64>, ub: Option<f64>) -> Option<f64> {
    match (lb, ub) {
        (Some(l), Some(u)) => Some((u - l) / u.abs().max(1e-12)),
        _ => None,
    }
}

/// Builds the period model and runs progressive hedging.
pub fn run_ph(
    case: &Case,
    partition: &ScenarioPartition,
    batt: &BatteryConfig,
    cost: &CostConfig,
    opts: &PHOptions,
) -> Result<PHResult, PhError> {
    let model = PhModel::new(case, partition, batt, cost)?;
    run_ph_with(&model, opts, None, &mut |_, _| {})
}

struct SolveOut {
    values: Vec<f64>,
    x: Vec<f64>,
    lb: f64,
}

fn solve_phase(
    model: &PhModel,
    plan: &WorkPlan,
    opts: &PHOptions,
    state: &PHState,
    first: bool,
    bases: Vec<PeriodBases>,
) -> Result<Vec<(PeriodBases, SolveOut)>, PhError> {
    first_error(parallel_map(plan, bases, |s, (mut main, mut lbb)| {
        let sub = &model.subs[s];
        let fail = |status| PhError::Solver { period: s, status };
        if first {
            let sol = solve_tracked(&sub.lp, &mut main, &opts.solver);
            if !sol.is_optimal() {
                return Err(fail(sol.status));
            }
            let out = SolveOut {
                values: model.owned_values(s, &sol.x),
                lb: sol.objective + sub.cost_offset,
                x: sol.x,
            };
            return Ok(((main, lbb), out));
        }
        let terms = model.penalty_terms(s, &state.w, &state.xbar, Some(opts));
        let aug = augment_subproblem(&sub.lp, &terms, opts.breakpoints, opts.refine)?;
        let sol = solve_tracked(&aug, &mut main, &opts.solver);
        if !sol.is_optimal() {
            return Err(fail(sol.status));
        }
        let lb_sol = solve_tracked(&model.lb_lp(s, &state.w)?, &mut lbb, &opts.solver);
        if !lb_sol.is_optimal() {
            return Err(fail(lb_sol.status));
        }
        let mut x = sol.x;
        x.truncate(sub.lp.num_cols());
        Ok((
            (main, lbb),
            SolveOut {
                values: model.owned_values(s, &x),
                lb: lb_sol.objective + sub.cost_offset,
                x,
            },
        ))
    }))
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Runs the PH loop on a prepared model, optionally resuming from a
/// checkpoint. `on_iter` sees every trace entry with the state after it.
pub fn run_ph_with(
    model: &PhModel,
    opts: &PHOptions,
    resume: Option<PHState>,
    on_iter: &mut dyn FnMut(&TraceEntry, &PHState),
) -> Result<PHResult, PhError> {
    opts.validate()?;
    let start = Instant::now();
    let n = model.periods();
    let plan = WorkPlan::new(n, opts.workers, opts.policy).map_err(|e| PhError::Options(e.to_string()))?;
    let (solve_workers, inc_workers) = plan.split();
    let solve_plan = plan.resized(solve_workers);
    let inc_plan = plan.resized(inc_workers);
    let var_ids: Vec<String> = model.vars.iter().map(|v| v.id.clone()).collect();

    let (mut state, first_v) = match resume {
        Some(st) => {
            if st.var_ids != var_ids {
                return Err(PhError::Checkpoint("first-stage variables differ".into()));
            }
            let v = st.iteration + 1;
            (st, v)
        }
        None => (
            PHState {
                iteration: 0,
                var_ids,
                xbar: vec![0.0; model.vars.len()],
                w: model.vars.iter().map(|v| vec![0.0; v.owners.len()]).collect(),
                best_lb: None,
                best_ub: None,
                incumbent: None,
                trace: Vec::new(),
            },
            0,
        ),
    };

    let mut bases: Vec<PeriodBases> = vec![(None, None); n];
    let mut inc_bases: Vec<Option<Basis>> = vec![None; n];
    let mut pending: Option<Vec<f64>> = None;
    let mut values: Vec<Vec<f64>>;
    let status;
    let mut v = first_v;

    loop {
        let t_solve = Instant::now();
        let first = v == 0;
        let async_job = pending.take();
        let (phase, overlapped, inc_ms) = if let Some(xb) = async_job {
            let ib = std::mem::take(&mut inc_bases);
            std::thread::scope(|sc| {
                let h = sc.spawn(|| {
                    let t = Instant::now();
                    let r = incumbent_with_bases(model, &xb, ib, &inc_plan, opts);
                    (r, ms(t))
                });
                let phase = solve_phase(model, &solve_plan, opts, &state, first, std::mem::take(&mut bases));
                let ((r, ib), t) = h.join().unwrap_or_else(|e| std::panic::resume_unwind(e));
                (phase, Some((r, ib)), t)
            })
        } else {
            (solve_phase(model, &solve_plan, opts, &state, first, std::mem::take(&mut bases)), None, 0.0)
        };
        let phase = phase?;
        let solve_ms = ms(t_solve);

        let mut per_period = Vec::with_capacity(n);
        let mut xs = Vec::with_capacity(n);
        let mut lbs = Vec::with_capacity(n);
        for (b, out) in phase {
            bases.push(b);
            per_period.push(out.values);
            xs.push(out.x);
            lbs.push(out.lb);
        }
        values = model.by_variable(&per_period);

        // Lower bound for the prices the subproblems just saw.
        let imbalance_prev = weight_imbalance(&state.w, &model.vars);
        let lb_iter = (imbalance_prev <= WEIGHT_SUM_TOL).then(|| ordered_sum(&lbs));

        let xbar = model
            .vars
            .iter()
            .zip(&values)
            .map(|(var, vals)| aggregate(vals, var))
            .collect::<Result<Vec<f64>, _>>()?;
        let res = residual(&values, &xbar, &model.vars);
        for (vi, var) in model.vars.iter().enumerate() {
            let rho = opts.rho_for(&var.class);
            for (slot, w) in state.w[vi].iter_mut().enumerate() {
                *w = price_update(*w, values[vi][slot], xbar[vi], rho);
            }
        }
        state.xbar = xbar;
        state.iteration = v;

        let mut placement_dev: f64 = 0.0;
        let mut soc_mismatch: f64 = 0.0;
        for (vi, var) in model.vars.iter().enumerate() {
            match var.class {
                VarClass::Placement { .. } => {
                    for x in &values[vi] {
                        placement_dev = placement_dev.max((x - state.xbar[vi]).abs());
                    }
                }
                VarClass::SocBoundary { .. } => {
                    soc_mismatch = soc_mismatch.max((values[vi][0] - values[vi][1]).abs());
                }
            }
        }

        let mut stop = if res <= opts.tol {
            Some(PhStatus::Converged)
        } else if v >= opts.max_iters {
            Some(PhStatus::IterationLimit)
        } else {
            None
        };

        // Incumbent candidates: the overlapped job, then this iteration's.
        let mut candidates: Vec<Checked> = Vec::new();
        let mut inc_ms = inc_ms;
        if let Some((r, ib)) = overlapped {
            inc_bases = ib;
            candidates.push(r);
        }
        let exact_consensus = values.iter().all(|vals| vals.iter().all(|x| x.to_bits() == vals[0].to_bits()));
        let due = v % opts.incumbent_every == 0 || stop.is_some();
        if due {
            if exact_consensus {
                let t = Instant::now();
                candidates.push(stitch(model, &xs).and_then(|sol| verified(model, sol, opts.verify_tol)));
                inc_ms += ms(t);
            } else if opts.policy == ExecPolicy::AsyncIncumbent && stop.is_none() {
                pending = Some(state.xbar.clone());
            } else {
                let t = Instant::now();
                let (r, ib) = incumbent_with_bases(model, &state.xbar, std::mem::take(&mut inc_bases), &inc_plan, opts);
                inc_bases = ib;
                candidates.push(r);
                inc_ms += ms(t);
            }
        }
        let mut ub_iter = None;
        let mut rejected = 0;
        for c in candidates {
            match c {
                Ok((inc, report)) if report.is_empty() => {
                    ub_iter = Some(ub_iter.map_or(inc.ub, |u: f64| u.min(inc.ub)));
                    if state.best_ub.is_none_or(|b| inc.ub < b) {
                        state.best_ub = Some(inc.ub);
                        state.incumbent = Some(inc);
                    }
                }
                Ok((_, report)) => rejected += report.violations.len(),
                Err(PhError::Solver { .. }) => rejected += 1,
                Err(e) => return Err(e),
            }
        }
        if let Some(l) = lb_iter {
            if state.best_lb.is_none_or(|b| l > b) {
                state.best_lb = Some(l);
            }
        }
        let gap = relative_gap(state.best_lb, state.best_ub);
        if stop.is_none() && opts.gap_target.is_some_and(|g| gap.is_some_and(|x| x <= g)) {
            stop = Some(PhStatus::GapReached);
            if let Some(xb) = pending.take() {
                let (r, ib) = incumbent_with_bases(model, &xb, std::mem::take(&mut inc_bases), &inc_plan, opts);
                inc_bases = ib;
                if let Ok((inc, report)) = r {
                    if report.is_empty() && state.best_ub.is_none_or(|b| inc.ub < b) {
                        state.best_ub = Some(inc.ub);
                        state.incumbent = Some(inc);
                    }
                }
            }
        }

        let entry = TraceEntry {
            v,
            residual: res,
            lb: state.best_lb,
            ub: state.best_ub,
            gap: relative_gap(state.best_lb, state.best_ub),
            lb_iter,
            ub_iter,
            placement_deviation: placement_dev,
            soc_mismatch,
            weight_imbalance: weight_imbalance(&state.w, &model.vars),
            incumbent_violations: rejected,
            wall_ms: ms(start),
            solve_ms,
            incumbent_ms: inc_ms,
        };
        state.trace.push(entry.clone());
        on_iter(&entry, &state);

        if let Some(s) = stop {
            status = s;
            break;
        }
        v += 1;
    }

    Ok(PHResult {
        status,
        iterations: v,
        incumbent: state.incumbent.clone(),
        ub: state.best_ub,
        lb: state.best_lb,
        gap: relative_gap(state.best_lb, state.best_ub),
        trace: state.trace.clone(),
        xbar: state.xbar.clone(),
        values,
        state,
        wall_ms: ms(start),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases::{three_bus, three_bus_demand};
    use crate::network::DeenergizationSchedule;
    use crate::opf::solve_extensive_form;
    use crate::ph::make_partition;

    fn case(hours: usize) -> Case {
        Case::new(three_bus(), &three_bus_demand(hours), DeenergizationSchedule::empty(24), hours).unwrap()
    }

    fn opts() -> PHOptions {
        PHOptions {
            rho: 1000.0,
            ..Default::default()
        }
    }

    fn ef_cost(case: &Case) -> f64 {
        solve_extensive_form(case, &BatteryConfig::default(), &CostConfig::default(), &Default::default(), 2000)
            .unwrap()
            .solution
            .cost
            .total
    }

    #[test]
    fn single_period_is_the_extensive_form() {
        let c = case(24);
        let r = run_ph(&c, &make_partition(24, 24).unwrap(), &Default::default(), &Default::default(), &opts()).unwrap();
        assert_eq!(r.status, PhStatus::Converged);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.ub.unwrap().to_bits(), ef_cost(&c).to_bits());
        assert_eq!(r.lb, r.ub);
    }

    #[test]
    fn two_days_converge_to_the_optimum() {
        let c = case(48);
        let ef = ef_cost(&c);
        let r = run_ph(&c, &make_partition(48, 24).unwrap(), &Default::default(), &Default::default(), &opts()).unwrap();
        assert_eq!(r.status, PhStatus::Converged, "{:?}", r.trace.last());
        let (lb, ub) = (r.lb.unwrap(), r.ub.unwrap());
        assert!(lb <= ef * (1.0 + 1e-9) && ef <= ub * (1.0 + 1e-9), "{lb} {ef} {ub}");
        assert!((ub - ef) / ef <= 5e-3);
        for e in &r.trace {
            assert!(e.weight_imbalance <= WEIGHT_SUM_TOL);
        }
        for pair in r.trace.windows(2) {
            assert!(pair[1].lb >= pair[0].lb && pair[1].ub <= pair[0].ub);
        }
    }

    #[test]
    fn repair_scales_to_budget_and_clips_energy() {
        let c = case(48);
        let batt = BatteryConfig {
            x_max: 6.0,
            ..Default::default()
        };
        let model = PhModel::new(&c, &make_partition(48, 24).unwrap(), &batt, &Default::default()).unwrap();
        let ids: Vec<&str> = model.vars.iter().map(|v| v.id.as_str()).collect();
        assert_eq!(ids.len(), 4);
        let xbar: Vec<f64> = model
            .vars
            .iter()
            .map(|v| match v.class {
                VarClass::Placement { .. } => 5.2,
                VarClass::SocBoundary { .. } => 9.0,
            })
            .collect();
        let r = repair_consensus(&model, &xbar);
        for (v, var) in model.vars.iter().enumerate() {
            let want = match var.class {
                VarClass::Placement { .. } => 5.0,
                VarClass::SocBoundary { .. } => 5.0,
            };
            assert!((r[v] - want).abs() < 1e-12, "{} = {}", var.id, r[v]);
        }
        let (inc, report) = incumbent_from_consensus(&model, &xbar, &opts()).unwrap();
        assert!(report.is_empty(), "{:?}", report.violations);
        assert!((inc.solution.placement.iter().sum::<f64>() - 10.0).abs() < 1e-9);
    }

    #[test]
    fn lower_bound_needs_balanced_weights() {
        let c = case(48);
        let model = PhModel::new(&c, &make_partition(48, 24).unwrap(), &Default::default(), &Default::default()).unwrap();
        let mut w: Vec<Vec<f64>> = model.vars.iter().map(|v| vec![0.0; v.owners.len()]).collect();
        let lb = lagrangian_lower_bound(&model, &w, &opts()).unwrap();
        assert!(lb <= ef_cost(&c) + 1e-6);
        w[0][0] = 1.0;
        assert!(matches!(lagrangian_lower_bound(&model, &w, &opts()), Err(PhError::WeightSum(_))));
        w[0][1] = -1.0;
        assert!(lagrangian_lower_bound(&model, &w, &opts()).unwrap() <= ef_cost(&c) + 1e-6);
    }

    #[test]
    fn worker_count_and_policy() {
        let c = case(72);
        let part = make_partition(72, 24).unwrap();
        let model = PhModel::new(&c, &part, &Default::default(), &Default::default()).unwrap();
        let short = PHOptions { max_iters: 6, ..opts() };
        let run = |o: &PHOptions| run_ph_with(&model, o, None, &mut |_, _| {}).unwrap();
        let a = run(&short);
        let b = run(&PHOptions { workers: 3, ..short.clone() });
        let ta: Vec<_> = a.trace.iter().map(TraceEntry::without_timing).collect();
        let tb: Vec<_> = b.trace.iter().map(TraceEntry::without_timing).collect();
        assert_eq!(ta, tb);
        assert_eq!(a.values, b.values);
        let asy = run(&PHOptions {
            workers: 2,
            policy: ExecPolicy::AsyncIncumbent,
            ..short.clone()
        });
        assert_eq!(asy.trace.len(), a.trace.len());
        assert!(asy.ub.is_some() && asy.ub.unwrap() >= asy.lb.unwrap());
    }

    #[test]
    fn resume_continues_from_checkpoint() {
        let c = case(48);
        let model = PhModel::new(&c, &make_partition(48, 24).unwrap(), &Default::default(), &Default::default()).unwrap();
        let first = run_ph_with(&model, &PHOptions { max_iters: 3, ..opts() }, None, &mut |_, _| {}).unwrap();
        assert_eq!(first.status, PhStatus::IterationLimit);
        let saved = PHState::from_json(&first.state.to_json()).unwrap();
        let mut seen = Vec::new();
        let rest = run_ph_with(&model, &opts(), Some(saved), &mut |e, _| seen.push(e.v)).unwrap();
        assert_eq!(seen[0], 4);
        assert_eq!(rest.status, PhStatus::Converged);
        assert_eq!(&rest.trace[..4], &first.trace[..]);
        assert!(PhModel::new(&case(72), &make_partition(72, 24).unwrap(), &Default::default(), &Default::default())
            .map(|m| run_ph_with(&m, &opts(), Some(first.state.clone()), &mut |_, _| {}))
            .unwrap()
            .is_err());
    }
}
