use std::ops::Range;

use crate::lp::{solve_lp, warm_solve, LPSolution, RowSense, SolverOptions, StandardFormLP};
use crate::network::Network;

use super::{BatteryConfig, Case, CostBreakdown, CostConfig, OpfError, PeriodSlice, PlanningSolution};

/// Bus voltage angles are boxed to `[-2π, 2π]` radians.
pub const ANGLE_BOX: f64 = 2.0 * std::f64::consts::PI;

/// Column indices of every decision variable in a period LP. Hourly
/// tables are indexed `[slice hour][entity]`; battery entries follow
/// `Network::candidates`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarMap {
    pub hours: Range<usize>,
    pub placement: Vec<usize>,
    /// Stored energy entering the slice, when it is a decision variable.
    pub boundary_soc: Option<Vec<usize>>,
    pub generation: Vec<Vec<usize>>,
    pub slack: Vec<Vec<usize>>,
    pub angle: Vec<Vec<usize>>,
    pub load_shed: Vec<Vec<usize>>,
    pub flow: Vec<Vec<usize>>,
    pub charge: Vec<Vec<usize>>,
    pub discharge: Vec<Vec<usize>>,
    pub soc: Vec<Vec<usize>>,
}

impl VarMap {
    /// SOC columns at the slice's final hour.
    pub fn final_soc(&self) -> &[usize] {
        self.soc.last().map_or(&[], Vec::as_slice)
    }
}

/// A period LP together with the metadata needed to couple it to others.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodSubproblem {
    pub lp: StandardFormLP,
    pub varmap: VarMap,
    /// Fixed generator costs over the slice. Kept out of the LP objective
    /// and added back when reporting cost.
    pub cost_offset: f64,
    candidate_ids: Vec<String>,
    initial_soc: Vec<f64>,
}

impl PeriodSubproblem {
    /// Placement columns followed by boundary SOC columns, if any.
    pub fn first_stage_columns(&self) -> Vec<usize> {
        let mut v = self.varmap.placement.clone();
        if let Some(b) = &self.varmap.boundary_soc {
            v.extend_from_slice(b);
        }
        v
    }

    /// Reads the operating plan out of a primal vector of this LP.
    pub fn extract(&self, net: &Network, cost: &CostConfig, x: &[f64]) -> PlanningSolution {
        let vm = &self.varmap;
        let pick = |t: &Vec<Vec<usize>>| -> Vec<Vec<f64>> {
            t.iter().map(|row| row.iter().map(|&j| x[j]).collect()).collect()
        };
        let generation = pick(&vm.generation);
        let load_shed = pick(&vm.load_shed);
        let slack = pick(&vm.slack);
        let breakdown = cost_of(net, cost, &generation, &load_shed, &slack);
        PlanningSolution {
            start_hour: vm.hours.start,
            candidate_buses: self.candidate_ids.clone(),
            placement: vm.placement.iter().map(|&j| x[j]).collect(),
            initial_soc: match &vm.boundary_soc {
                Some(cols) => cols.iter().map(|&j| x[j]).collect(),
                None => self.initial_soc.clone(),
            },
            generation,
            slack,
            angle: pick(&vm.angle),
            load_shed,
            flow: pick(&vm.flow),
            charge: pick(&vm.charge),
            discharge: pick(&vm.discharge),
            soc: pick(&vm.soc),
            cost: breakdown,
        }
    }
}

impl PeriodSubproblem {
    /// Inverse of `extract`: lays a plan covering exactly this slice out as
    /// a primal vector of the LP.
    pub fn embed(&self, plan: &PlanningSolution) -> Result<Vec<f64>, OpfError> {
        let vm = &self.varmap;
        if plan.start_hour != vm.hours.start || plan.hours() != vm.hours.len() {
            return Err(OpfError::Shape("plan does not cover the slice".into()));
        }
        let mut x = vec![0.0; self.lp.num_cols()];
        let mut put = |cols: &[Vec<usize>], vals: &[Vec<f64>]| -> Result<(), OpfError> {
            for (cr, vr) in cols.iter().zip(vals) {
                if cr.len() != vr.len() {
                    return Err(OpfError::Shape("entity count mismatch".into()));
                }
                for (&j, &v) in cr.iter().zip(vr) {
                    x[j] = v;
                }
            }
            Ok(())
        };
        put(std::slice::from_ref(&vm.placement), std::slice::from_ref(&plan.placement))?;
        if let Some(b) = &vm.boundary_soc {
            put(std::slice::from_ref(b), std::slice::from_ref(&plan.initial_soc))?;
        }
        put(&vm.generation, &plan.generation)?;
        put(&vm.slack, &plan.slack)?;
        put(&vm.angle, &plan.angle)?;
        put(&vm.load_shed, &plan.load_shed)?;
        put(&vm.flow, &plan.flow)?;
        put(&vm.charge, &plan.charge)?;
        put(&vm.discharge, &plan.discharge)?;
        put(&vm.soc, &plan.soc)?;
        Ok(x)
    }
}

pub(crate) fn cost_of(
    net: &Network,
    cost: &CostConfig,
    generation: &[Vec<f64>],
    load_shed: &[Vec<f64>],
    slack: &[Vec<f64>],
) -> CostBreakdown {
    let mut gen_cost = 0.0;
    for row in generation {
        for (g, p) in row.iter().enumerate() {
            let c = &net.generators[g].cost_coeffs;
            gen_cost += c.iter().rev().fold(0.0, |acc, ck| acc * p + ck);
        }
    }
    let shed: f64 = load_shed.iter().flatten().sum();
    let sl: f64 = slack.iter().flatten().sum();
    let b = CostBreakdown {
        generation: gen_cost,
        load_shed: cost.load_shed * shed,
        slack: cost.slack * sl,
        total: 0.0,
    };
    CostBreakdown {
        total: b.generation + b.load_shed + b.slack,
        ..b
    }
}

/// Flow bounds for an energized line after folding its angle-difference
/// limits through `p = -b (θ_from - θ_to)`. `None` when the limits cannot be
/// folded and need explicit rows.
fn folded_flow_bounds(net: &Network, k: usize) -> Option<(f64, f64)> {
    let l = &net.lines[k];
    let scale = -l.susceptance;
    if scale == 0.0 {
        return None;
    }
    let (a, b) = (scale * l.angle_diff_min, scale * l.angle_diff_max);
    let lo = a.min(b).max(-l.flow_limit);
    let hi = a.max(b).min(l.flow_limit);
    (lo <= hi).then_some((lo, hi))
}

/// Builds the LP for one block of hours. Placement columns are always
/// present; the entering SOC is a column only when the slice has a left
/// boundary, otherwise it is the configured initial value.
pub fn build_period_lp(
    net: &Network,
    slice: &PeriodSlice,
    batt: &BatteryConfig,
    cost: &CostConfig,
) -> Result<PeriodSubproblem, OpfError> {
    batt.validate()?;
    cost.validate()?;
    let nh = slice.len();
    if nh == 0 {
        return Err(OpfError::EmptySlice);
    }
    if slice.demand.len() != net.num_buses() || slice.demand.iter().any(|r| r.len() != nh) {
        return Err(OpfError::Shape("slice demand does not match the network".into()));
    }
    if slice.off.len() != nh || slice.off.iter().any(|r| r.len() != net.num_lines()) {
        return Err(OpfError::Shape("slice line status does not match the network".into()));
    }
    let mut c1 = Vec::with_capacity(net.num_generators());
    let mut c0 = 0.0;
    for g in &net.generators {
        if g.cost_coeffs.iter().skip(2).any(|c| *c != 0.0) {
            return Err(OpfError::CostDegree(g.id.clone()));
        }
        c0 += g.cost_coeffs[0];
        c1.push(g.cost_coeffs.get(1).copied().unwrap_or(0.0));
    }

    let h0 = slice.hours.start;
    let cands = &net.candidates;
    let cand_ids: Vec<String> = cands.iter().map(|&n| net.buses[n].id.clone()).collect();
    let initial_soc: Vec<f64> = cand_ids.iter().map(|id| batt.initial_soc_of(id)).collect();
    let cost_offset = c0 * nh as f64;

    let mut lp = StandardFormLP::new(format!("period_{}_{}", slice.hours.start, slice.hours.end));

    let placement: Vec<usize> = cand_ids
        .iter()
        .map(|id| lp.add_col(format!("x[{id}]"), 0.0, batt.x_max, 0.0))
        .collect();
    let soc_lo = batt.x_max * batt.e_min.min(0.0);
    let soc_hi = batt.x_max * batt.e_max.max(0.0);
    let rate_lo = batt.x_max * batt.p_rate_min.min(0.0);
    let rate_hi = batt.x_max * batt.p_rate_max.max(0.0);
    let boundary_soc: Option<Vec<usize>> = slice.has_left_boundary.then(|| {
        cand_ids
            .iter()
            .map(|id| lp.add_col(format!("e0[{id}]"), soc_lo, soc_hi, 0.0))
            .collect()
    });

    let mut vm = VarMap {
        hours: slice.hours.clone(),
        placement,
        boundary_soc,
        generation: vec![Vec::new(); nh],
        slack: vec![Vec::new(); nh],
        angle: vec![Vec::new(); nh],
        load_shed: vec![Vec::new(); nh],
        flow: vec![Vec::new(); nh],
        charge: vec![Vec::new(); nh],
        discharge: vec![Vec::new(); nh],
        soc: vec![Vec::new(); nh],
    };

    let folded: Vec<Option<(f64, f64)>> = (0..net.num_lines()).map(|k| folded_flow_bounds(net, k)).collect();

    for s in 0..nh {
        let t = h0 + s;
        for (g, gen) in net.generators.iter().enumerate() {
            vm.generation[s].push(lp.add_col(format!("pg[{},{t}]", gen.id), gen.g_min, gen.g_max, c1[g]));
        }
        for b in &net.buses {
            vm.slack[s].push(lp.add_col(format!("gs[{},{t}]", b.id), 0.0, cost.slack_upper, cost.slack));
        }
        for (n, b) in net.buses.iter().enumerate() {
            let (lo, hi) = if n == net.reference_bus { (0.0, 0.0) } else { (-ANGLE_BOX, ANGLE_BOX) };
            vm.angle[s].push(lp.add_col(format!("th[{},{t}]", b.id), lo, hi, 0.0));
        }
        for (n, b) in net.buses.iter().enumerate() {
            let d = slice.demand[n][s];
            vm.load_shed[s].push(lp.add_col(format!("ls[{},{t}]", b.id), 0.0, d, cost.load_shed));
        }
        for (k, l) in net.lines.iter().enumerate() {
            let (lo, hi) = if slice.off[s][k] {
                (0.0, 0.0)
            } else {
                folded[k].unwrap_or((-l.flow_limit, l.flow_limit))
            };
            vm.flow[s].push(lp.add_col(format!("pf[{},{t}]", l.id), lo, hi, 0.0));
        }
        for id in &cand_ids {
            vm.charge[s].push(lp.add_col(format!("pc[{id},{t}]"), rate_lo, rate_hi, 0.0));
        }
        for id in &cand_ids {
            vm.discharge[s].push(lp.add_col(format!("pd[{id},{t}]"), rate_lo, rate_hi, 0.0));
        }
        for id in &cand_ids {
            vm.soc[s].push(lp.add_col(format!("e[{id},{t}]"), soc_lo, soc_hi, 0.0));
        }
    }

    // Angle-difference rows, only where the limits were not folded.
    for s in 0..nh {
        let t = h0 + s;
        for (k, l) in net.lines.iter().enumerate() {
            if slice.off[s][k] || folded[k].is_some() {
                continue;
            }
            let (f, to) = net.line_ends(k);
            let d = [(vm.angle[s][f], 1.0), (vm.angle[s][to], -1.0)];
            lp.add_row(format!("angmin[{},{t}]", l.id), RowSense::Ge, l.angle_diff_min, &d);
            lp.add_row(format!("angmax[{},{t}]", l.id), RowSense::Le, l.angle_diff_max, &d);
        }
    }
    // Flow definition on energized lines.
    for s in 0..nh {
        let t = h0 + s;
        for (k, l) in net.lines.iter().enumerate() {
            if slice.off[s][k] {
                continue;
            }
            let (f, to) = net.line_ends(k);
            lp.add_row(
                format!("flow[{},{t}]", l.id),
                RowSense::Eq,
                0.0,
                &[
                    (vm.flow[s][k], 1.0),
                    (vm.angle[s][f], l.susceptance),
                    (vm.angle[s][to], -l.susceptance),
                ],
            );
        }
    }
    // Placement budget.
    if !cands.is_empty() {
        let row: Vec<(usize, f64)> = vm.placement.iter().map(|&j| (j, 1.0)).collect();
        lp.add_row("budget", RowSense::Le, batt.x_total, &row);
    }
    // SOC recursion.
    let (eff, keep) = (batt.efficiency, batt.carryover);
    for s in 0..nh {
        let t = h0 + s;
        for (i, id) in cand_ids.iter().enumerate() {
            let mut coeffs = vec![
                (vm.soc[s][i], 1.0),
                (vm.charge[s][i], -eff),
                (vm.discharge[s][i], 1.0 / eff),
            ];
            let mut rhs = 0.0;
            if s > 0 {
                coeffs.push((vm.soc[s - 1][i], -keep));
            } else if let Some(b) = &vm.boundary_soc {
                coeffs.push((b[i], -keep));
            } else {
                rhs = keep * initial_soc[i];
            }
            lp.add_row(format!("soc[{id},{t}]"), RowSense::Eq, rhs, &coeffs);
        }
    }
    // Energy limits scaled by placement, including the boundary SOC.
    let energy_rows = |lp: &mut StandardFormLP, tag: &str, e: usize, x: usize| {
        lp.add_row(format!("emax[{tag}]"), RowSense::Le, 0.0, &[(e, 1.0), (x, -batt.e_max)]);
        if batt.e_min != 0.0 {
            lp.add_row(format!("emin[{tag}]"), RowSense::Ge, 0.0, &[(e, 1.0), (x, -batt.e_min)]);
        }
    };
    if let Some(b) = vm.boundary_soc.clone() {
        for (i, id) in cand_ids.iter().enumerate() {
            energy_rows(&mut lp, &format!("{id},in"), b[i], vm.placement[i]);
        }
    }
    for s in 0..nh {
        for (i, id) in cand_ids.iter().enumerate() {
            energy_rows(&mut lp, &format!("{id},{}", h0 + s), vm.soc[s][i], vm.placement[i]);
        }
    }
    // Charge and discharge rate limits.
    for (name, table) in [("pc", &vm.charge), ("pd", &vm.discharge)] {
        for s in 0..nh {
            let t = h0 + s;
            for (i, id) in cand_ids.iter().enumerate() {
                let (p, x) = (table[s][i], vm.placement[i]);
                lp.add_row(
                    format!("{name}max[{id},{t}]"),
                    RowSense::Le,
                    0.0,
                    &[(p, 1.0), (x, -batt.p_rate_max)],
                );
                if batt.p_rate_min != 0.0 {
                    lp.add_row(
                        format!("{name}min[{id},{t}]"),
                        RowSense::Ge,
                        0.0,
                        &[(p, 1.0), (x, -batt.p_rate_min)],
                    );
                }
            }
        }
    }
    // Nodal power balance.
    let cand_slot: Vec<Option<usize>> = {
        let mut v = vec![None; net.num_buses()];
        for (i, &n) in cands.iter().enumerate() {
            v[n] = Some(i);
        }
        v
    };
    for s in 0..nh {
        let t = h0 + s;
        for (n, b) in net.buses.iter().enumerate() {
            let mut coeffs: Vec<(usize, f64)> = Vec::new();
            coeffs.extend(net.lines_from(n).iter().map(|&k| (vm.flow[s][k], 1.0)));
            coeffs.extend(net.lines_to(n).iter().map(|&k| (vm.flow[s][k], -1.0)));
            coeffs.extend(net.generators_at(n).iter().map(|&g| (vm.generation[s][g], -1.0)));
            coeffs.push((vm.slack[s][n], -1.0));
            coeffs.push((vm.load_shed[s][n], -1.0));
            if let Some(i) = cand_slot[n] {
                coeffs.push((vm.charge[s][i], 1.0));
                coeffs.push((vm.discharge[s][i], -1.0));
            }
            lp.add_row(format!("bal[{},{t}]", b.id), RowSense::Eq, -slice.demand[n][s], &coeffs);
        }
    }
    if batt.terminal_soc_floor && slice.closes_horizon {
        for (i, id) in cand_ids.iter().enumerate() {
            lp.add_row(
                format!("eterm[{id}]"),
                RowSense::Ge,
                initial_soc[i],
                &[(vm.soc[nh - 1][i], 1.0)],
            );
        }
    }

    Ok(PeriodSubproblem {
        lp,
        varmap: vm,
        cost_offset,
        candidate_ids: cand_ids,
        initial_soc,
    })
}

/// The whole horizon as one LP. Refuses horizons above `hour_cap`.
pub fn build_extensive_form(
    case: &Case,
    batt: &BatteryConfig,
    cost: &CostConfig,
    hour_cap: usize,
) -> Result<PeriodSubproblem, OpfError> {
    let h = case.horizon();
    if h > hour_cap {
        return Err(OpfError::Guardrail { hours: h, cap: hour_cap });
    }
    let slice = case.slice(0..h, false)?;
    let mut sub = build_period_lp(&case.network, &slice, batt, cost)?;
    sub.lp.name = "extensive_form".into();
    Ok(sub)
}

#[derive(Debug, Clone)]
pub struct EfResult {
    pub subproblem: PeriodSubproblem,
    pub lp_solution: LPSolution,
    pub solution: PlanningSolution,
}

/// Builds and solves the extensive form. With integer placement the
/// placement vectors are enumerated, each solved with placement fixed.
pub fn solve_extensive_form(
    case: &Case,
    batt: &BatteryConfig,
    cost: &CostConfig,
    opts: &SolverOptions,
    hour_cap: usize,
) -> Result<EfResult, OpfError> {
    let sub = build_extensive_form(case, batt, cost, hour_cap)?;
    let net = &case.network;
    if !batt.integer_placement {
        let sol = solve_lp(&sub.lp, opts);
        if !sol.is_optimal() {
            return Err(OpfError::Solve(sol.status));
        }
        let plan = sub.extract(net, cost, &sol.x);
        return Ok(EfResult {
            subproblem: sub,
            lp_solution: sol,
            solution: plan,
        });
    }

    let nc = net.candidates.len();
    if nc > 6 {
        return Err(OpfError::IntegerTooLarge(nc));
    }
    let per_bus = batt.x_max.floor() as usize;
    let budget = batt.x_total.floor() as usize;
    let mut best: Option<(f64, PeriodSubproblem, LPSolution)> = None;
    let mut last_status = crate::lp::LpStatus::Infeasible;
    let mut basis = None;
    let mut counts = vec![0usize; nc];
    loop {
        if counts.iter().sum::<usize>() <= budget {
            let mut fixed = sub.clone();
            for (i, &j) in fixed.varmap.placement.iter().enumerate() {
                fixed.lp.col_lower[j] = counts[i] as f64;
                fixed.lp.col_upper[j] = counts[i] as f64;
            }
            let sol = match &basis {
                Some(b) => warm_solve(&fixed.lp, b, opts),
                None => solve_lp(&fixed.lp, opts),
            };
            last_status = sol.status;
            if sol.is_optimal() {
                basis = sol.basis.clone();
                if best.as_ref().is_none_or(|(obj, _, _)| sol.objective < *obj) {
                    best = Some((sol.objective, fixed, sol));
                }
            }
        }
        // Odometer increment over {0..per_bus}^nc.
        let mut i = 0;
        while i < nc {
            if counts[i] < per_bus {
                counts[i] += 1;
                break;
            }
            counts[i] = 0;
            i += 1;
        }
        if i == nc {
            break;
        }
    }
    match best {
        Some((_, sub, sol)) => {
            let plan = sub.extract(net, cost, &sol.x);
            Ok(EfResult {
                subproblem: sub,
                lp_solution: sol,
                solution: plan,
            })
        }
        None => Err(OpfError::Solve(last_status)),
    }
}
