use std::fmt;

use serde::Serialize;

use super::{BatteryConfig, ANGLE_BOX, Case, CostConfig, OpfError, PlanningSolution};

/// Constraint families checked by the verifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Constraint {
    GenerationLimits,
    SlackLimits,
    LoadShedLimits,
    ReferenceAngle,
    AngleBounds,
    AngleDifference,
    FlowDefinition,
    #[serde(rename = "de-energized-flow")]
    DeenergizedFlow,
    ThermalLimit,
    PlacementLimits,
    PlacementBudget,
    InitialSoc,
    SocRecursion,
    SocLimits,
    ChargeRate,
    DischargeRate,
    PowerBalance,
    TerminalSoc,
}

impl Constraint {
    pub fn name(self) -> &'static str {
        match self {
            Constraint::GenerationLimits => "generation-limits",
            Constraint::SlackLimits => "slack-limits",
            Constraint::LoadShedLimits => "load-shed-limits",
            Constraint::ReferenceAngle => "reference-angle",
            Constraint::AngleBounds => "angle-bounds",
            Constraint::AngleDifference => "angle-difference",
            Constraint::FlowDefinition => "flow-definition",
            Constraint::DeenergizedFlow => "de-energized-flow",
            Constraint::ThermalLimit => "thermal-limit",
            Constraint::PlacementLimits => "placement-limits",
            Constraint::PlacementBudget => "placement-budget",
            Constraint::InitialSoc => "initial-soc",
            Constraint::SocRecursion => "soc-recursion",
            Constraint::SocLimits => "soc-limits",
            Constraint::ChargeRate => "charge-rate",
            Constraint::DischargeRate => "discharge-rate",
            Constraint::PowerBalance => "power-balance",
            Constraint::TerminalSoc => "terminal-soc",
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub constraint: Constraint,
    pub entity: String,
    pub hour: Option<usize>,
    /// How far the constraint is missed, in its own units.
    pub amount: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.hour {
            Some(h) => write!(f, "{} violated at '{}' hour {} by {:.3e}", self.constraint, self.entity, h, self.amount),
            None => write!(f, "{} violated at '{}' by {:.3e}", self.constraint, self.entity, self.amount),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ViolationReport {
    pub violations: Vec<Violation>,
    /// Hours and buses where a battery charges and discharges at once.
    /// Reported for information; the model does not forbid it.
    pub simultaneous_charge_discharge: Vec<(usize, String)>,
}

impl ViolationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn worst(&self) -> f64 {
        self.violations.iter().map(|v| v.amount).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

struct Checker<'a> {
    tol: f64,
    report: &'a mut ViolationReport,
}

impl Checker<'_> {
    fn upper(&mut self, c: Constraint, entity: &str, hour: Option<usize>, value: f64, limit: f64) {
        if value - limit > self.tol {
            self.push(c, entity, hour, value - limit);
        }
    }

    fn lower(&mut self, c: Constraint, entity: &str, hour: Option<usize>, value: f64, limit: f64) {
        if limit - value > self.tol {
            self.push(c, entity, hour, limit - value);
        }
    }

    fn equal(&mut self, c: Constraint, entity: &str, hour: Option<usize>, value: f64, target: f64) {
        if (value - target).abs() > self.tol || !value.is_finite() {
            self.push(c, entity, hour, (value - target).abs());
        }
    }

    fn push(&mut self, constraint: Constraint, entity: &str, hour: Option<usize>, amount: f64) {
        self.report.violations.push(Violation {
            constraint,
            entity: entity.to_string(),
            hour,
            amount: if amount.is_nan() { f64::INFINITY } else { amount },
        });
    }
}

fn check_shape(sol: &PlanningSolution, case: &Case) -> Result<(), OpfError> {
    let net = &case.network;
    let nh = sol.hours();
    let nc = net.candidates.len();
    let ids: Vec<&str> = net.candidates.iter().map(|&n| net.buses[n].id.as_str()).collect();
    if sol.candidate_buses.iter().map(String::as_str).ne(ids.iter().copied()) {
        return Err(OpfError::Shape("candidate buses differ from the network's".into()));
    }
    if sol.start_hour + nh > case.horizon() {
        return Err(OpfError::Shape(format!(
            "solution covers hours {}..{} beyond the {}-hour horizon",
            sol.start_hour,
            sol.start_hour + nh,
            case.horizon()
        )));
    }
    let table_ok = |t: &Vec<Vec<f64>>, w: usize| t.len() == nh && t.iter().all(|r| r.len() == w);
    let ok = sol.placement.len() == nc
        && sol.initial_soc.len() == nc
        && table_ok(&sol.generation, net.num_generators())
        && table_ok(&sol.slack, net.num_buses())
        && table_ok(&sol.angle, net.num_buses())
        && table_ok(&sol.load_shed, net.num_buses())
        && table_ok(&sol.flow, net.num_lines())
        && table_ok(&sol.charge, nc)
        && table_ok(&sol.discharge, nc)
        && table_ok(&sol.soc, nc);
    if ok {
        Ok(())
    } else {
        Err(OpfError::Shape("time-series dimensions do not match the network".into()))
    }
}

/// Checks `sol` against every model constraint directly from the network
/// data, independently of the LP builder. Shape mismatches are errors;
/// constraint misses beyond `tol` are collected in the report.
pub fn check_feasibility(
    sol: &PlanningSolution,
    case: &Case,
    batt: &BatteryConfig,
    cost: &CostConfig,
    tol: f64,
) -> Result<ViolationReport, OpfError> {
    check_shape(sol, case)?;
    let net = &case.network;
    let mut report = ViolationReport::default();
    let mut ck = Checker {
        tol,
        report: &mut report,
    };
    let ids = &sol.candidate_buses;

    let mut total = 0.0;
    for (i, id) in ids.iter().enumerate() {
        let x = sol.placement[i];
        ck.lower(Constraint::PlacementLimits, id, None, x, 0.0);
        ck.upper(Constraint::PlacementLimits, id, None, x, batt.x_max);
        total += x;
    }
    ck.upper(Constraint::PlacementBudget, "all", None, total, batt.x_total);

    if sol.start_hour == 0 {
        for (i, id) in ids.iter().enumerate() {
            ck.equal(Constraint::InitialSoc, id, Some(0), sol.initial_soc[i], batt.initial_soc_of(id));
        }
    }

    for s in 0..sol.hours() {
        let t = sol.start_hour + s;
        let h = Some(t);
        let off = case.schedule.line_mask(net, t)?;

        for (g, gen) in net.generators.iter().enumerate() {
            let p = sol.generation[s][g];
            ck.lower(Constraint::GenerationLimits, &gen.id, h, p, gen.g_min);
            ck.upper(Constraint::GenerationLimits, &gen.id, h, p, gen.g_max);
        }
        for (n, bus) in net.buses.iter().enumerate() {
            ck.lower(Constraint::SlackLimits, &bus.id, h, sol.slack[s][n], 0.0);
            ck.upper(Constraint::SlackLimits, &bus.id, h, sol.slack[s][n], cost.slack_upper);
            ck.lower(Constraint::LoadShedLimits, &bus.id, h, sol.load_shed[s][n], 0.0);
            ck.upper(Constraint::LoadShedLimits, &bus.id, h, sol.load_shed[s][n], case.demand[n][t]);
            ck.upper(Constraint::AngleBounds, &bus.id, h, sol.angle[s][n].abs(), ANGLE_BOX);
        }
        let ref_bus = &net.buses[net.reference_bus].id;
        ck.equal(Constraint::ReferenceAngle, ref_bus, h, sol.angle[s][net.reference_bus], 0.0);

        for (k, line) in net.lines.iter().enumerate() {
            let p = sol.flow[s][k];
            if off[k] {
                ck.equal(Constraint::DeenergizedFlow, &line.id, h, p, 0.0);
                continue;
            }
            let (f, to) = net.line_ends(k);
            let d = sol.angle[s][f] - sol.angle[s][to];
            ck.lower(Constraint::AngleDifference, &line.id, h, d, line.angle_diff_min);
            ck.upper(Constraint::AngleDifference, &line.id, h, d, line.angle_diff_max);
            ck.equal(Constraint::FlowDefinition, &line.id, h, p, -line.susceptance * d);
            ck.upper(Constraint::ThermalLimit, &line.id, h, p.abs(), line.flow_limit);
        }

        for (i, id) in ids.iter().enumerate() {
            let x = sol.placement[i];
            let (c, d, e) = (sol.charge[s][i], sol.discharge[s][i], sol.soc[s][i]);
            let prev = if s == 0 { sol.initial_soc[i] } else { sol.soc[s - 1][i] };
            let rolled = batt.carryover * prev + batt.efficiency * c - d / batt.efficiency;
            ck.equal(Constraint::SocRecursion, id, h, e, rolled);
            ck.lower(Constraint::SocLimits, id, h, e, x * batt.e_min);
            ck.upper(Constraint::SocLimits, id, h, e, x * batt.e_max);
            ck.lower(Constraint::ChargeRate, id, h, c, x * batt.p_rate_min);
            ck.upper(Constraint::ChargeRate, id, h, c, x * batt.p_rate_max);
            ck.lower(Constraint::DischargeRate, id, h, d, x * batt.p_rate_min);
            ck.upper(Constraint::DischargeRate, id, h, d, x * batt.p_rate_max);
        }

        for (n, bus) in net.buses.iter().enumerate() {
            let out: f64 = net.lines_from(n).iter().map(|&k| sol.flow[s][k]).sum::<f64>()
                - net.lines_to(n).iter().map(|&k| sol.flow[s][k]).sum::<f64>();
            let mut supply: f64 = net.generators_at(n).iter().map(|&g| sol.generation[s][g]).sum::<f64>()
                + sol.slack[s][n]
                - case.demand[n][t]
                + sol.load_shed[s][n];
            if let Ok(i) = net.candidates.binary_search(&n) {
                supply += sol.discharge[s][i] - sol.charge[s][i];
            }
            ck.equal(Constraint::PowerBalance, &bus.id, h, out, supply);
        }
    }

    if batt.terminal_soc_floor && sol.start_hour + sol.hours() == case.horizon() && sol.hours() > 0 {
        let last = sol.soc.last().expect("nonempty");
        for (i, id) in ids.iter().enumerate() {
            ck.lower(Constraint::TerminalSoc, id, Some(case.horizon() - 1), last[i], batt.initial_soc_of(id));
        }
    }

    report.simultaneous_charge_discharge = sol.simultaneous_charge_discharge(tol);
    Ok(report)
}
