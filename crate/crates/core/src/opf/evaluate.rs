use crate::network::Network;

use super::builder::cost_of;
use super::{BatteryConfig, CostBreakdown, CostConfig, OpfError, PlanningSolution};

/// Rolls the SOC recursion forward from `initial` under the given
/// `[hour][battery]` charge and discharge schedules.
pub fn soc_trajectory(
    initial: &[f64],
    charge: &[Vec<f64>],
    discharge: &[Vec<f64>],
    batt: &BatteryConfig,
) -> Result<Vec<Vec<f64>>, OpfError> {
    if charge.len() != discharge.len() {
        return Err(OpfError::Shape("charge and discharge differ in length".into()));
    }
    let mut e = initial.to_vec();
    let mut out = Vec::with_capacity(charge.len());
    for (c, d) in charge.iter().zip(discharge) {
        if c.len() != e.len() || d.len() != e.len() {
            return Err(OpfError::Shape("battery count mismatch".into()));
        }
        for i in 0..e.len() {
            e[i] = batt.carryover * e[i] + batt.efficiency * c[i] - d[i] / batt.efficiency;
        }
        out.push(e.clone());
    }
    Ok(out)
}

/// Recomputes the operating cost of `sol` from its primal values.
pub fn evaluate_cost(sol: &PlanningSolution, net: &Network, cost: &CostConfig) -> Result<CostBreakdown, OpfError> {
    let shape_ok = sol.generation.iter().all(|r| r.len() == net.num_generators())
        && sol.load_shed.len() == sol.hours()
        && sol.slack.len() == sol.hours()
        && sol.load_shed.iter().chain(&sol.slack).all(|r| r.len() == net.num_buses());
    if !shape_ok {
        return Err(OpfError::Shape("cost inputs do not match the network".into()));
    }
    if let Some(g) = net.generators.iter().find(|g| g.cost_coeffs.iter().skip(3).any(|c| *c != 0.0)) {
        return Err(OpfError::CostDegree(g.id.clone()));
    }
    Ok(cost_of(net, cost, &sol.generation, &sol.load_shed, &sol.slack))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases::three_bus;

    fn one(initial: f64, c: f64, d: f64, batt: &BatteryConfig) -> f64 {
        soc_trajectory(&[initial], &[vec![c]], &[vec![d]], batt).unwrap()[0][0]
    }

    #[test]
    fn soc_recursion_examples() {
        let b = BatteryConfig::default();
        assert!((one(0.0, 0.5, 0.0, &b) - 0.475).abs() < 1e-15);
        assert_eq!(one(1.0, 0.0, 0.0, &b), 0.999958);
        let lossless_hold = BatteryConfig {
            carryover: 1.0,
            ..b
        };
        assert!(one(0.5, 0.0, 0.475, &lossless_hold).abs() < 1e-15);
        assert!(soc_trajectory(&[0.0], &[vec![0.0]], &[], &BatteryConfig::default()).is_err());
    }

    fn zero_plan(hours: usize) -> PlanningSolution {
        let net = three_bus();
        let z = |w: usize| vec![vec![0.0; w]; hours];
        PlanningSolution {
            start_hour: 0,
            candidate_buses: vec!["b2".into(), "b3".into()],
            placement: vec![0.0; 2],
            initial_soc: vec![0.0; 2],
            generation: z(net.num_generators()),
            slack: z(3),
            angle: z(3),
            load_shed: z(3),
            flow: z(3),
            charge: z(2),
            discharge: z(2),
            soc: z(2),
            cost: CostBreakdown::default(),
        }
    }

    #[test]
    fn cost_examples() {
        let net = three_bus();
        let k = CostConfig::default();
        let mut p = zero_plan(1);
        assert_eq!(evaluate_cost(&p, &net, &k).unwrap(), CostBreakdown::default());
        p.load_shed[0][2] = 0.1;
        let c = evaluate_cost(&p, &net, &k).unwrap();
        assert!((c.load_shed - 2000.0).abs() < 1e-9);
        p.load_shed[0][2] = 0.0;
        p.slack[0][1] = 0.01;
        let c = evaluate_cost(&p, &net, &k).unwrap();
        assert!((c.slack - 10_000.0).abs() < 1e-9);
        assert_eq!(c.total, c.slack);
    }

    #[test]
    fn cubic_cost_rejected() {
        let mut net = three_bus();
        net.generators[0].cost_coeffs = vec![0.0, 1.0, 0.0, 2.0];
        assert!(matches!(evaluate_cost(&zero_plan(1), &net, &CostConfig::default()), Err(OpfError::CostDegree(_))));
    }
}
