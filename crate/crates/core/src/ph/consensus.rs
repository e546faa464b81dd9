use serde::{Deserialize, Serialize};

use super::PhError;
use crate::lp::{RowSense, StandardFormLP};
use crate::opf::PeriodSubproblem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarClass {
    /// Battery count at a candidate bus, shared by every period.
    Placement { candidate: usize },
    /// Stored energy at the boundary between `period` and `period + 1`.
    SocBoundary { period: usize, candidate: usize },
}

/// A first-stage variable with its owning periods, their consensus
/// weights and the LP column it occupies in each owner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstStageVar {
    pub id: String,
    pub class: VarClass,
    /// `(period, weight, column)`; weights sum to 1.
    pub owners: Vec<(usize, f64, usize)>,
    pub lower: f64,
    pub upper: f64,
}

impl FirstStageVar {
    pub fn weight_of(&self, period: usize) -> Option<f64> {
        self.owners.iter().find(|o| o.0 == period).map(|o| o.1)
    }
}

/// Enumerates the first-stage variables of a chain of period LPs built
/// with `has_left_boundary` on every period but the first.
pub fn first_stage_vars(subs: &[PeriodSubproblem], probabilities: &[f64], candidates: &[String]) -> Vec<FirstStageVar> {
    let mut vars = Vec::new();
    for (i, bus) in candidates.iter().enumerate() {
        let col = subs[0].varmap.placement[i];
        vars.push(FirstStageVar {
            id: format!("x[{bus}]"),
            class: VarClass::Placement { candidate: i },
            owners: subs
                .iter()
                .enumerate()
                .map(|(s, sub)| (s, probabilities[s], sub.varmap.placement[i]))
                .collect(),
            lower: subs[0].lp.col_lower[col],
            upper: subs[0].lp.col_upper[col],
        });
    }
    for p in 0..subs.len().saturating_sub(1) {
        let next = subs[p + 1]
            .varmap
            .boundary_soc
            .as_ref()
            .expect("later periods carry an entering SOC column");
        for (i, bus) in candidates.iter().enumerate() {
            let col = next[i];
            vars.push(FirstStageVar {
                id: format!("e[{bus},{}]", subs[p].varmap.hours.end - 1),
                class: VarClass::SocBoundary { period: p, candidate: i },
                owners: vec![(p, 0.5, subs[p].varmap.final_soc()[i]), (p + 1, 0.5, col)],
                lower: subs[p + 1].lp.col_lower[col],
                upper: subs[p + 1].lp.col_upper[col],
            });
        }
    }
    vars
}

/// Per-period list of `(variable index, owner slot)` pairs, in variable order.
pub fn owned_by_period(vars: &[FirstStageVar], periods: usize) -> Vec<Vec<(usize, usize)>> {
    let mut out = vec![Vec::new(); periods];
    for (v, var) in vars.iter().enumerate() {
        for (slot, &(s, _, _)) in var.owners.iter().enumerate() {
            out[s].push((v, slot));
        }
    }
    out
}

/// Weighted mean of the owners' values, summed in owner order.
pub fn aggregate(values: &[f64], var: &FirstStageVar) -> Result<f64, PhError> {
    if values.len() != var.owners.len() {
        return Err(PhError::MissingOwner {
            var: var.id.clone(),
            expected: var.owners.len(),
            found: values.len(),
        });
    }
    Ok(var.owners.iter().zip(values).fold(0.0, |acc, (o, x)| acc + o.1 * x))
}

/// `w + ρ (x − x̄)`.
pub fn price_update(w: f64, x: f64, xbar: f64, rho: f64) -> f64 {
    w + rho * (x - xbar)
}

/// Root of the weighted mean square deviation from consensus, averaged
/// over variables. `values[v]` holds the owners' values of variable `v`.
pub fn residual(values: &[Vec<f64>], xbar: &[f64], vars: &[FirstStageVar]) -> f64 {
    if vars.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for (v, var) in vars.iter().enumerate() {
        for (o, x) in var.owners.iter().zip(&values[v]) {
            total += o.1 * (x - xbar[v]).powi(2);
        }
    }
    (total / vars.len() as f64).sqrt()
}

/// Largest `|Σ owners weight·w|` over variables.
pub fn weight_imbalance(w: &[Vec<f64>], vars: &[FirstStageVar]) -> f64 {
    vars.iter()
        .enumerate()
        .map(|(v, var)| var.owners.iter().zip(&w[v]).fold(0.0, |a, (o, wv)| a + o.1 * wv).abs())
        .fold(0.0, f64::max)
}

/// One penalized first-stage column of a period LP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyTerm {
    pub col: usize,
    pub w: f64,
    pub xbar: f64,
    pub rho: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Tangent points of the proximal cut family for one variable: a uniform
/// grid of `breakpoints` segments over the variable's range, shifted so
/// that `xbar` is a grid point, plus `refine` points on each side at
/// `xbar ± width / 2^k`.
pub fn tangent_points(xbar: f64, lower: f64, upper: f64, breakpoints: usize, refine: usize) -> Vec<f64> {
    let b = breakpoints.max(1);
    let width = (upper - lower) / b as f64;
    let mut pts: Vec<f64> = Vec::with_capacity(2 * b + 1 + 2 * refine);
    if width > 0.0 {
        for k in -(b as i64)..=(b as i64) {
            pts.push(xbar + k as f64 * width);
        }
        for k in 1..=refine {
            let d = width / (1u64 << k.min(62)) as f64;
            pts.push(xbar - d);
            pts.push(xbar + d);
        }
    } else {
        pts.push(xbar);
    }
    pts
}

/// Adds `w·x` to the objective of each penalized column and, where
/// `rho > 0`, an epigraph column bounded below by tangent cuts of
/// `(ρ/2)(x − x̄)²`. Within `[lower, upper]` the cut envelope differs from
/// the quadratic by at most `ρ/8 · width²`.
pub fn augment_subproblem(
    lp: &StandardFormLP,
    terms: &[PenaltyTerm],
    breakpoints: usize,
    refine: usize,
) -> Result<StandardFormLP, PhError> {
    let mut out = lp.clone();
    for t in terms {
        if !(t.w.is_finite() && t.xbar.is_finite() && t.rho.is_finite()) || t.rho < 0.0 {
            return Err(PhError::NonFinite(out.col_names[t.col].clone()));
        }
        out.objective[t.col] += t.w;
        if t.rho == 0.0 {
            continue;
        }
        let name = format!("prox[{}]", out.col_names[t.col]);
        let z = out.add_col(name.clone(), 0.0, f64::INFINITY, 1.0);
        for (k, a) in tangent_points(t.xbar, t.lower, t.upper, breakpoints, refine).into_iter().enumerate() {
            // z ≥ (ρ/2)(a − x̄)² + ρ(a − x̄)(x − a)
            let slope = t.rho * (a - t.xbar);
            let rhs = -0.5 * t.rho * (a - t.xbar) * (a + t.xbar);
            out.add_row(format!("{name}#{k}"), RowSense::Ge, rhs, &[(z, 1.0), (t.col, -slope)]);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn placement(n: usize) -> FirstStageVar {
        FirstStageVar {
            id: "x".into(),
            class: VarClass::Placement { candidate: 0 },
            owners: (0..n).map(|s| (s, 1.0 / n as f64, 0)).collect(),
            lower: 0.0,
            upper: 4.0,
        }
    }

    fn boundary() -> FirstStageVar {
        FirstStageVar {
            id: "e".into(),
            class: VarClass::SocBoundary { period: 2, candidate: 0 },
            owners: vec![(2, 0.5, 0), (3, 0.5, 0)],
            lower: 0.0,
            upper: 4.0,
        }
    }

    #[test]
    fn aggregation_examples() {
        assert_eq!(aggregate(&[1.0, 2.0, 3.0, 2.0], &placement(4)).unwrap(), 2.0);
        assert_eq!(aggregate(&[0.4, 0.6], &boundary()).unwrap(), 0.5);
        assert!((aggregate(&[1.7; 4], &placement(4)).unwrap() - 1.7).abs() < 1e-15);
        assert!(matches!(aggregate(&[1.0], &boundary()), Err(PhError::MissingOwner { .. })));
    }

    #[test]
    fn price_update_examples() {
        assert!((price_update(0.0, 3.0, 2.0, 0.001) - 0.001).abs() < 1e-18);
        assert_eq!(price_update(0.25, 2.0, 2.0, 0.001), 0.25);
        let var = boundary();
        let xbar = aggregate(&[0.4, 0.6], &var).unwrap();
        let w = vec![vec![price_update(0.0, 0.4, xbar, 0.001), price_update(0.0, 0.6, xbar, 0.001)]];
        assert!(weight_imbalance(&w, &[var]) < 1e-18);
    }

    #[test]
    fn residual_examples() {
        let p = placement(2);
        assert_eq!(residual(&[vec![2.0, 2.0]], &[2.0], std::slice::from_ref(&p)), 0.0);
        assert!((residual(&[vec![1.0, 3.0]], &[2.0], std::slice::from_ref(&p)) - 1.0).abs() < 1e-15);
        // Placement over 3 periods plus two boundaries:
        // x: values 1, 2, 3 around 2 -> (1/3)(1 + 0 + 1) = 2/3
        // e1: 0.4, 0.6 around 0.5 -> 0.5·0.01 + 0.5·0.01 = 0.01
        // e2: 1.0, 1.0 around 1.0 -> 0
        // rms over 3 variables: sqrt((2/3 + 0.01) / 3)
        let vars = vec![placement(3), boundary(), boundary()];
        let values = vec![vec![1.0, 2.0, 3.0], vec![0.4, 0.6], vec![1.0, 1.0]];
        let r = residual(&values, &[2.0, 0.5, 1.0], &vars);
        assert!((r - ((2.0 / 3.0 + 0.01) / 3.0f64).sqrt()).abs() < 1e-15);
    }

    fn scalar_lp() -> StandardFormLP {
        let mut lp = StandardFormLP::new("t");
        lp.add_col("x", 0.0, 4.0, 0.0);
        lp
    }

    fn envelope(aug: &StandardFormLP, x: f64) -> f64 {
        // Max over cuts of rhs + slope·x, i.e. the epigraph value at x.
        let mut best: f64 = 0.0;
        for r in 0..aug.num_rows() {
            let slope = aug.entries.iter().find(|t| t.row == r && t.col == 0).map_or(0.0, |t| -t.val);
            best = best.max(aug.rhs[r] + slope * x);
        }
        best
    }

    #[test]
    fn zero_rho_adds_only_linear_term() {
        let t = PenaltyTerm {
            col: 0,
            w: 0.3,
            xbar: 1.0,
            rho: 0.0,
            lower: 0.0,
            upper: 4.0,
        };
        let aug = augment_subproblem(&scalar_lp(), &[t], 8, 4).unwrap();
        assert_eq!(aug.num_cols(), 1);
        assert_eq!(aug.num_rows(), 0);
        assert_eq!(aug.objective, vec![0.3]);
    }

    #[test]
    fn cuts_touch_zero_at_consensus_even_on_a_bound() {
        let t = PenaltyTerm {
            col: 0,
            w: 0.0,
            xbar: 0.0,
            rho: 2.0,
            lower: 0.0,
            upper: 4.0,
        };
        let aug = augment_subproblem(&scalar_lp(), &[t], 2, 0).unwrap();
        assert_eq!(envelope(&aug, 0.0), 0.0);
        assert!(envelope(&aug, 2.0) > 0.0);
    }

    #[test]
    fn approximation_error_bound() {
        let (rho, xbar) = (0.001, 2.0);
        let t = PenaltyTerm {
            col: 0,
            w: 0.0,
            xbar,
            rho,
            lower: 0.0,
            upper: 4.0,
        };
        let bound = rho / 8.0 * 0.5f64.powi(2);
        assert!((bound - 3.125e-5).abs() < 1e-18);
        for refine in [0, 6] {
            let aug = augment_subproblem(&scalar_lp(), &[t], 8, refine).unwrap();
            let mut worst: f64 = 0.0;
            for k in 0..=4000 {
                let x = k as f64 * 0.001;
                let exact = 0.5 * rho * (x - xbar).powi(2);
                let approx = envelope(&aug, x);
                assert!(approx <= exact + 1e-15, "outer approximation at {x}");
                worst = worst.max(exact - approx);
            }
            assert!(worst <= bound + 1e-15, "error {worst}");
        }
    }

    #[test]
    fn non_finite_inputs_rejected() {
        let t = PenaltyTerm {
            col: 0,
            w: f64::NAN,
            xbar: 0.0,
            rho: 1.0,
            lower: 0.0,
            upper: 4.0,
        };
        assert!(matches!(augment_subproblem(&scalar_lp(), &[t], 8, 0), Err(PhError::NonFinite(_))));
    }
}
