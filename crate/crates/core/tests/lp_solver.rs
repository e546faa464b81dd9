mod common;

use battsite::lp::{
    read_mps, solve_lp, warm_solve, write_mps, LpStatus, Pricing, RowSense, SolverOptions,
    StandardFormLP, WarmStart,
};
use common::oracle::enumerate_vertices;
use proptest::prelude::*;

fn assert_certified(lp: &StandardFormLP, sol: &battsite::lp::LPSolution) {
    assert_eq!(sol.status, LpStatus::Optimal);
    let scale = 1.0 + sol.objective.abs();
    assert!(
        sol.duality_gap(lp) <= 1e-6 * scale,
        "duality gap {} at objective {}",
        sol.duality_gap(lp),
        sol.objective
    );
    assert!(sol.max_primal_residual <= 1e-7);
    assert!(sol.complementarity(lp) <= 1e-6 * scale);
}

/// Beale's classic example that cycles under the textbook Dantzig rule.
fn beale() -> StandardFormLP {
    let mut lp = StandardFormLP::new("beale");
    let x4 = lp.add_col("x4", 0.0, f64::INFINITY, -0.75);
    let x5 = lp.add_col("x5", 0.0, f64::INFINITY, 20.0);
    let x6 = lp.add_col("x6", 0.0, f64::INFINITY, -0.5);
    let x7 = lp.add_col("x7", 0.0, f64::INFINITY, 6.0);
    lp.add_row("r1", RowSense::Le, 0.0, &[(x4, 0.25), (x5, -8.0), (x6, -1.0), (x7, 9.0)]);
    lp.add_row("r2", RowSense::Le, 0.0, &[(x4, 0.5), (x5, -12.0), (x6, -0.5), (x7, 3.0)]);
    lp.add_row("r3", RowSense::Le, 1.0, &[(x6, 1.0)]);
    lp
}

#[test]
fn beale_cycling_instance_terminates() {
    let lp = beale();
    for pricing in [Pricing::Dantzig, Pricing::Bland] {
        let opts = SolverOptions {
            pricing,
            degeneracy_streak: 3,
            ..Default::default()
        };
        let sol = solve_lp(&lp, &opts);
        assert_certified(&lp, &sol);
        // Cross-check against enumeration with a generous box.
        let mut boxed = lp.clone();
        boxed.col_upper = vec![100.0; 4];
        let oracle = enumerate_vertices(&boxed, 1e7).unwrap();
        assert!((sol.objective - oracle.objective).abs() <= 1e-6 * (1.0 + oracle.objective.abs()));
        // x4 = x6 = 1
        assert!((sol.objective + 1.25).abs() < 1e-9);
    }
}

#[test]
fn solver_is_deterministic() {
    let lp = beale();
    let a = solve_lp(&lp, &SolverOptions::default());
    let b = solve_lp(&lp, &SolverOptions::default());
    assert_eq!(a.x.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.x.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    assert_eq!(a.stats, b.stats);
}

fn transport() -> StandardFormLP {
    // 3 supplies x 3 demands, costs (i+2j) mod 5 + 1.
    let mut lp = StandardFormLP::new("transp");
    let supply = [30.0, 25.0, 45.0];
    let demand = [20.0, 30.0, 45.0];
    let mut cols = vec![vec![0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            cols[i][j] = lp.add_col(format!("f{i}{j}"), 0.0, f64::INFINITY, ((i + 2 * j) % 5 + 1) as f64);
        }
    }
    for i in 0..3 {
        let c: Vec<(usize, f64)> = (0..3).map(|j| (cols[i][j], 1.0)).collect();
        lp.add_row(format!("s{i}"), RowSense::Le, supply[i], &c);
    }
    for j in 0..3 {
        let c: Vec<(usize, f64)> = (0..3).map(|i| (cols[i][j], 1.0)).collect();
        lp.add_row(format!("d{j}"), RowSense::Ge, demand[j], &c);
    }
    lp
}

#[test]
fn warm_start_after_objective_perturbation() {
    let lp = transport();
    let opts = SolverOptions::default();
    let cold = solve_lp(&lp, &opts);
    assert_certified(&lp, &cold);
    let mut perturbed = lp.clone();
    perturbed.objective[5] += 1e-6;
    let cold2 = solve_lp(&perturbed, &opts);
    let warm = warm_solve(&perturbed, cold.basis.as_ref().unwrap(), &opts);
    assert_certified(&perturbed, &warm);
    assert_eq!(warm.stats.warm_start, WarmStart::Accepted);
    assert!((warm.objective - cold2.objective).abs() < 1e-9);
    // Measured once at 2 warm vs 12 cold pivots; pinned loosely.
    assert!(warm.stats.iterations <= cold2.stats.iterations);
    assert!(warm.stats.iterations <= 4);
}

#[test]
fn warm_start_after_bound_change_recovers() {
    let lp = transport();
    let opts = SolverOptions::default();
    let cold = solve_lp(&lp, &opts);
    let mut tightened = lp.clone();
    // Cap every route that carries flow, invalidating the old basis.
    for j in 0..tightened.num_cols() {
        if cold.x[j] > 1.0 {
            tightened.col_upper[j] = cold.x[j] / 2.0;
        }
    }
    let warm = warm_solve(&tightened, cold.basis.as_ref().unwrap(), &opts);
    let fresh = solve_lp(&tightened, &opts);
    assert_certified(&tightened, &warm);
    assert!(warm.stats.phase1_iterations > 0);
    assert!((warm.objective - fresh.objective).abs() <= 1e-9 * (1.0 + fresh.objective.abs()));
}

#[test]
fn transport_matches_vertex_enumeration() {
    // 9 variables; enumeration over the box-free polytope would be
    // unbounded in principle, so add a generous cap.
    let mut lp = transport();
    lp.col_upper = vec![60.0; lp.num_cols()];
    let sol = solve_lp(&lp, &SolverOptions::default());
    assert_certified(&lp, &sol);
    let oracle = enumerate_vertices(&lp, 5e6).unwrap();
    assert!((sol.objective - oracle.objective).abs() <= 1e-6 * (1.0 + oracle.objective.abs()));
}

#[test]
fn mps_round_trip_preserves_optimum() {
    let lp = transport();
    let back = read_mps(&write_mps(&lp).text).unwrap();
    assert_eq!(back, lp);
    let a = solve_lp(&lp, &SolverOptions::default());
    let b = solve_lp(&back, &SolverOptions::default());
    assert_eq!(a.objective, b.objective);
}

#[derive(Debug, Clone)]
struct Rand {
    n: usize,
    bounds: Vec<(f64, f64)>,
    costs: Vec<f64>,
    rows: Vec<(Vec<f64>, u8, f64)>,
}

fn small_lp() -> impl Strategy<Value = Rand> {
    (2usize..=6, 1usize..=4).prop_flat_map(|(n, m)| {
        let bounds = prop::collection::vec((-4i32..=2, 0i32..=4), n);
        let costs = prop::collection::vec(-5i32..=5, n);
        let rows = prop::collection::vec(
            (prop::collection::vec(-3i32..=3, n), 0u8..3, -6i32..=6),
            m,
        );
        (Just(n), bounds, costs, rows).prop_map(|(n, b, c, r)| Rand {
            n,
            bounds: b.into_iter().map(|(l, w)| (l as f64, (l + w) as f64)).collect(),
            costs: c.into_iter().map(f64::from).collect(),
            rows: r
                .into_iter()
                .map(|(a, s, rhs)| (a.into_iter().map(f64::from).collect(), s, rhs as f64 * 0.5))
                .collect(),
        })
    })
}

impl Rand {
    fn lp(&self) -> StandardFormLP {
        let mut lp = StandardFormLP::new("rand");
        for j in 0..self.n {
            lp.add_col(format!("x{j}"), self.bounds[j].0, self.bounds[j].1, self.costs[j]);
        }
        for (i, (a, s, rhs)) in self.rows.iter().enumerate() {
            let sense = [RowSense::Le, RowSense::Eq, RowSense::Ge][*s as usize];
            let coeffs: Vec<(usize, f64)> = a.iter().copied().enumerate().collect();
            lp.add_row(format!("r{i}"), sense, *rhs, &coeffs);
        }
        lp
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn random_boxed_lps_agree_with_vertex_enumeration(r in small_lp()) {
        let lp = r.lp();
        let sol = solve_lp(&lp, &SolverOptions::default());
        match enumerate_vertices(&lp, 1e6) {
            None => prop_assert_eq!(sol.status, LpStatus::Infeasible),
            Some(v) => {
                prop_assert_eq!(sol.status, LpStatus::Optimal);
                prop_assert!((sol.objective - v.objective).abs() <= 1e-6 * (1.0 + v.objective.abs()));
                let scale = 1.0 + sol.objective.abs();
                prop_assert!(sol.duality_gap(&lp) <= 1e-6 * scale);
                prop_assert!(sol.complementarity(&lp) <= 1e-6 * scale);
            }
        }
    }

    #[test]
    fn mps_round_trip(r in small_lp()) {
        let lp = r.lp();
        prop_assert_eq!(read_mps(&write_mps(&lp).text).unwrap(), lp);
    }
}
