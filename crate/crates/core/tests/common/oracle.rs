//! Brute-force vertex enumeration for small bounded LPs.
//!
//! Independent of the simplex code: equalities are eliminated by dense
//! Gauss-Jordan, then every choice of `d` active inequalities (d = the
//! dimension left after elimination) is solved directly and the best
//! feasible vertex kept.

use battsite::lp::{RowSense, StandardFormLP};

pub struct Vertex {
    pub objective: f64,
    pub x: Vec<f64>,
}

fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[p][k].abs() < 1e-10 {
            return None;
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            if f != 0.0 {
                for c in k..n {
                    a[i][c] -= f * a[k][c];
                }
                b[i] -= f * b[k];
            }
        }
    }
    let mut z = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|c| a[k][c] * z[c]).sum();
        z[k] = (b[k] - s) / a[k][k];
    }
    Some(z)
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut r = 1.0;
    for i in 0..k {
        r *= (n - i) as f64 / (i + 1) as f64;
    }
    r
}

/// Minimum over all vertices, or `None` when no vertex is feasible.
/// Panics if the enumeration would exceed `max_subsets`.
pub fn enumerate_vertices(lp: &StandardFormLP, max_subsets: f64) -> Option<Vertex> {
    let n = lp.num_cols();
    let mut dense = vec![vec![0.0; n]; lp.num_rows()];
    for t in &lp.entries {
        dense[t.row][t.col] += t.val;
    }
    let mut eq: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut le: Vec<(Vec<f64>, f64)> = Vec::new();
    for (i, row) in dense.into_iter().enumerate() {
        let b = lp.rhs[i];
        match lp.senses[i] {
            RowSense::Eq => eq.push((row, b)),
            RowSense::Le => le.push((row, b)),
            RowSense::Ge => le.push((row.iter().map(|v| -v).collect(), -b)),
        }
    }
    for j in 0..n {
        let mut unit = vec![0.0; n];
        unit[j] = 1.0;
        let (l, u) = (lp.col_lower[j], lp.col_upper[j]);
        if l == u {
            eq.push((unit, l));
            continue;
        }
        if l.is_finite() {
            le.push((unit.iter().map(|v| -v).collect(), -l));
        }
        if u.is_finite() {
            le.push((unit, u));
        }
    }

    // Gauss-Jordan on the equalities.
    let mut rows = eq;
    let mut pivots: Vec<usize> = Vec::new();
    let mut r = 0;
    for c in 0..n {
        let Some(p) = (r..rows.len())
            .filter(|&i| rows[i].0[c].abs() > 1e-10)
            .max_by(|&i, &j| rows[i].0[c].abs().total_cmp(&rows[j].0[c].abs()))
        else {
            continue;
        };
        rows.swap(r, p);
        let piv = rows[r].0[c];
        for v in rows[r].0.iter_mut() {
            *v /= piv;
        }
        rows[r].1 /= piv;
        for i in 0..rows.len() {
            if i != r {
                let f = rows[i].0[c];
                if f != 0.0 {
                    let (src, rhs) = (rows[r].0.clone(), rows[r].1);
                    for (v, s) in rows[i].0.iter_mut().zip(&src) {
                        *v -= f * s;
                    }
                    rows[i].1 -= f * rhs;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    for row in rows.iter().skip(r) {
        if row.1.abs() > 1e-9 {
            return None;
        }
    }
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    let d = free.len();
    // x = x0 + N z
    let mut x0 = vec![0.0; n];
    let mut null = vec![vec![0.0; d]; n];
    for (k, &c) in pivots.iter().enumerate() {
        x0[c] = rows[k].1;
        for (f, &fc) in free.iter().enumerate() {
            null[c][f] = -rows[k].0[fc];
        }
    }
    for (f, &fc) in free.iter().enumerate() {
        null[fc][f] = 1.0;
    }
    let cons: Vec<(Vec<f64>, f64)> = le
        .iter()
        .map(|(g, h)| {
            let a: Vec<f64> = (0..d).map(|f| (0..n).map(|j| g[j] * null[j][f]).sum()).collect();
            let base: f64 = (0..n).map(|j| g[j] * x0[j]).sum();
            (a, h - base)
        })
        .collect();
    let k = cons.len();
    assert!(
        binomial(k, d) <= max_subsets,
        "vertex enumeration too large: C({k}, {d})"
    );
    let to_x = |z: &[f64]| -> Vec<f64> {
        (0..n).map(|j| x0[j] + (0..d).map(|f| null[j][f] * z[f]).sum::<f64>()).collect()
    };
    let feasible = |z: &[f64]| {
        cons.iter().all(|(a, b)| {
            let s: f64 = a.iter().zip(z).map(|(p, q)| p * q).sum();
            s <= b + 1e-8 * (1.0 + b.abs())
        })
    };
    let mut best: Option<Vertex> = None;
    let mut consider = |z: Vec<f64>| {
        if feasible(&z) {
            let x = to_x(&z);
            let obj = lp.objective_value(&x);
            if best.as_ref().is_none_or(|b| obj < b.objective) {
                best = Some(Vertex { objective: obj, x });
            }
        }
    };
    if d == 0 {
        consider(Vec::new());
        return best;
    }
    if k < d {
        return None;
    }
    let mut idx: Vec<usize> = (0..d).collect();
    loop {
        let a: Vec<Vec<f64>> = idx.iter().map(|&i| cons[i].0.clone()).collect();
        let b: Vec<f64> = idx.iter().map(|&i| cons[i].1).collect();
        if let Some(z) = solve_dense(a, b) {
            consider(z);
        }
        // next combination
        let mut p = d;
        loop {
            if p == 0 {
                return best;
            }
            p -= 1;
            if idx[p] < k - d + p {
                idx[p] += 1;
                for q in p + 1..d {
                    idx[q] = idx[q - 1] + 1;
                }
                break;
            }
        }
    }
}
