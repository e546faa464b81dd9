//! Sparse left-looking LU of a simplex basis with threshold partial
//! pivoting, plus product-form eta updates between refactorizations.
//!
//! Step `k` of the factorization consumes basis position `col_order[k]`
//! and pivots on row `pivot_row[k]`. `L` columns hold original row
//! indices (unit diagonal implied); `U` columns hold step indices.

/// Pivot candidates must be at least this fraction of the column's
/// largest candidate.
const PIVOT_THRESHOLD: f64 = 0.1;
const SINGULAR_TOL: f64 = 1e-11;
const DROP_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Singular {
    /// Basis positions whose columns turned out dependent.
    pub positions: Vec<usize>,
    /// Rows left without a pivot; same length as `positions`.
    pub rows: Vec<usize>,
}

#[derive(Debug, Clone, Default)]
struct Flat {
    start: Vec<usize>,
    idx: Vec<usize>,
    val: Vec<f64>,
}

impl Flat {
    fn with_capacity(m: usize) -> Self {
        let mut start = Vec::with_capacity(m + 1);
        start.push(0);
        Flat {
            start,
            idx: Vec::new(),
            val: Vec::new(),
        }
    }

    fn push(&mut self, i: usize, v: f64) {
        self.idx.push(i);
        self.val.push(v);
    }

    fn close(&mut self) {
        self.start.push(self.idx.len());
    }

    fn col(&self, k: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.start[k], self.start[k + 1]);
        (&self.idx[a..b], &self.val[a..b])
    }
}

#[derive(Debug, Clone)]
struct Eta {
    pos: usize,
    pivot: f64,
    idx: Vec<usize>,
    val: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct BasisFactor {
    m: usize,
    col_order: Vec<usize>,
    pivot_row: Vec<usize>,
    l: Flat,
    u: Flat,
    u_diag: Vec<f64>,
    etas: Vec<Eta>,
    step_buf: Vec<f64>,
}

impl BasisFactor {
    /// Factorizes the `m × m` matrix whose column at basis position `j`
    /// is `cols[j]` (row index, value pairs).
    pub fn factorize(m: usize, cols: &[Vec<(usize, f64)>]) -> Result<Self, Singular> {
        debug_assert_eq!(cols.len(), m);
        let mut row_count = vec![0usize; m];
        for c in cols {
            for &(i, _) in c {
                row_count[i] += 1;
            }
        }
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by_key(|&j| (cols[j].len(), j));

        let mut pinv: Vec<Option<usize>> = vec![None; m];
        let mut l = Flat::with_capacity(m);
        let mut u = Flat::with_capacity(m);
        let mut u_diag = Vec::with_capacity(m);
        let mut col_order = Vec::with_capacity(m);
        let mut pivot_row = Vec::with_capacity(m);
        let mut dependent = Vec::new();

        let mut x = vec![0.0; m];
        let mut mark = vec![false; m];
        let mut reach: Vec<usize> = Vec::with_capacity(m);
        let mut stack: Vec<(usize, usize)> = Vec::new();

        for &pos in &order {
            let col = &cols[pos];
            let step = col_order.len();
            // Topological order of rows reachable from the column pattern
            // through already-built L columns.
            reach.clear();
            for &(start, _) in col {
                if mark[start] {
                    continue;
                }
                mark[start] = true;
                stack.push((start, 0));
                while let Some(&mut (node, ref mut edge)) = stack.last_mut() {
                    let children: &[usize] = match pinv[node] {
                        Some(k) => l.col(k).0,
                        None => &[],
                    };
                    if *edge < children.len() {
                        let child = children[*edge];
                        *edge += 1;
                        if !mark[child] {
                            mark[child] = true;
                            stack.push((child, 0));
                        }
                    } else {
                        stack.pop();
                        reach.push(node);
                    }
                }
            }
            let colmax = col.iter().fold(0.0f64, |a, &(_, v)| a.max(v.abs()));
            for &(i, v) in col {
                x[i] += v;
            }
            // reach holds reverse topological order.
            for &j in reach.iter().rev() {
                if let Some(k) = pinv[j] {
                    let xj = x[j];
                    if xj != 0.0 {
                        let (ri, rv) = l.col(k);
                        for (&i, &lv) in ri.iter().zip(rv) {
                            x[i] -= lv * xj;
                        }
                    }
                }
            }
            let mut best_mag = 0.0f64;
            for &j in &reach {
                if pinv[j].is_none() {
                    best_mag = best_mag.max(x[j].abs());
                }
            }
            if best_mag <= SINGULAR_TOL * colmax.max(1.0) {
                dependent.push(pos);
                for &j in &reach {
                    x[j] = 0.0;
                    mark[j] = false;
                }
                continue;
            }
            let mut piv: Option<usize> = None;
            for &j in &reach {
                if pinv[j].is_some() || x[j].abs() < PIVOT_THRESHOLD * best_mag {
                    continue;
                }
                piv = match piv {
                    None => Some(j),
                    Some(p) => {
                        let better = (row_count[j], std::cmp::Reverse(ordered(x[j].abs())), j)
                            < (row_count[p], std::cmp::Reverse(ordered(x[p].abs())), p);
                        Some(if better { j } else { p })
                    }
                };
            }
            let piv = piv.expect("a candidate at the maximum magnitude exists");
            let diag = x[piv];
            // U entries in step order for reproducibility.
            let mut ucol: Vec<(usize, f64)> = reach
                .iter()
                .filter_map(|&j| pinv[j].map(|k| (k, x[j])))
                .filter(|&(_, v)| v.abs() > DROP_TOL)
                .collect();
            ucol.sort_by_key(|&(k, _)| k);
            for (k, v) in ucol {
                u.push(k, v);
            }
            u.close();
            u_diag.push(diag);
            let mut lcol: Vec<(usize, f64)> = reach
                .iter()
                .filter(|&&j| pinv[j].is_none() && j != piv)
                .map(|&j| (j, x[j] / diag))
                .filter(|&(_, v)| v.abs() > DROP_TOL)
                .collect();
            lcol.sort_by_key(|&(i, _)| i);
            for (i, v) in lcol {
                l.push(i, v);
            }
            l.close();
            pinv[piv] = Some(step);
            col_order.push(pos);
            pivot_row.push(piv);
            for &j in &reach {
                x[j] = 0.0;
                mark[j] = false;
            }
        }

        if !dependent.is_empty() {
            let rows = (0..m).filter(|&i| pinv[i].is_none()).collect();
            return Err(Singular {
                positions: dependent,
                rows,
            });
        }
        Ok(BasisFactor {
            m,
            col_order,
            pivot_row,
            l,
            u,
            u_diag,
            etas: Vec::new(),
            step_buf: vec![0.0; m],
        })
    }

    pub fn num_etas(&self) -> usize {
        self.etas.len()
    }

    /// Solves `B z = a`. `a` is row-indexed and is overwritten; `z` is
    /// indexed by basis position.
    pub fn ftran(&self, a: &mut [f64], z: &mut [f64]) {
        let m = self.m;
        for k in 0..m {
            let yk = a[self.pivot_row[k]];
            if yk != 0.0 {
                let (ri, rv) = self.l.col(k);
                for (&i, &lv) in ri.iter().zip(rv) {
                    a[i] -= lv * yk;
                }
            }
        }
        for k in (0..m).rev() {
            let wk = a[self.pivot_row[k]] / self.u_diag[k];
            z[self.col_order[k]] = wk;
            if wk != 0.0 {
                let (si, sv) = self.u.col(k);
                for (&s, &uv) in si.iter().zip(sv) {
                    a[self.pivot_row[s]] -= uv * wk;
                }
            }
        }
        for eta in &self.etas {
            let zr = z[eta.pos] / eta.pivot;
            z[eta.pos] = zr;
            if zr != 0.0 {
                for (&i, &v) in eta.idx.iter().zip(&eta.val) {
                    z[i] -= v * zr;
                }
            }
        }
    }

    /// Solves `Bᵀ π = c`. `c` is indexed by basis position and is
    /// overwritten; `pi` is row-indexed.
    pub fn btran(&mut self, c: &mut [f64], pi: &mut [f64]) {
        for eta in self.etas.iter().rev() {
            let mut s = c[eta.pos];
            for (&i, &v) in eta.idx.iter().zip(&eta.val) {
                s -= v * c[i];
            }
            c[eta.pos] = s / eta.pivot;
        }
        let m = self.m;
        let v = &mut self.step_buf;
        for k in 0..m {
            let mut s = c[self.col_order[k]];
            let (si, sv) = self.u.col(k);
            for (&j, &uv) in si.iter().zip(sv) {
                s -= uv * v[j];
            }
            v[k] = s / self.u_diag[k];
        }
        for k in (0..m).rev() {
            let mut s = v[k];
            let (ri, rv) = self.l.col(k);
            for (&i, &lv) in ri.iter().zip(rv) {
                s -= lv * pi[i];
            }
            pi[self.pivot_row[k]] = s;
        }
    }

    /// Records the replacement of basis position `pos` by a column whose
    /// FTRAN image is `alpha` (position-indexed).
    pub fn push_eta(&mut self, pos: usize, alpha: &[f64]) {
        let mut idx = Vec::new();
        let mut val = Vec::new();
        for (i, &a) in alpha.iter().enumerate() {
            if i != pos && a.abs() > DROP_TOL {
                idx.push(i);
                val.push(a);
            }
        }
        self.etas.push(Eta {
            pos,
            pivot: alpha[pos],
            idx,
            val,
        });
    }
}

fn ordered(v: f64) -> u64 {
    // Nonnegative finite floats order the same as their bit patterns.
    v.to_bits()
}
