//! Deterministic parallel execution for per-period work.
//!
//! Workers own fixed, disjoint sets of periods. Results are returned in
//! period order and every reduction is a sequential fold in that order, so
//! outputs do not depend on the worker count.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExecPolicy {
    #[default]
    Sync,
    /// Incumbent evaluation for iteration `v` overlaps the solve phase of
    /// iteration `v + 1` and is merged at the following barrier.
    AsyncIncumbent,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkPlan {
    /// Worker index for each period.
    pub assignment: Vec<usize>,
    pub workers: usize,
    pub policy: ExecPolicy,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlanError {
    #[error("worker count must be at least 1")]
    NoWorkers,
    #[error("assignment names worker {worker} but only {workers} exist")]
    BadAssignment { worker: usize, workers: usize },
}

/// A task failure, tagged with the lowest failing period.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("period {period} failed: {error}")]
pub struct TaskError<E: std::fmt::Display> {
    pub period: usize,
    pub error: E,
}

impl WorkPlan {
    /// Contiguous blocks of periods per worker. More workers than periods
    /// is allowed; the extra workers stay idle.
    pub fn new(periods: usize, workers: usize, policy: ExecPolicy) -> Result<Self, PlanError> {
        if workers == 0 {
            return Err(PlanError::NoWorkers);
        }
        let assignment = (0..periods).map(|p| p * workers / periods.max(1)).collect();
        Ok(WorkPlan {
            assignment,
            workers,
            policy,
        })
    }

    pub fn with_assignment(assignment: Vec<usize>, workers: usize, policy: ExecPolicy) -> Result<Self, PlanError> {
        if workers == 0 {
            return Err(PlanError::NoWorkers);
        }
        if let Some(&worker) = assignment.iter().find(|&&w| w >= workers) {
            return Err(PlanError::BadAssignment { worker, workers });
        }
        Ok(WorkPlan {
            assignment,
            workers,
            policy,
        })
    }

    pub fn periods(&self) -> usize {
        self.assignment.len()
    }

    /// Worker counts for the solve phase and the incumbent finder. Under
    /// the async policy the pool is split in half.
    pub fn split(&self) -> (usize, usize) {
        match self.policy {
            ExecPolicy::Sync => (self.workers, self.workers),
            ExecPolicy::AsyncIncumbent if self.workers >= 2 => {
                let inc = self.workers / 2;
                (self.workers - inc, inc)
            }
            ExecPolicy::AsyncIncumbent => (1, 1),
        }
    }

    /// Same period count, different worker count.
    pub fn resized(&self, workers: usize) -> WorkPlan {
        WorkPlan::new(self.periods(), workers.max(1), self.policy).expect("nonzero workers")
    }
}

/// Applies `f(period, item)` to every item, one item per period, and
/// returns results in period order. On failure the error of the lowest
/// failing period is returned and all results are discarded.
pub fn parallel_map<T, R, E, F>(plan: &WorkPlan, items: Vec<T>, f: F) -> Result<Vec<R>, TaskError<E>>
where
    T: Send,
    R: Send,
    E: Send + std::fmt::Display,
    F: Fn(usize, T) -> Result<R, E> + Sync,
{
    assert_eq!(items.len(), plan.periods(), "one item per period");
    if items.is_empty() {
        return Ok(Vec::new());
    }
    let mut per_worker: Vec<Vec<(usize, T)>> = (0..plan.workers).map(|_| Vec::new()).collect();
    for (p, item) in items.into_iter().enumerate() {
        per_worker[plan.assignment[p]].push((p, item));
    }
    let busy = per_worker.iter().filter(|w| !w.is_empty()).count();
    let outputs: Vec<Vec<(usize, Result<R, E>)>> = if busy <= 1 {
        per_worker
            .into_iter()
            .map(|jobs| jobs.into_iter().map(|(p, t)| (p, f(p, t))).collect())
            .collect()
    } else {
        let f = &f;
        std::thread::scope(|s| {
            let handles: Vec<_> = per_worker
                .into_iter()
                .map(|jobs| s.spawn(move || jobs.into_iter().map(|(p, t)| (p, f(p, t))).collect::<Vec<_>>()))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().unwrap_or_else(|e| std::panic::resume_unwind(e)))
                .collect()
        })
    };
    let mut slots: Vec<Option<Result<R, E>>> = (0..plan.periods()).map(|_| None).collect();
    for (p, r) in outputs.into_iter().flatten() {
        slots[p] = Some(r);
    }
    let mut out = Vec::with_capacity(slots.len());
    for (period, r) in slots.into_iter().enumerate() {
        match r.expect("every period ran") {
            Ok(v) => out.push(v),
            Err(error) => return Err(TaskError { period, error }),
        }
    }
    Ok(out)
}

/// Left fold in index order.
pub fn ordered_reduce<T: Copy, A>(values: &[T], init: A, op: impl Fn(A, T) -> A) -> A {
    values.iter().fold(init, |acc, &v| op(acc, v))
}

pub fn ordered_sum(values: &[f64]) -> f64 {
    ordered_reduce(values, 0.0, |a, v| a + v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn results_are_in_period_order() {
        for workers in [1, 2, 4, 8] {
            let plan = WorkPlan::new(4, workers, ExecPolicy::Sync).unwrap();
            let r: Result<Vec<usize>, TaskError<String>> = parallel_map(&plan, vec![10, 20, 30, 40], |p, v| Ok(p * 1000 + v));
            assert_eq!(r.unwrap(), vec![10, 1020, 2030, 3040]);
        }
    }

    #[test]
    fn failure_names_lowest_period() {
        let plan = WorkPlan::new(5, 3, ExecPolicy::Sync).unwrap();
        let r: Result<Vec<()>, _> =
            parallel_map(&plan, vec![(); 5], |p, _| if p == 2 || p == 4 { Err(format!("bad {p}")) } else { Ok(()) });
        let e = r.unwrap_err();
        assert_eq!(e.period, 2);
        assert_eq!(e.to_string(), "period 2 failed: bad 2");
    }

    #[test]
    fn empty_plan() {
        let plan = WorkPlan::new(0, 4, ExecPolicy::Sync).unwrap();
        let r: Result<Vec<u8>, TaskError<String>> = parallel_map(&plan, Vec::<u8>::new(), |_, v| Ok(v));
        assert!(r.unwrap().is_empty());
        assert!(WorkPlan::new(3, 0, ExecPolicy::Sync).is_err());
    }

    #[test]
    fn assignment_covers_each_period_once() {
        let plan = WorkPlan::new(7, 3, ExecPolicy::Sync).unwrap();
        assert_eq!(plan.assignment, vec![0, 0, 0, 1, 1, 2, 2]);
        assert!(WorkPlan::with_assignment(vec![0, 3], 2, ExecPolicy::Sync).is_err());
        let a = WorkPlan::new(4, 8, ExecPolicy::AsyncIncumbent).unwrap();
        assert_eq!(a.split(), (4, 4));
        assert_eq!(a.resized(1).split(), (1, 1));
    }

    #[test]
    fn sum_is_bitwise_stable() {
        let v = vec![0.1; 10];
        let a = ordered_sum(&v);
        let plan = WorkPlan::new(10, 8, ExecPolicy::Sync).unwrap();
        let mapped: Vec<f64> = parallel_map::<_, _, String, _>(&plan, v.clone(), |_, x| Ok(x)).unwrap();
        assert_eq!(ordered_sum(&mapped).to_bits(), a.to_bits());
        let m = ordered_reduce(&[3.0, 7.0, 1.0], f64::NEG_INFINITY, f64::max);
        assert_eq!(m, 7.0);
    }

    proptest! {
        #[test]
        fn worker_count_does_not_change_results(vals in prop::collection::vec(-1e3f64..1e3, 0..40), w in 1usize..9) {
            let one = WorkPlan::new(vals.len(), 1, ExecPolicy::Sync).unwrap();
            let many = WorkPlan::new(vals.len(), w, ExecPolicy::Sync).unwrap();
            let f = |p: usize, x: f64| -> Result<f64, String> { Ok((x * 1.1 + p as f64).sin()) };
            let a = parallel_map(&one, vals.clone(), f).unwrap();
            let b = parallel_map(&many, vals, f).unwrap();
            prop_assert_eq!(ordered_sum(&a).to_bits(), ordered_sum(&b).to_bits());
            prop_assert_eq!(a, b);
        }
    }
}
