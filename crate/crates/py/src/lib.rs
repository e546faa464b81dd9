//! Python module `battsite`.

use std::collections::BTreeMap;

use battsite::cases;
use battsite::lp::{read_mps, solve_lp, write_mps, SolverOptions, StandardFormLP};
use battsite::network::{compute_off_sets, parse_network, DeenergizationSchedule, DemandSeries, RiskSeries};
use battsite::opf::{
    build_extensive_form, check_feasibility, solve_extensive_form, BatteryConfig, Case, CostConfig, PlanningSolution,
    DEFAULT_EF_HOUR_CAP,
};
use battsite::ph::{make_partition as partition, partition_by_count, run_ph, PHOptions, PHResult, PhStatus};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::de::DeserializeOwned;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Parses an optional JSON object, falling back to the type's default.
fn from_json<T: DeserializeOwned + Default>(text: Option<&str>) -> PyResult<T> {
    text.map_or_else(|| Ok(T::default()), |t| serde_json::from_str(t).map_err(value_err))
}

/// A network with its demand and line outage schedule.
#[pyclass(name = "Case", frozen, module = "battsite")]
struct PyCase {
    inner: Case,
}

#[pymethods]
impl PyCase {
    /// Builds a case from the network JSON and CSV texts.
    #[new]
    #[pyo3(signature = (network, demand, risk=None, threshold=0.5, hours_per_day=24, horizon=None))]
    fn new(
        network: &str,
        demand: &str,
        risk: Option<&str>,
        threshold: f64,
        hours_per_day: usize,
        horizon: Option<usize>,
    ) -> PyResult<Self> {
        let net = parse_network(network).map_err(value_err)?;
        let demand = DemandSeries::from_csv("demand", demand).map_err(value_err)?;
        let schedule = match risk {
            Some(text) => {
                let r = RiskSeries::from_csv("risk", text).map_err(value_err)?;
                r.check_lines(&net).map_err(value_err)?;
                compute_off_sets(&r, threshold, hours_per_day)
            }
            None => DeenergizationSchedule::empty(hours_per_day),
        };
        let h = horizon.unwrap_or(demand.hours());
        let inner = Case::new(net, &demand, schedule, h).map_err(value_err)?;
        Ok(PyCase { inner })
    }

    /// Built-in 3-bus system with a daily demand profile.
    #[staticmethod]
    fn three_bus(hours: usize) -> PyResult<Self> {
        let inner = Case::new(cases::three_bus(), &cases::three_bus_demand(hours), DeenergizationSchedule::empty(24), hours)
            .map_err(value_err)?;
        Ok(PyCase { inner })
    }

    /// Built-in 14-bus system; `off_lines` are de-energized on `off_days`.
    #[staticmethod]
    #[pyo3(signature = (hours, off_lines=Vec::new(), off_days=(0, 0)))]
    fn ieee14(hours: usize, off_lines: Vec<String>, off_days: (usize, usize)) -> PyResult<Self> {
        let net = cases::ieee14();
        let ids: Vec<&str> = off_lines.iter().map(String::as_str).collect();
        let risk = cases::risk_on(&net, hours.div_ceil(24), &ids, off_days.0..off_days.1, 1.0, 0.0);
        let inner = Case::new(net, &cases::ieee14_demand(hours), compute_off_sets(&risk, 0.5, 24), hours)
            .map_err(value_err)?;
        Ok(PyCase { inner })
    }

    #[getter]
    fn horizon(&self) -> usize {
        self.inner.horizon()
    }

    #[getter]
    fn bus_ids(&self) -> Vec<String> {
        self.inner.network.buses.iter().map(|b| b.id.clone()).collect()
    }

    #[getter]
    fn candidate_ids(&self) -> Vec<String> {
        self.inner.network.candidates.iter().map(|&n| self.inner.network.buses[n].id.clone()).collect()
    }

    fn truncated(&self, hours: usize) -> PyCase {
        PyCase {
            inner: self.inner.truncated(hours),
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "Case(buses={}, lines={}, hours={})",
            self.inner.network.num_buses(),
            self.inner.network.num_lines(),
            self.inner.horizon()
        )
    }
}

/// Placement and hourly operation over a horizon.
#[pyclass(name = "Solution", frozen, module = "battsite")]
struct PySolution {
    inner: PlanningSolution,
}

#[pymethods]
impl PySolution {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PySolution {
            inner: PlanningSolution::from_json(text).map_err(value_err)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn timeseries_csv(&self) -> String {
        self.inner.timeseries_csv()
    }

    #[getter]
    fn total_cost(&self) -> f64 {
        self.inner.cost.total
    }

    #[getter]
    fn cost(&self) -> BTreeMap<&'static str, f64> {
        let c = &self.inner.cost;
        BTreeMap::from([
            ("generation", c.generation),
            ("load_shed", c.load_shed),
            ("slack", c.slack),
            ("total", c.total),
        ])
    }

    #[getter]
    fn placement(&self) -> BTreeMap<String, f64> {
        self.inner.candidate_buses.iter().cloned().zip(self.inner.placement.iter().copied()).collect()
    }

    #[getter]
    fn hours(&self) -> usize {
        self.inner.hours()
    }

    #[getter]
    fn load_shed(&self) -> Vec<Vec<f64>> {
        self.inner.load_shed.clone()
    }

    #[getter]
    fn flow(&self) -> Vec<Vec<f64>> {
        self.inner.flow.clone()
    }

    #[getter]
    fn charge(&self) -> Vec<Vec<f64>> {
        self.inner.charge.clone()
    }

    #[getter]
    fn discharge(&self) -> Vec<Vec<f64>> {
        self.inner.discharge.clone()
    }

    #[getter]
    fn soc(&self) -> Vec<Vec<f64>> {
        self.inner.soc.clone()
    }

    /// Violated constraints as readable strings; empty when feasible.
    #[pyo3(signature = (case, battery=None, cost=None, tol=1e-6))]
    fn validate(&self, case: &PyCase, battery: Option<&str>, cost: Option<&str>, tol: f64) -> PyResult<Vec<String>> {
        let b: BatteryConfig = from_json(battery)?;
        let c: CostConfig = from_json(cost)?;
        let report = check_feasibility(&self.inner, &case.inner, &b, &c, tol).map_err(value_err)?;
        Ok(report.violations.iter().map(ToString::to_string).collect())
    }
}

/// Outcome of a progressive hedging run.
#[pyclass(name = "PHResult", frozen, module = "battsite")]
struct PyPHResult {
    inner: PHResult,
}

#[pymethods]
impl PyPHResult {
    #[getter]
    fn status(&self) -> &'static str {
        match self.inner.status {
            PhStatus::Converged => "converged",
            PhStatus::GapReached => "gap-reached",
            PhStatus::IterationLimit => "iteration-limit",
        }
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }

    #[getter]
    fn lb(&self) -> Option<f64> {
        self.inner.lb
    }

    #[getter]
    fn ub(&self) -> Option<f64> {
        self.inner.ub
    }

    #[getter]
    fn gap(&self) -> Option<f64> {
        self.inner.gap
    }

    /// Trace entries, one JSON object per iteration.
    #[getter]
    fn trace(&self) -> Vec<String> {
        self.inner.trace.iter().map(|e| serde_json::to_string(e).expect("trace serializes")).collect()
    }

    #[getter]
    fn incumbent(&self) -> Option<PySolution> {
        self.inner.incumbent.as_ref().map(|i| PySolution {
            inner: i.solution.clone(),
        })
    }
}

/// A linear program in the solver's standard form.
#[pyclass(name = "LP", frozen, module = "battsite")]
struct PyLP {
    inner: StandardFormLP,
}

#[pymethods]
impl PyLP {
    #[staticmethod]
    fn from_mps(text: &str) -> PyResult<Self> {
        Ok(PyLP {
            inner: read_mps(text).map_err(value_err)?,
        })
    }

    fn to_mps(&self) -> String {
        write_mps(&self.inner).text
    }

    #[getter]
    fn num_cols(&self) -> usize {
        self.inner.num_cols()
    }

    #[getter]
    fn num_rows(&self) -> usize {
        self.inner.num_rows()
    }

    /// Returns `(status, objective, x)`.
    fn solve(&self, py: Python<'_>) -> (String, f64, Vec<f64>) {
        let sol = py.detach(|| solve_lp(&self.inner, &SolverOptions::default()));
        (format!("{:?}", sol.status).to_lowercase(), sol.objective, sol.x)
    }
}

/// Solves the full-horizon LP.
#[pyfunction]
#[pyo3(signature = (case, battery=None, cost=None, hour_cap=DEFAULT_EF_HOUR_CAP))]
fn solve_ef(py: Python<'_>, case: &PyCase, battery: Option<&str>, cost: Option<&str>, hour_cap: usize) -> PyResult<PySolution> {
    let b: BatteryConfig = from_json(battery)?;
    let c: CostConfig = from_json(cost)?;
    let r = py
        .detach(|| solve_extensive_form(&case.inner, &b, &c, &SolverOptions::default(), hour_cap))
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(PySolution { inner: r.solution })
}

/// The extensive-form LP, for export or inspection.
#[pyfunction]
#[pyo3(signature = (case, battery=None, cost=None))]
fn extensive_form_lp(case: &PyCase, battery: Option<&str>, cost: Option<&str>) -> PyResult<PyLP> {
    let b: BatteryConfig = from_json(battery)?;
    let c: CostConfig = from_json(cost)?;
    let sub = build_extensive_form(&case.inner, &b, &c, usize::MAX).map_err(value_err)?;
    Ok(PyLP { inner: sub.lp })
}

/// Progressive hedging over periods of `period_hours` (or exactly
/// `periods` periods). `options` is a JSON object of PH settings.
#[pyfunction]
#[pyo3(signature = (case, period_hours=72, periods=None, options=None, battery=None, cost=None))]
fn solve_ph(
    py: Python<'_>,
    case: &PyCase,
    period_hours: usize,
    periods: Option<usize>,
    options: Option<&str>,
    battery: Option<&str>,
    cost: Option<&str>,
) -> PyResult<PyPHResult> {
    let opts: PHOptions = from_json(options)?;
    let b: BatteryConfig = from_json(battery)?;
    let c: CostConfig = from_json(cost)?;
    let h = case.inner.horizon();
    let part = match periods {
        Some(n) => partition_by_count(h, n),
        None => partition(h, period_hours),
    }
    .map_err(value_err)?;
    let inner = py
        .detach(|| run_ph(&case.inner, &part, &b, &c, &opts))
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(PyPHResult { inner })
}

/// Period lengths for a horizon split into roughly `target_hours` blocks.
#[pyfunction]
fn make_partition(horizon: usize, target_hours: usize) -> PyResult<Vec<usize>> {
    Ok(partition(horizon, target_hours).map_err(value_err)?.lengths())
}

#[pymodule]
#[pyo3(name = "battsite")]
fn battsite_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCase>()?;
    m.add_class::<PySolution>()?;
    m.add_class::<PyPHResult>()?;
    m.add_class::<PyLP>()?;
    m.add_function(wrap_pyfunction!(solve_ef, m)?)?;
    m.add_function(wrap_pyfunction!(solve_ph, m)?)?;
    m.add_function(wrap_pyfunction!(extensive_form_lp, m)?)?;
    m.add_function(wrap_pyfunction!(make_partition, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_options_default_when_absent() {
        let b: BatteryConfig = from_json(None).unwrap();
        assert_eq!(b, BatteryConfig::default());
        let o: PHOptions = from_json(Some(r#"{"rho": 5.0}"#)).unwrap();
        assert_eq!(o.rho, 5.0);
        assert_eq!(o.max_iters, PHOptions::default().max_iters);
    }
}
