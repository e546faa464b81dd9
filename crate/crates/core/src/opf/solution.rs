use serde::{Deserialize, Serialize};

use super::OpfError;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub generation: f64,
    pub load_shed: f64,
    pub slack: f64,
    pub total: f64,
}

/// Full operating plan over a contiguous block of hours. Time series are
/// indexed `[hour][entity]` with entities in network order; battery series
/// follow `candidate_buses`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanningSolution {
    pub start_hour: usize,
    pub candidate_buses: Vec<String>,
    pub placement: Vec<f64>,
    /// Stored energy entering `start_hour`.
    pub initial_soc: Vec<f64>,
    pub generation: Vec<Vec<f64>>,
    pub slack: Vec<Vec<f64>>,
    pub angle: Vec<Vec<f64>>,
    pub load_shed: Vec<Vec<f64>>,
    pub flow: Vec<Vec<f64>>,
    pub charge: Vec<Vec<f64>>,
    pub discharge: Vec<Vec<f64>>,
    pub soc: Vec<Vec<f64>>,
    pub cost: CostBreakdown,
}

impl PlanningSolution {
    pub fn hours(&self) -> usize {
        self.generation.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, OpfError> {
        serde_json::from_str(text).map_err(|e| OpfError::Shape(e.to_string()))
    }

    /// Appends `next`, which must start where `self` ends and share its
    /// placement. Cost is summed.
    pub fn concat(mut self, next: PlanningSolution) -> Result<Self, OpfError> {
        if next.start_hour != self.start_hour + self.hours() {
            return Err(OpfError::Shape(format!(
                "block starting at hour {} does not follow hour {}",
                next.start_hour,
                self.start_hour + self.hours()
            )));
        }
        if next.candidate_buses != self.candidate_buses {
            return Err(OpfError::Shape("candidate sets differ".into()));
        }
        self.generation.extend(next.generation);
        self.slack.extend(next.slack);
        self.angle.extend(next.angle);
        self.load_shed.extend(next.load_shed);
        self.flow.extend(next.flow);
        self.charge.extend(next.charge);
        self.discharge.extend(next.discharge);
        self.soc.extend(next.soc);
        self.cost.generation += next.cost.generation;
        self.cost.load_shed += next.cost.load_shed;
        self.cost.slack += next.cost.slack;
        self.cost.total += next.cost.total;
        Ok(self)
    }

    /// Hourly CSV: total load shed, discharge and charge per hour, then
    /// per-candidate SOC columns.
    pub fn timeseries_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = ["hour", "load_shed", "discharge", "charge", "slack"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        header.extend(self.candidate_buses.iter().map(|b| format!("soc_{b}")));
        w.write_record(&header).expect("in-memory write");
        for t in 0..self.hours() {
            let mut rec = vec![
                (self.start_hour + t).to_string(),
                self.load_shed[t].iter().sum::<f64>().to_string(),
                self.discharge[t].iter().sum::<f64>().to_string(),
                self.charge[t].iter().sum::<f64>().to_string(),
                self.slack[t].iter().sum::<f64>().to_string(),
            ];
            rec.extend(self.soc[t].iter().map(|v| v.to_string()));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    /// Hours where some battery both charges and discharges above `tol`.
    pub fn simultaneous_charge_discharge(&self, tol: f64) -> Vec<(usize, String)> {
        let mut out = Vec::new();
        for t in 0..self.hours() {
            for (i, b) in self.candidate_buses.iter().enumerate() {
                if self.charge[t][i] > tol && self.discharge[t][i] > tol {
                    out.push((self.start_hour + t, b.clone()));
                }
            }
        }
        out
    }
}
