use std::collections::HashMap;

use super::{Network, NetworkError};

/// Entity-by-period table: one CSV row per entity, first column its id.
#[derive(Debug, Clone, PartialEq)]
struct Table {
    ids: Vec<String>,
    values: Vec<Vec<f64>>,
    index: HashMap<String, usize>,
}

impl Table {
    fn from_rows(file: &str, rows: Vec<(String, Vec<f64>)>) -> Result<Self, NetworkError> {
        let width = rows.first().map_or(0, |r| r.1.len());
        let mut t = Table {
            ids: Vec::with_capacity(rows.len()),
            values: Vec::with_capacity(rows.len()),
            index: HashMap::new(),
        };
        for (k, (id, vals)) in rows.into_iter().enumerate() {
            let line = k + 2;
            let err = |reason: String| NetworkError::Csv {
                file: file.to_string(),
                line,
                reason,
            };
            if vals.len() != width {
                return Err(err(format!("expected {width} values, found {}", vals.len())));
            }
            if let Some(v) = vals.iter().find(|v| !v.is_finite() || **v < 0.0) {
                return Err(err(format!("value {v} for '{id}' must be finite and non-negative")));
            }
            if t.index.insert(id.clone(), t.ids.len()).is_some() {
                return Err(err(format!("duplicate id '{id}'")));
            }
            t.ids.push(id);
            t.values.push(vals);
        }
        Ok(t)
    }

    fn parse(file: &str, text: &str) -> Result<Self, NetworkError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header_len = rdr
            .headers()
            .map_err(|e| NetworkError::Csv {
                file: file.to_string(),
                line: 1,
                reason: e.to_string(),
            })?
            .len();
        if header_len == 0 {
            return Err(NetworkError::Csv {
                file: file.to_string(),
                line: 1,
                reason: "missing header row".into(),
            });
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| NetworkError::Csv {
                file: file.to_string(),
                line: e.position().map_or(0, |p| p.line() as usize),
                reason: e.to_string(),
            })?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            let mut fields = rec.iter();
            let id = fields.next().unwrap_or("").to_string();
            if id.is_empty() {
                return Err(NetworkError::Csv {
                    file: file.to_string(),
                    line,
                    reason: "empty id".into(),
                });
            }
            let vals = fields
                .map(|f| {
                    f.parse::<f64>().map_err(|_| NetworkError::Csv {
                        file: file.to_string(),
                        line,
                        reason: format!("invalid number '{f}'"),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            if vals.len() + 1 != header_len {
                return Err(NetworkError::Csv {
                    file: file.to_string(),
                    line,
                    reason: format!("expected {} values, found {}", header_len - 1, vals.len()),
                });
            }
            rows.push((id, vals));
        }
        Self::from_rows(file, rows)
    }

    fn width(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    fn to_csv(&self, id_header: &str, prefix: &str) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![id_header.to_string()];
        header.extend((0..self.width()).map(|k| format!("{prefix}{k}")));
        w.write_record(&header).expect("in-memory write");
        for (id, vals) in self.ids.iter().zip(&self.values) {
            let mut rec = vec![id.clone()];
            rec.extend(vals.iter().map(|v| format!("{v}")));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }
}

/// Hourly demand in p.u., keyed by the buses' `demand_ref`.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandSeries {
    table: Table,
}

impl DemandSeries {
    pub fn from_csv(file: &str, text: &str) -> Result<Self, NetworkError> {
        Ok(DemandSeries {
            table: Table::parse(file, text)?,
        })
    }

    pub fn from_rows(rows: Vec<(String, Vec<f64>)>) -> Result<Self, NetworkError> {
        Ok(DemandSeries {
            table: Table::from_rows("demand", rows)?,
        })
    }

    pub fn hours(&self) -> usize {
        self.table.width()
    }

    pub fn ids(&self) -> &[String] {
        &self.table.ids
    }

    pub fn row(&self, id: &str) -> Option<&[f64]> {
        self.table.index.get(id).map(|&k| self.table.values[k].as_slice())
    }

    pub fn to_csv(&self) -> String {
        self.table.to_csv("id", "h")
    }

    /// Bus-by-hour demand matrix for `net`, truncated to `horizon` hours.
    pub fn bus_matrix(&self, net: &Network, horizon: usize) -> Result<Vec<Vec<f64>>, NetworkError> {
        if horizon > self.hours() {
            return Err(NetworkError::Csv {
                file: "demand".into(),
                line: 1,
                reason: format!("horizon of {horizon} hours exceeds the {} hours of demand data", self.hours()),
            });
        }
        net.buses
            .iter()
            .map(|b| match &b.demand_ref {
                None => Ok(vec![0.0; horizon]),
                Some(r) => self
                    .row(r)
                    .map(|v| v[..horizon].to_vec())
                    .ok_or_else(|| NetworkError::MissingSeries {
                        kind: "demand_ref",
                        id: r.clone(),
                    }),
            })
            .collect()
    }
}

/// Daily unitless wildfire risk per line.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskSeries {
    table: Table,
}

impl RiskSeries {
    pub fn from_csv(file: &str, text: &str) -> Result<Self, NetworkError> {
        Ok(RiskSeries {
            table: Table::parse(file, text)?,
        })
    }

    pub fn from_rows(rows: Vec<(String, Vec<f64>)>) -> Result<Self, NetworkError> {
        Ok(RiskSeries {
            table: Table::from_rows("risk", rows)?,
        })
    }

    pub fn days(&self) -> usize {
        self.table.width()
    }

    pub fn line_ids(&self) -> &[String] {
        &self.table.ids
    }

    pub fn risk(&self, line: &str, day: usize) -> Option<f64> {
        self.table
            .index
            .get(line)
            .and_then(|&k| self.table.values[k].get(day).copied())
    }

    pub fn to_csv(&self) -> String {
        self.table.to_csv("line", "d")
    }

    /// Every network line must have a row and every row must be a line.
    pub fn check_lines(&self, net: &Network) -> Result<(), NetworkError> {
        for l in &net.lines {
            if !self.table.index.contains_key(&l.id) {
                return Err(NetworkError::MissingSeries {
                    kind: "line",
                    id: l.id.clone(),
                });
            }
        }
        for id in &self.table.ids {
            if net.line_index(id).is_none() {
                return Err(NetworkError::UnknownLine(id.clone()));
            }
        }
        Ok(())
    }

    /// Pads (or truncates) every row to `days` columns, filling with `fill`.
    pub fn with_days(&self, days: usize, fill: f64) -> RiskSeries {
        let mut t = self.table.clone();
        for row in &mut t.values {
            row.resize(days, fill);
        }
        RiskSeries { table: t }
    }

    /// Zero risk for every line of `net` over `days` days.
    pub fn zeros(net: &Network, days: usize) -> RiskSeries {
        let rows = net.lines.iter().map(|l| (l.id.clone(), vec![0.0; days])).collect();
        RiskSeries::from_rows(rows).expect("zero table is valid")
    }
}
