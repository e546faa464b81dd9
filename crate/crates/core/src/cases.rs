//! Small synthetic instances for tests, examples and sample data.

use crate::network::{parse_network, DemandSeries, Network, RiskSeries};

pub const THREE_BUS_JSON: &str = r#"{
  "buses": [
    {"id": "b1", "demand_ref": "b1"},
    {"id": "b2", "demand_ref": "b2"},
    {"id": "b3", "demand_ref": "b3"}
  ],
  "lines": [
    {"id": "l12", "from_bus": "b1", "to_bus": "b2", "susceptance": -10.0, "flow_limit": 1.0, "angle_diff_min": -0.5, "angle_diff_max": 0.5},
    {"id": "l23", "from_bus": "b2", "to_bus": "b3", "susceptance": -10.0, "flow_limit": 1.0, "angle_diff_min": -0.5, "angle_diff_max": 0.5},
    {"id": "l13", "from_bus": "b1", "to_bus": "b3", "susceptance": -10.0, "flow_limit": 1.0, "angle_diff_min": -0.5, "angle_diff_max": 0.5}
  ],
  "generators": [
    {"id": "g1", "bus": "b1", "g_min": 0.0, "g_max": 3.0, "cost_coeffs": [0.0, 1000.0]},
    {"id": "g2", "bus": "b2", "g_min": 0.0, "g_max": 1.0, "cost_coeffs": [0.0, 3000.0]}
  ],
  "reference_bus": "b1",
  "battery_candidates": ["b2", "b3"]
}"#;

/// Branch reactances of the standard 14-bus test system.
const IEEE14_LINES: [(usize, usize, f64, f64); 20] = [
    (1, 2, 0.05917, 1.6),
    (1, 5, 0.22304, 0.8),
    (2, 3, 0.19797, 0.45),
    (2, 4, 0.17632, 0.6),
    (2, 5, 0.17388, 0.6),
    (3, 4, 0.17103, 0.3),
    (4, 5, 0.04211, 0.8),
    (4, 7, 0.20912, 0.5),
    (4, 9, 0.55618, 0.3),
    (5, 6, 0.25202, 0.6),
    (6, 11, 0.19890, 0.3),
    (6, 12, 0.25581, 0.3),
    (6, 13, 0.13027, 0.4),
    (7, 8, 0.17615, 0.8),
    (7, 9, 0.11001, 0.6),
    (9, 10, 0.08450, 0.3),
    (9, 14, 0.27038, 0.3),
    (10, 11, 0.19207, 0.3),
    (12, 13, 0.19988, 0.3),
    (13, 14, 0.34802, 0.3),
];

/// Peak loads in p.u. on a 100 MVA base.
const IEEE14_LOADS: [(usize, f64); 11] = [
    (2, 0.217),
    (3, 0.942),
    (4, 0.478),
    (5, 0.076),
    (6, 0.112),
    (9, 0.295),
    (10, 0.090),
    (11, 0.035),
    (12, 0.061),
    (13, 0.135),
    (14, 0.149),
];

const IEEE14_GENS: [(usize, f64, f64); 5] = [(1, 3.32, 2000.0), (2, 1.4, 3000.0), (3, 0.2, 6000.0), (6, 1.0, 4000.0), (8, 1.0, 3500.0)];

pub fn three_bus() -> Network {
    parse_network(THREE_BUS_JSON).expect("built-in network is valid")
}

/// Network document for a 14-bus, 20-line system with the standard
/// topology and reactances, tightened line limits and affine costs.
pub fn ieee14_json() -> String {
    let buses: Vec<String> = (1..=14)
        .map(|n| {
            if IEEE14_LOADS.iter().any(|(b, _)| *b == n) {
                format!(r#"{{"id": "b{n}", "demand_ref": "b{n}"}}"#)
            } else {
                format!(r#"{{"id": "b{n}"}}"#)
            }
        })
        .collect();
    let lines: Vec<String> = IEEE14_LINES
        .iter()
        .map(|(f, t, x, lim)| {
            format!(
                r#"{{"id": "l{f}_{t}", "from_bus": "b{f}", "to_bus": "b{t}", "susceptance": {}, "flow_limit": {lim}, "angle_diff_min": -0.5, "angle_diff_max": 0.5}}"#,
                -1.0 / x
            )
        })
        .collect();
    let gens: Vec<String> = IEEE14_GENS
        .iter()
        .map(|(b, cap, c1)| {
            format!(r#"{{"id": "g{b}", "bus": "b{b}", "g_min": 0.0, "g_max": {cap}, "cost_coeffs": [0.0, {c1}]}}"#)
        })
        .collect();
    format!(
        "{{\n  \"buses\": [\n    {}\n  ],\n  \"lines\": [\n    {}\n  ],\n  \"generators\": [\n    {}\n  ],\n  \"reference_bus\": \"b1\"\n}}\n",
        buses.join(",\n    "),
        lines.join(",\n    "),
        gens.join(",\n    ")
    )
}

pub fn ieee14() -> Network {
    parse_network(&ieee14_json()).expect("built-in network is valid")
}

/// Daily load shape in `[0.5, 1.0]`, peaking at hour 18.
pub fn daily_shape(hour: usize) -> f64 {
    let phase = 2.0 * std::f64::consts::PI * ((hour % 24) as f64 - 18.0) / 24.0;
    0.75 + 0.25 * phase.cos()
}

/// Demand rows `peak × daily_shape(t)` for the given ids.
pub fn shaped_demand(peaks: &[(&str, f64)], hours: usize) -> DemandSeries {
    let rows = peaks
        .iter()
        .map(|(id, p)| (id.to_string(), (0..hours).map(|t| p * daily_shape(t)).collect()))
        .collect();
    DemandSeries::from_rows(rows).expect("shaped demand is valid")
}

pub fn three_bus_demand(hours: usize) -> DemandSeries {
    shaped_demand(&[("b1", 0.3), ("b2", 0.9), ("b3", 2.2)], hours)
}

pub fn ieee14_demand(hours: usize) -> DemandSeries {
    let peaks: Vec<(String, f64)> = IEEE14_LOADS.iter().map(|(b, p)| (format!("b{b}"), *p)).collect();
    let refs: Vec<(&str, f64)> = peaks.iter().map(|(id, p)| (id.as_str(), *p)).collect();
    shaped_demand(&refs, hours)
}

/// Risk `high` on `lines` for `active_days`, `low` everywhere else.
pub fn risk_on(net: &Network, days: usize, lines: &[&str], active_days: std::ops::Range<usize>, high: f64, low: f64) -> RiskSeries {
    let rows = net
        .lines
        .iter()
        .map(|l| {
            let hot = lines.contains(&l.id.as_str());
            let v = (0..days)
                .map(|d| if hot && active_days.contains(&d) { high } else { low })
                .collect();
            (l.id.clone(), v)
        })
        .collect();
    RiskSeries::from_rows(rows).expect("risk values are valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn built_in_networks_parse() {
        let n3 = three_bus();
        assert_eq!(n3.candidates, vec![1, 2]);
        let n14 = ieee14();
        assert_eq!((n14.num_buses(), n14.num_lines(), n14.num_generators()), (14, 20, 5));
        assert_eq!(n14.candidates.len(), 14);
        assert!(n14.connectivity_warning().is_none());
    }

    #[test]
    fn demand_covers_every_load_bus() {
        let d = ieee14_demand(48);
        let net = ieee14();
        let m = d.bus_matrix(&net, 48).unwrap();
        assert!((m[2][18] - 0.942).abs() < 1e-12);
        assert_eq!(m[0], vec![0.0; 48]);
        assert!(m.iter().flatten().all(|v| *v >= 0.0));
    }
}
