//! Writes the sample networks, series and run configs under `data/`.
//!
//! Usage: cargo run -p battsite-core --example sample_data -- data

use std::fs;
use std::path::Path;

use battsite::cases::{ieee14, ieee14_demand, ieee14_json, risk_on, three_bus, three_bus_demand, THREE_BUS_JSON};

fn config() -> String {
    r#"{
  "network": "network.json",
  "demand": "demand.csv",
  "risk": "risk.csv",
  "threshold": 0.5,
  "period_hours": 24,
  "ph": {"rho": 1000.0, "tol": 1e-5},
  "out": "out"
}
"#
    .to_string()
}

fn main() -> std::io::Result<()> {
    let root = std::env::args().nth(1).unwrap_or_else(|| "data".into());
    let root = Path::new(&root);

    let dir = root.join("three_bus");
    fs::create_dir_all(&dir)?;
    let net = three_bus();
    fs::write(dir.join("network.json"), format!("{}\n", THREE_BUS_JSON))?;
    fs::write(dir.join("demand.csv"), three_bus_demand(48).to_csv())?;
    fs::write(dir.join("risk.csv"), risk_on(&net, 2, &["l13"], 1..2, 0.9, 0.1).to_csv())?;
    fs::write(dir.join("config.json"), config())?;

    let dir = root.join("ieee14");
    fs::create_dir_all(&dir)?;
    let net = ieee14();
    fs::write(dir.join("network.json"), format!("{}\n", ieee14_json()))?;
    fs::write(dir.join("demand.csv"), ieee14_demand(96).to_csv())?;
    fs::write(dir.join("risk.csv"), risk_on(&net, 4, &["l9_14", "l13_14"], 1..3, 0.9, 0.1).to_csv())?;
    fs::write(dir.join("config.json"), config())?;
    Ok(())
}
