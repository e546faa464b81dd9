use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use battsite::lp::SolverOptions;
use battsite::network::{compute_off_sets, parse_network, DeenergizationSchedule, DemandSeries, RiskSeries};
use battsite::opf::{BatteryConfig, Case, CostConfig, DEFAULT_EF_HOUR_CAP};
use battsite::ph::{make_partition, partition_by_count, PHOptions, ScenarioPartition};
use serde::{Deserialize, Serialize};

use crate::Failure;

/// Run configuration. Relative paths resolve against the directory of the
/// config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub network: Option<PathBuf>,
    pub demand: Option<PathBuf>,
    /// Daily line risk. Without it every line stays energized.
    pub risk: Option<PathBuf>,
    pub threshold: f64,
    pub hours_per_day: usize,
    /// Defaults to the length of the demand series.
    pub horizon: Option<usize>,
    /// Target period length for PH. Ignored when `periods` is set.
    pub period_hours: usize,
    pub periods: Option<usize>,
    pub battery: BatteryConfig,
    pub cost: CostConfig,
    pub ph: PHOptions,
    /// Options for extensive-form solves.
    pub solver: SolverOptions,
    pub ef_hour_cap: usize,
    pub out: PathBuf,
    /// Checkpoint to resume PH from.
    pub resume: Option<PathBuf>,
    /// Reserved. Every solve path is deterministic.
    pub seed: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            network: None,
            demand: None,
            risk: None,
            threshold: 0.5,
            hours_per_day: 24,
            horizon: None,
            period_hours: 72,
            periods: None,
            battery: BatteryConfig::default(),
            cost: CostConfig::default(),
            ph: PHOptions::default(),
            solver: SolverOptions::default(),
            ef_hour_cap: DEFAULT_EF_HOUR_CAP,
            out: PathBuf::from("out"),
            resume: None,
            seed: None,
        }
    }
}

/// Flag values that take precedence over the file.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// JSON run configuration
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
    /// Number of PH periods (overrides --period-hours)
    #[arg(long, global = true)]
    pub periods: Option<usize>,
    #[arg(long, global = true)]
    pub period_hours: Option<usize>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true)]
    pub rho: Option<f64>,
    #[arg(long, global = true)]
    pub max_iters: Option<usize>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub fn read_text(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(|e| Failure::Io(format!("{e:#}")).into())
}

impl RunConfig {
    pub fn load(flags: &Overrides) -> anyhow::Result<RunConfig> {
        let mut cfg = match &flags.config {
            Some(path) => {
                let text = read_text(path)?;
                let mut cfg: RunConfig = serde_json::from_str(&text)
                    .map_err(|e| Failure::Schema(format!("{}: {e}", path.display())))?;
                let base = path.parent().unwrap_or(Path::new("."));
                for p in [&mut cfg.network, &mut cfg.demand, &mut cfg.risk, &mut cfg.resume].into_iter().flatten() {
                    *p = resolve(base, p);
                }
                cfg.out = resolve(base, &cfg.out);
                cfg
            }
            None => RunConfig::default(),
        };
        if let Some(v) = flags.threshold {
            cfg.threshold = v;
        }
        if let Some(v) = flags.periods {
            cfg.periods = Some(v);
        }
        if let Some(v) = flags.period_hours {
            cfg.period_hours = v;
        }
        if let Some(v) = flags.workers {
            cfg.ph.workers = v;
        }
        if let Some(v) = flags.rho {
            cfg.ph.rho = v;
        }
        if let Some(v) = flags.max_iters {
            cfg.ph.max_iters = v;
        }
        if let Some(v) = flags.tol {
            cfg.ph.tol = v;
        }
        if let Some(v) = &flags.out {
            cfg.out = v.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), Failure> {
        let schema = |m: String| Failure::Schema(m);
        if !(self.threshold >= 0.0) {
            return Err(schema("threshold must be non-negative".into()));
        }
        if self.hours_per_day == 0 || self.period_hours == 0 {
            return Err(schema("hours_per_day and period_hours must be positive".into()));
        }
        self.battery.validate().map_err(|e| schema(e.to_string()))?;
        self.cost.validate().map_err(|e| schema(e.to_string()))?;
        self.ph.validate().map_err(|e| schema(e.to_string()))?;
        self.solver.validate().map_err(|e| schema(e.to_string()))
    }

    /// Reads the network and series and builds the case.
    pub fn case(&self) -> anyhow::Result<Case> {
        let required = |p: &Option<PathBuf>, what: &str| {
            p.clone().ok_or_else(|| Failure::Schema(format!("config does not name a {what} file")))
        };
        let net_path = required(&self.network, "network")?;
        let demand_path = required(&self.demand, "demand")?;
        let net = parse_network(&read_text(&net_path)?).map_err(|e| Failure::Schema(format!("{}: {e}", net_path.display())))?;
        let demand = DemandSeries::from_csv(&demand_path.display().to_string(), &read_text(&demand_path)?)
            .map_err(|e| Failure::Schema(e.to_string()))?;
        let horizon = self.horizon.unwrap_or(demand.hours());
        let schedule = match &self.risk {
            None => DeenergizationSchedule::empty(self.hours_per_day),
            Some(path) => {
                let risk = RiskSeries::from_csv(&path.display().to_string(), &read_text(path)?)
                    .map_err(|e| Failure::Schema(e.to_string()))?;
                risk.check_lines(&net).map_err(|e| Failure::Schema(e.to_string()))?;
                if risk.days() * self.hours_per_day < horizon {
                    return Err(Failure::Schema(format!(
                        "{}: {} days of risk do not cover {horizon} hours",
                        path.display(),
                        risk.days()
                    ))
                    .into());
                }
                compute_off_sets(&risk, self.threshold, self.hours_per_day)
            }
        };
        Case::new(net, &demand, schedule, horizon).map_err(|e| Failure::Schema(e.to_string()).into())
    }

    pub fn partition(&self, horizon: usize) -> anyhow::Result<ScenarioPartition> {
        let p = match self.periods {
            Some(n) => partition_by_count(horizon, n),
            None => make_partition(horizon, self.period_hours),
        };
        p.map_err(|e| Failure::Schema(e.to_string()).into())
    }
}
