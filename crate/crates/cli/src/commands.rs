use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use battsite::lp::write_mps;
use battsite::opf::{
    build_extensive_form, build_period_lp, check_feasibility, solve_extensive_form, OpfError, PlanningSolution,
};
use battsite::ph::{run_ph_with, PHState, PhError, PhModel, PhStatus};
use serde::Serialize;
use serde_json::json;

use crate::config::{read_text, Overrides, RunConfig};
use crate::Failure;

fn write(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())).into())
}

fn out_dir(cfg: &RunConfig) -> anyhow::Result<&Path> {
    fs::create_dir_all(&cfg.out).map_err(|e| Failure::Io(format!("cannot create {}: {e}", cfg.out.display())))?;
    Ok(&cfg.out)
}

fn pretty<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("value serializes") + "\n"
}

fn opf_failure(e: OpfError) -> Failure {
    match e {
        OpfError::Guardrail { .. } => Failure::Guardrail(e.to_string()),
        OpfError::Solve(_) => Failure::Infeasible(e.to_string()),
        _ => Failure::Schema(e.to_string()),
    }
}

fn ph_failure(e: PhError) -> Failure {
    match e {
        PhError::Solver { .. } => Failure::Solver(e.to_string()),
        PhError::Opf(inner) => opf_failure(inner),
        _ => Failure::Schema(e.to_string()),
    }
}

fn write_solution(dir: &Path, sol: &PlanningSolution) -> anyhow::Result<()> {
    write(&dir.join("solution.json"), &sol.to_json())?;
    write(&dir.join("timeseries.csv"), &sol.timeseries_csv())
}

fn placement_map(sol: &PlanningSolution) -> serde_json::Map<String, serde_json::Value> {
    sol.candidate_buses
        .iter()
        .zip(&sol.placement)
        .map(|(b, x)| (b.clone(), json!(x)))
        .collect()
}

pub fn solve_ef(flags: &Overrides) -> anyhow::Result<u8> {
    let cfg = RunConfig::load(flags)?;
    let case = cfg.case()?;
    let r = solve_extensive_form(&case, &cfg.battery, &cfg.cost, &cfg.solver, cfg.ef_hour_cap).map_err(opf_failure)?;
    let dir = out_dir(&cfg)?;
    write_solution(dir, &r.solution)?;
    let summary = json!({
        "cost": r.solution.cost,
        "placement": placement_map(&r.solution),
        "hours": r.solution.hours(),
        "simplex_iterations": r.lp_solution.stats.iterations,
        "duality_gap": r.lp_solution.duality_gap(&r.subproblem.lp),
    });
    write(&dir.join("cost.json"), &pretty(&summary))?;
    println!("optimal cost {:.6} over {} hours; artifacts in {}", r.solution.cost.total, r.solution.hours(), dir.display());
    Ok(0)
}

pub fn solve_ph(flags: &Overrides) -> anyhow::Result<u8> {
    let cfg = RunConfig::load(flags)?;
    let case = cfg.case()?;
    let partition = cfg.partition(case.horizon())?;
    let model = PhModel::new(&case, &partition, &cfg.battery, &cfg.cost).map_err(ph_failure)?;
    let resume = match &cfg.resume {
        Some(p) => Some(PHState::from_json(&read_text(p)?).map_err(|e| Failure::Schema(e.to_string()))?),
        None => None,
    };
    let dir = out_dir(&cfg)?.to_path_buf();
    let open = |name: &str| -> anyhow::Result<BufWriter<fs::File>> {
        let p = dir.join(name);
        let f = fs::File::create(&p).map_err(|e| Failure::Io(format!("cannot write {}: {e}", p.display())))?;
        Ok(BufWriter::new(f))
    };
    let mut trace = open("trace.jsonl")?;
    let mut timing = open("timing.jsonl")?;
    if let Some(st) = &resume {
        for entry in &st.trace {
            writeln!(trace, "{}", serde_json::to_string(entry).expect("trace serializes"))
                .map_err(|e| Failure::Io(format!("cannot write trace: {e}")))?;
        }
    }
    let checkpoint = dir.join("checkpoint.json");
    let mut io_error: Option<std::io::Error> = None;

    let result = run_ph_with(&model, &cfg.ph, resume, &mut |entry, state| {
        let t = json!({
            "v": entry.v,
            "wall_ms": entry.wall_ms,
            "solve_ms": entry.solve_ms,
            "incumbent_ms": entry.incumbent_ms,
            "workers": cfg.ph.workers,
            "policy": cfg.ph.policy,
        });
        let r = writeln!(trace, "{}", serde_json::to_string(entry).expect("trace serializes"))
            .and_then(|_| writeln!(timing, "{t}"))
            .and_then(|_| trace.flush())
            .and_then(|_| timing.flush())
            .and_then(|_| fs::write(&checkpoint, state.to_json()));
        if let Err(e) = r {
            io_error.get_or_insert(e);
        }
    })
    .map_err(ph_failure)?;
    if let Some(e) = io_error {
        return Err(Failure::Io(format!("cannot write PH artifacts in {}: {e}", dir.display())).into());
    }

    if let Some(inc) = &result.incumbent {
        write_solution(&dir, &inc.solution)?;
    }
    let summary = json!({
        "status": result.status,
        "iterations": result.iterations,
        "periods": partition.len(),
        "period_hours": partition.lengths(),
        "LB": result.lb,
        "UB": result.ub,
        "gap": result.gap,
        "gap_abs": result.lb.zip(result.ub).map(|(l, u)| u - l),
        "residual": result.trace.last().map(|e| e.residual),
        "placement": result.incumbent.as_ref().map(|i| placement_map(&i.solution)),
        "cost": result.incumbent.as_ref().map(|i| i.solution.cost),
        "wall_ms": result.wall_ms,
    });
    write(&dir.join("result.json"), &pretty(&summary))?;
    println!(
        "{:?} after {} iterations: LB {} UB {} gap {}",
        result.status,
        result.iterations,
        result.lb.map_or("-".into(), |v| format!("{v:.6}")),
        result.ub.map_or("-".into(), |v| format!("{v:.6}")),
        result.gap.map_or("-".into(), |v| format!("{v:.3e}")),
    );
    Ok(match result.status {
        PhStatus::Converged | PhStatus::GapReached => 0,
        PhStatus::IterationLimit => 4,
    })
}

pub fn validate(flags: &Overrides, solution: &Path) -> anyhow::Result<u8> {
    let cfg = RunConfig::load(flags)?;
    let text = read_text(solution)?;
    let sol = PlanningSolution::from_json(&text).map_err(|e| Failure::Schema(format!("{}: {e}", solution.display())))?;
    let case = cfg.case()?;
    let report = check_feasibility(&sol, &case, &cfg.battery, &cfg.cost, cfg.ph.verify_tol)
        .map_err(|e| Failure::Schema(format!("{}: {e}", solution.display())))?;
    println!("{}", report.to_json());
    for v in &report.violations {
        eprintln!("{v}");
    }
    Ok(if report.is_empty() { 0 } else { 6 })
}

fn export_one(dir: &Path, stem: &str, lp: &battsite::lp::StandardFormLP, cost_offset: f64) -> anyhow::Result<PathBuf> {
    let out = write_mps(lp);
    let path = dir.join(format!("{stem}.mps"));
    write(&path, &out.text)?;
    let map = json!({
        "mps": path.file_name().map(|n| n.to_string_lossy().into_owned()),
        "cost_offset": cost_offset,
        "columns": out.col_map,
        "rows": out.row_map,
    });
    write(&dir.join(format!("{stem}.names.json")), &pretty(&map))?;
    Ok(path)
}

pub fn export_mps(flags: &Overrides, per_period: bool) -> anyhow::Result<u8> {
    let cfg = RunConfig::load(flags)?;
    let case = cfg.case()?;
    let dir = out_dir(&cfg)?;
    if per_period {
        let partition = cfg.partition(case.horizon())?;
        let slices = partition.slices(&case).map_err(opf_failure)?;
        for (s, slice) in slices.iter().enumerate() {
            let sub = build_period_lp(&case.network, slice, &cfg.battery, &cfg.cost).map_err(opf_failure)?;
            let path = export_one(dir, &format!("period_{s:03}"), &sub.lp, sub.cost_offset)?;
            println!("{}", path.display());
        }
    } else {
        let sub = build_extensive_form(&case, &cfg.battery, &cfg.cost, cfg.ef_hour_cap).map_err(opf_failure)?;
        let path = export_one(dir, "extensive_form", &sub.lp, sub.cost_offset)?;
        println!("{}", path.display());
    }
    Ok(0)
}

pub fn report(flags: &Overrides, solution: Option<&Path>) -> anyhow::Result<u8> {
    let cfg = RunConfig::load(flags)?;
    let path = solution.map_or_else(|| cfg.out.join("solution.json"), Path::to_path_buf);
    let sol = PlanningSolution::from_json(&read_text(&path)?)
        .map_err(|e| Failure::Schema(format!("{}: {e}", path.display())))?;
    let mut csv = String::from("hour,load_shed,discharge\n");
    let (mut shed, mut discharge) = (0.0, 0.0);
    for t in 0..sol.hours() {
        let s: f64 = sol.load_shed[t].iter().sum();
        let d: f64 = sol.discharge[t].iter().sum();
        shed += s;
        discharge += d;
        csv.push_str(&format!("{},{s},{d}\n", sol.start_hour + t));
    }
    let dir = out_dir(&cfg)?;
    write(&dir.join("report.csv"), &csv)?;
    let summary = json!({
        "hours": sol.hours(),
        "total_load_shed": shed,
        "total_discharge": discharge,
        "cost": sol.cost,
        "placement": placement_map(&sol),
    });
    println!("{}", pretty(&summary).trim_end());
    Ok(0)
}
