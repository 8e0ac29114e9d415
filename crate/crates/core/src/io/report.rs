//! Report emission: CSV tables, JSON-lines summaries and a human-readable table.
//! Machine formats print 17 significant digits and omit wall-clock times, so equal
//! inputs give byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Number, Value};

use crate::error::{Error, Result};
use crate::harness::{FitStatus, RowStatus, StudyReport, Trajectory};

use super::config::ReportFormat;

/// `x` with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}").to_ascii_lowercase()
    }
}

fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    serde_json::from_str::<Number>(&fmt17(x)).map(Value::Number).unwrap_or(Value::Null)
}

fn ensure_nonempty(report: &StudyReport) -> Result<()> {
    if report.rows.iter().any(|r| r.status == RowStatus::Ok) {
        Ok(())
    } else {
        Err(Error::Report("no successful runs".into()))
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Report(format!("csv: {e}"))
}

/// One row per epsilon: status, fit membership, the report columns and the log-log
/// coordinates entering the rate fit.
pub fn report_csv(report: &StudyReport) -> Result<String> {
    ensure_nonempty(report)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut head = vec!["epsilon".to_string(), "status".into(), "in_fit".into()];
    head.extend(report.columns.iter().cloned());
    head.extend(["log_epsilon".to_string(), "log_error".into()]);
    w.write_record(&head).map_err(csv_err)?;
    for r in &report.rows {
        let status = match &r.status {
            RowStatus::Ok => "ok",
            RowStatus::Failed(_) => "failed",
        };
        let mut rec = vec![fmt17(r.epsilon), status.to_string(), r.in_fit.to_string()];
        rec.extend(r.values.iter().map(|v| fmt17(*v)));
        let e = r.values.first().copied().unwrap_or(f64::NAN);
        rec.push(fmt17(r.epsilon.ln()));
        rec.push(if e > 0.0 { fmt17(e.ln()) } else { "nan".into() });
        w.write_record(&rec).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Report(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Report(e.to_string()))
}

fn fit_value(fit: &FitStatus) -> Value {
    match fit {
        FitStatus::Fitted(f) => json!({
            "type": "fit",
            "status": "fitted",
            "slope": num(f.slope),
            "intercept": num(f.intercept),
            "residual": num(f.residual),
        }),
        FitStatus::ExactZero => json!({"type": "fit", "status": "exact-zero"}),
        FitStatus::Impossible(m) => json!({"type": "fit", "status": "impossible", "message": m}),
    }
}

pub fn report_json_lines(report: &StudyReport) -> Result<String> {
    ensure_nonempty(report)?;
    let mut lines = vec![json!({
        "type": "study",
        "kind": report.kind.name(),
        "columns": report.columns,
    })];
    for r in &report.rows {
        let mut values = Map::new();
        for (c, v) in report.columns.iter().zip(&r.values) {
            values.insert(c.clone(), num(*v));
        }
        let mut row = json!({
            "type": "row",
            "epsilon": num(r.epsilon),
            "status": if r.status == RowStatus::Ok { "ok" } else { "failed" },
            "in_fit": r.in_fit,
            "values": values,
        });
        if let RowStatus::Failed(m) = &r.status {
            row["message"] = Value::String(m.clone());
        }
        lines.push(row);
    }
    lines.push(fit_value(&report.fit));
    for (eps, gap) in &report.cross_check {
        lines.push(json!({"type": "cross_check", "epsilon": num(*eps), "gap_to_finest": num(*gap)}));
    }
    for w in &report.warnings {
        lines.push(json!({"type": "warning", "message": w}));
    }
    Ok(lines.iter().map(|l| l.to_string() + "\n").collect())
}

pub fn report_human(report: &StudyReport) -> Result<String> {
    ensure_nonempty(report)?;
    let mut s = format!("{} limit study\n", report.kind.name());
    s += &format!("{:>12} {:>8} {:>6}", "epsilon", "status", "fit");
    for c in &report.columns {
        s += &format!(" {c:>18}");
    }
    s += &format!(" {:>9}\n", "seconds");
    for (i, r) in report.rows.iter().enumerate() {
        let status = if r.status == RowStatus::Ok { "ok" } else { "FAILED" };
        s += &format!("{:>12.4e} {:>8} {:>6}", r.epsilon, status, if r.in_fit { "yes" } else { "no" });
        for v in &r.values {
            s += &format!(" {v:>18.6e}");
        }
        let secs = report.runtimes.get(i + 1).copied().unwrap_or(0.0);
        s += &format!(" {secs:>9.2}\n");
    }
    match &report.fit {
        FitStatus::Fitted(f) => s += &format!("fitted slope {:.4} (max log deviation {:.2e})\n", f.slope, f.residual),
        FitStatus::ExactZero => s += "all errors are exactly zero: no rate (exact-zero)\n",
        FitStatus::Impossible(m) => s += &format!("no fit: {m}\n"),
    }
    for (eps, gap) in &report.cross_check {
        s += &format!("cross-check eps {eps:.4e}: gap to finest {gap:.6e}\n");
    }
    for w in &report.warnings {
        s += &format!("warning: {w}\n");
    }
    if let Some(r) = report.runtimes.first() {
        s += &format!("reference run {r:.2} s\n");
    }
    Ok(s)
}

/// Writes the report in each format under `dir`, as `<kind>.csv`, `<kind>.jsonl`
/// and `<kind>.txt`.
pub fn emit_report(report: &StudyReport, formats: &[ReportFormat], dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_nonempty(report)?;
    fs::create_dir_all(dir)?;
    let kind = report.kind.name();
    let mut paths = Vec::new();
    for f in formats {
        let (ext, body) = match f {
            ReportFormat::Csv => ("csv", report_csv(report)?),
            ReportFormat::JsonLines => ("jsonl", report_json_lines(report)?),
            ReportFormat::Human => ("txt", report_human(report)?),
        };
        let p = dir.join(format!("{kind}.{ext}"));
        fs::write(&p, body)?;
        paths.push(p);
    }
    Ok(paths)
}

/// Energy records of a run as CSV: `t, energy, dissipation, budget_residual`.
pub fn trajectory_csv(traj: &Trajectory) -> Result<String> {
    let budget = crate::harness::energy_budget(&traj.energy);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "energy", "dissipation", "budget_residual"]).map_err(csv_err)?;
    for (i, r) in traj.energy.iter().enumerate() {
        let b = if i == 0 { f64::NAN } else { budget[i - 1] };
        w.write_record([fmt17(r.t), fmt17(r.energy), fmt17(r.dissipation), fmt17(b)])
            .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Report(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Report(e.to_string()))
}

/// Sampled `L^q` norms of the velocity as CSV, one column per exponent.
pub fn samples_csv(traj: &Trajectory, lq: &[f64]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut head = vec!["t".to_string()];
    head.extend(lq.iter().map(|q| format!("l{q}")));
    w.write_record(&head).map_err(csv_err)?;
    for s in &traj.samples {
        let mut rec = vec![fmt17(s.t)];
        rec.extend(s.lq.iter().map(|v| fmt17(*v)));
        w.write_record(&rec).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Report(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Report(e.to_string()))
}

/// One-line JSON summary of a run (no timings).
pub fn trajectory_summary(traj: &Trajectory, system: &str) -> String {
    let budget = crate::harness::energy_budget(&traj.energy);
    let last = traj.energy.last();
    json!({
        "type": "run",
        "system": system,
        "steps": traj.steps,
        "t_final": num(traj.final_state.time()),
        "energy_final": num(last.map_or(f64::NAN, |r| r.energy)),
        "max_divergence": num(traj.max_divergence),
        "max_symmetry_drift": num(traj.max_symmetry_drift),
        "max_budget_residual": num(budget.iter().copied().fold(0.0, f64::max)),
    })
    .to_string()
        + "\n"
}
