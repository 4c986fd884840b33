//! Long-format CSV for experiment reports: one line per (scenario, metric).

use std::path::Path;

use super::IoError;
use crate::experiments::{ExperimentReport, Scenario};

pub const HEADER: [&str; 13] = [
    "experiment",
    "scenario",
    "model",
    "access_mode",
    "budget",
    "drone_preset",
    "tc",
    "sc",
    "demand",
    "stage",
    "metric",
    "unit",
    "value",
];

fn num(v: f64) -> String {
    format!("{v:.6}")
}

fn scenario_fields(s: Option<&Scenario>) -> [String; 8] {
    match s {
        Some(s) => [
            s.model.to_string(),
            s.access_mode.to_string(),
            num(s.budget),
            s.drone_preset.clone(),
            num(s.tc_multiplier),
            num(s.sc_multiplier),
            num(s.demand_multiplier),
            s.stage.map(|t| t.to_string()).unwrap_or_default(),
        ],
        None => Default::default(),
    }
}

/// Renders `report` as RFC 4180 CSV with a header line.
pub fn report_to_csv(report: &ExperimentReport) -> Result<String, IoError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    w.write_record(HEADER)?;
    let mut line = |key: &str, s: Option<&Scenario>, metric: &str, unit: &str, value: f64| -> Result<(), csv::Error> {
        let mut rec = vec![report.experiment.clone(), key.to_string()];
        rec.extend(scenario_fields(s));
        rec.extend([metric.to_string(), unit.to_string(), num(value)]);
        w.write_record(&rec)
    };
    for row in &report.rows {
        let s = &row.scenario;
        let o = &row.outcome;
        let k = s.key.as_str();
        line(k, Some(s), "objective", "", o.objective)?;
        line(k, Some(s), "gap", "", o.gap)?;
        line(k, Some(s), "sr", "total", o.sr_community)?;
        for (region, v) in &o.sr_community_by_region {
            line(k, Some(s), "sr", region, *v)?;
        }
        line(k, Some(s), "sr_clinic", "total", o.sr_clinic)?;
        for (region, v) in &o.sr_clinic_by_region {
            line(k, Some(s), "sr_clinic", region, *v)?;
        }
        line(k, Some(s), "fic", "total", o.fic)?;
        line(k, Some(s), "drones", "", o.drones as f64)?;
        line(k, Some(s), "hubs", &o.hubs.join(" "), o.hubs.len() as f64)?;
    }
    for e in &report.extra {
        let s = report.row(&e.scenario).map(|r| &r.scenario);
        line(&e.scenario, s, &e.metric, &e.unit, e.value)?;
    }
    let bytes = w.into_inner().map_err(|e| IoError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("CSV of UTF-8 fields is UTF-8"))
}

pub fn export_results_csv(report: &ExperimentReport, path: impl AsRef<Path>) -> Result<(), IoError> {
    let path = path.as_ref();
    let text = report_to_csv(report)?;
    std::fs::write(path, text).map_err(|e| IoError::io(path, e))
}
