//! Success curves over cumulative cost or trial count, temperature sweeps,
//! and their CSV/JSON encodings.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::MoneyUsd;
use crate::engine::RunReport;

pub const CSV_HEADER: &str = "label,x,y,axis,metric";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Cost,
    Trials,
}

impl Axis {
    pub fn as_str(&self) -> &'static str {
        match self {
            Axis::Cost => "cost",
            Axis::Trials => "trials",
        }
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cost" => Ok(Axis::Cost),
            "trials" => Ok(Axis::Trials),
            _ => Err(format!("unknown axis {s:?} (expected cost or trials)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CurveX {
    Cost(MoneyUsd),
    Trial(u32),
}

impl std::fmt::Display for CurveX {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CurveX::Cost(c) => write!(f, "{c}"),
            CurveX::Trial(t) => write!(f, "{t}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub label: String,
    pub x: CurveX,
    /// Fraction of samples solved so far, in [0, 1].
    pub y: f64,
    pub axis: Axis,
    pub metric: String,
}

#[derive(Serialize)]
struct JsonPoint<'a> {
    label: &'a str,
    x: String,
    y: f64,
    axis: Axis,
    metric: &'a str,
}

/// `task/method/T<temperature>`.
pub fn run_label(report: &RunReport) -> String {
    format!("{}/{}/T{}", report.config.task, report.config.method, report.config.temperature)
}

/// One point per trial record: cumulative cost or trial index against
/// success on or before that trial.
pub fn success_curve(report: &RunReport, axis: Axis) -> Vec<CurvePoint> {
    let label = run_label(report);
    report
        .trials
        .iter()
        .zip(report.success_after_trial())
        .map(|(t, y)| CurvePoint {
            label: label.clone(),
            x: match axis {
                Axis::Cost => CurveX::Cost(t.cumulative_cost),
                Axis::Trials => CurveX::Trial(t.trial_index),
            },
            y,
            axis,
            metric: report.metric.clone(),
        })
        .collect()
}

/// Cost added by each trial. Sums to the report's total cost.
pub fn marginal_costs(report: &RunReport) -> Vec<MoneyUsd> {
    let mut previous = MoneyUsd::ZERO;
    report
        .trials
        .iter()
        .map(|t| {
            let step = t.cumulative_cost.checked_sub(previous).expect("cumulative cost never decreases");
            previous = t.cumulative_cost;
            step
        })
        .collect()
}

#[derive(Debug, Error, PartialEq)]
pub enum SweepError {
    #[error("a temperature sweep needs at least one report")]
    Empty,
    #[error("sweep mixes {0} with {1}; every report must share task and method")]
    Mixed(String, String),
    #[error("temperature {0} appears more than once")]
    DuplicateTemperature(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveFamily {
    pub temperature: f64,
    pub points: Vec<CurvePoint>,
}

/// One labelled curve per temperature, ordered by temperature.
pub fn temperature_sweep(reports: &[RunReport], axis: Axis) -> Result<Vec<CurveFamily>, SweepError> {
    let first = reports.first().ok_or(SweepError::Empty)?;
    let key = |r: &RunReport| format!("{}/{}", r.config.task, r.config.method);
    let mut families: Vec<CurveFamily> = Vec::new();
    for r in reports {
        if key(r) != key(first) {
            return Err(SweepError::Mixed(key(first), key(r)));
        }
        let t = r.config.temperature;
        if families.iter().any(|f| f.temperature == t) {
            return Err(SweepError::DuplicateTemperature(t));
        }
        families.push(CurveFamily { temperature: t, points: success_curve(r, axis) });
    }
    families.sort_by(|a, b| a.temperature.total_cmp(&b.temperature));
    Ok(families)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn to_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{:.6},{},{}",
            csv_field(&p.label),
            p.x,
            p.y,
            p.axis.as_str(),
            csv_field(&p.metric)
        );
    }
    out
}

pub fn to_json(points: &[CurvePoint]) -> String {
    let records: Vec<JsonPoint> = points
        .iter()
        .map(|p| JsonPoint { label: &p.label, x: p.x.to_string(), y: p.y, axis: p.axis, metric: &p.metric })
        .collect();
    serde_json::to_string_pretty(&records).expect("curve points serialize") + "\n"
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

pub fn emit(points: &[CurvePoint], format: Format, path: &Path) -> std::io::Result<()> {
    let text = match format {
        Format::Csv => to_csv(points),
        Format::Json => to_json(points),
    };
    fs::write(path, text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{CostModel, TokenUsage};
    use crate::engine::{HaltReason, RunConfig, TrialRecord};
    use crate::types::{Method, Task};

    fn report(temperature: f64, method: Method, cumulative: &[(usize, &str)], total: usize) -> RunReport {
        let mut config = RunConfig::new(Task::Game24, method, "1".parse().unwrap(), CostModel::gpt_4o_mini());
        config.temperature = temperature;
        let trials: Vec<TrialRecord> = cumulative
            .iter()
            .enumerate()
            .map(|(i, (solved, cost))| TrialRecord {
                trial_index: i as u32 + 1,
                attempted_sample_ids: vec![],
                newly_solved_ids: vec![],
                cumulative_solved_count: *solved,
                cumulative_cost: cost.parse().unwrap(),
                halted_mid_trial: false,
            })
            .collect();
        let total_cost = trials.last().map(|t| t.cumulative_cost).unwrap_or(MoneyUsd::ZERO);
        RunReport {
            config,
            config_hash: String::new(),
            template_hash: String::new(),
            sample_ids: vec![],
            trials,
            resolutions: vec![],
            halt: HaltReason::TrialCap,
            metric: "success_rate".into(),
            solved: 0,
            total,
            success_rate: 0.0,
            attempts: 0,
            total_usage: TokenUsage::ZERO,
            total_cost,
        }
    }

    #[test]
    fn curve_points_per_trial() {
        let r = report(0.7, Method::Io, &[(1, "0.00045"), (2, "0.0009")], 2);
        let csv = to_csv(&success_curve(&r, Axis::Cost));
        assert_eq!(
            csv,
            "label,x,y,axis,metric\n\
             game24/io/T0.7,0.000450000000,0.500000,cost,success_rate\n\
             game24/io/T0.7,0.000900000000,1.000000,cost,success_rate\n"
        );
        let trials = to_csv(&success_curve(&r, Axis::Trials));
        assert!(trials.contains("game24/io/T0.7,2,1.000000,trials,success_rate"));
        assert_eq!(marginal_costs(&r), vec!["0.00045".parse().unwrap(), "0.00045".parse().unwrap()]);
    }

    #[test]
    fn empty_curve_is_header_only() {
        assert_eq!(to_csv(&[]), "label,x,y,axis,metric\n");
        assert_eq!(to_json(&[]), "[]\n");
    }

    #[test]
    fn sweep_groups_by_temperature() {
        let reports: Vec<_> =
            [1.0, 0.3, 0.7].iter().map(|t| report(*t, Method::Cot, &[(0, "0.1")], 4)).collect();
        let fams = temperature_sweep(&reports, Axis::Cost).unwrap();
        let temps: Vec<f64> = fams.iter().map(|f| f.temperature).collect();
        assert_eq!(temps, vec![0.3, 0.7, 1.0]);
        assert_eq!(fams[2].points[0].label, "game24/cot/T1");
        assert_eq!(temperature_sweep(&reports[..1], Axis::Cost).unwrap().len(), 1);
        let mixed = vec![reports[0].clone(), report(0.5, Method::Io, &[(0, "0.1")], 4)];
        assert!(matches!(temperature_sweep(&mixed, Axis::Cost), Err(SweepError::Mixed(..))));
        assert_eq!(temperature_sweep(&[], Axis::Cost), Err(SweepError::Empty));
    }

    #[test]
    fn json_mirrors_csv() {
        let r = report(0.7, Method::Io, &[(1, "0.00045")], 2);
        let json: serde_json::Value = serde_json::from_str(&to_json(&success_curve(&r, Axis::Cost))).unwrap();
        assert_eq!(json[0]["x"], "0.000450000000");
        assert_eq!(json[0]["y"], 0.5);
        assert_eq!(json[0]["axis"], "cost");
    }
}
