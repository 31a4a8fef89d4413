//! Run reports, rebuilt from the attempt log alone so a resumed run and an
//! uninterrupted one produce the same bytes.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{HaltReason, RunConfig};
use crate::cost::{cost_of, MoneyUsd, TokenUsage};
use crate::types::Attempt;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_index: u32,
    pub attempted_sample_ids: Vec<String>,
    pub newly_solved_ids: Vec<String>,
    pub cumulative_solved_count: usize,
    pub cumulative_cost: MoneyUsd,
    pub halted_mid_trial: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub sample_id: String,
    /// `None` when the sample was never solved.
    pub solved_at_trial: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub config_hash: String,
    pub template_hash: String,
    pub sample_ids: Vec<String>,
    pub trials: Vec<TrialRecord>,
    pub resolutions: Vec<Resolution>,
    pub halt: HaltReason,
    pub metric: String,
    pub solved: usize,
    pub total: usize,
    pub success_rate: f64,
    pub attempts: usize,
    pub total_usage: TokenUsage,
    pub total_cost: MoneyUsd,
}

impl RunReport {
    /// Fraction solved on or before each trial.
    pub fn success_after_trial(&self) -> Vec<f64> {
        self.trials.iter().map(|t| rate(t.cumulative_solved_count, self.total)).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize") + "\n"
    }
}

fn rate(solved: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        solved as f64 / total as f64
    }
}

pub(crate) struct ReportInputs<'a> {
    pub config: &'a RunConfig,
    pub config_hash: &'a str,
    pub template_hash: &'a str,
    pub sample_ids: &'a [String],
    pub halt: &'a HaltReason,
}

/// `attempts` must be ordered by trial and, within a trial, by dataset
/// order.
pub(crate) fn build_report(inputs: ReportInputs<'_>, attempts: &[Attempt]) -> RunReport {
    let ReportInputs { config, config_hash, template_hash, sample_ids, halt } = inputs;
    let model = &config.cost_model;
    let mut last_trial = attempts.iter().map(|a| a.trial_index).max().unwrap_or(0);
    if let HaltReason::BudgetExhausted { trial } = halt {
        last_trial = last_trial.max(*trial);
    }
    let mut solved_at: HashMap<&str, u32> = HashMap::new();
    let mut trials = Vec::new();
    let mut cumulative_cost = MoneyUsd::ZERO;
    let mut total_usage = TokenUsage::ZERO;
    let mut cursor = 0;
    for t in 1..=last_trial {
        let mut record = TrialRecord {
            trial_index: t,
            attempted_sample_ids: Vec::new(),
            newly_solved_ids: Vec::new(),
            cumulative_solved_count: 0,
            cumulative_cost: MoneyUsd::ZERO,
            halted_mid_trial: *halt == (HaltReason::BudgetExhausted { trial: t }),
        };
        while let Some(a) = attempts.get(cursor).filter(|a| a.trial_index == t) {
            cursor += 1;
            cumulative_cost += cost_of(&a.usage, model);
            total_usage += a.usage;
            record.attempted_sample_ids.push(a.sample_id.clone());
            if a.verdict.is_solved() {
                solved_at.insert(&a.sample_id, t);
                record.newly_solved_ids.push(a.sample_id.clone());
            }
        }
        record.cumulative_solved_count = solved_at.len();
        record.cumulative_cost = cumulative_cost;
        trials.push(record);
    }
    debug_assert_eq!(cursor, attempts.len(), "attempts must be grouped by trial");
    let resolutions = sample_ids
        .iter()
        .map(|id| Resolution { sample_id: id.clone(), solved_at_trial: solved_at.get(id.as_str()).copied() })
        .collect();
    let solved = solved_at.len();
    RunReport {
        config: config.clone(),
        config_hash: config_hash.to_string(),
        template_hash: template_hash.to_string(),
        sample_ids: sample_ids.to_vec(),
        trials,
        resolutions,
        halt: halt.clone(),
        metric: config.task.metric().to_string(),
        solved,
        total: sample_ids.len(),
        success_rate: rate(solved, sample_ids.len()),
        attempts: attempts.len(),
        total_usage,
        total_cost: cumulative_cost,
    }
}
