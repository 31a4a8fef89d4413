//! The retrial loop.
//!
//! Trial 1 attempts every sample. Each later trial attempts exactly the
//! samples still unsolved, in dataset order, with no information carried
//! over from earlier attempts. The run stops when everything is solved,
//! when the trial cap is reached, or when the budget refuses to admit the
//! next attempt. Admission is checked before every attempt and, through
//! the [`AdmissionGate`], before every backend call inside an attempt.
//!
//! With `concurrency > 1` up to that many attempts run at once inside a
//! trial; a trial finishes completely before the next one starts. An
//! attempt already in flight when the budget runs out may overshoot it by
//! its own remaining cost.

pub mod ledger;
pub mod report;

use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::thread;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cost::{cost_of, Budget, CostModel, MoneyUsd, SharedBudget, TokenUsage};
use crate::doc_env::DocStore;
use crate::gateway::Gateway;
use crate::strategies::{AdmissionGate, AttemptContext, Strategy, StrategyParams};
use crate::types::{Attempt, Method, Sample, Task};
use crate::verifiers::{TaskVerifier, VerifierError};

pub use ledger::{read_ledger, LedgerContents, LedgerError, LedgerHeader, LedgerWriter, LEDGER_VERSION};
pub use report::{Resolution, RunReport, TrialRecord};

/// Everything that determines a run's results. Hashed into the ledger so a
/// resume under a different configuration is refused.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub task: Task,
    pub method: Method,
    pub temperature: f64,
    pub budget_limit: MoneyUsd,
    /// `None` runs until solved or out of budget.
    pub max_trials: Option<u32>,
    pub seed: u64,
    pub cost_model: CostModel,
    pub concurrency: usize,
    #[serde(default)]
    pub strategy: StrategyParams,
    /// Backend identity (kind, model, mock parameters). Never credentials.
    #[serde(default)]
    pub backend: serde_json::Value,
}

impl RunConfig {
    pub fn new(task: Task, method: Method, budget_limit: MoneyUsd, cost_model: CostModel) -> Self {
        Self {
            task,
            method,
            temperature: 0.7,
            budget_limit,
            max_trials: None,
            seed: 0,
            cost_model,
            concurrency: 1,
            strategy: StrategyParams::default(),
            backend: serde_json::Value::Null,
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |m: String| Err(EngineError::Config(m));
        if !(0.0..=2.0).contains(&self.temperature) {
            return bad(format!("temperature {} is outside [0, 2]", self.temperature));
        }
        if self.concurrency == 0 {
            return bad("concurrency must be at least 1".into());
        }
        if self.max_trials == Some(0) {
            return bad("max_trials must be at least 1".into());
        }
        let s = &self.strategy;
        if s.n_samples == 0 || s.max_completion_tokens == 0 {
            return bad("n_samples and max_completion_tokens must be at least 1".into());
        }
        if s.tot.k == 0 || s.tot.breadth == 0 || s.tot.depth == 0 {
            return bad("tot.k, tot.breadth and tot.depth must be at least 1".into());
        }
        if s.reflexion.max_inner == 0 {
            return bad("reflexion.max_inner must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum HaltReason {
    AllSolved,
    /// The budget refused an attempt during `trial`.
    BudgetExhausted { trial: u32 },
    TrialCap,
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("config mismatch: the ledger was written under config hash {ledger}, the current config hashes to {current}")]
    ConfigMismatch { ledger: String, current: String },
    #[error(transparent)]
    Verifier(#[from] VerifierError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error("resume needs a ledger path")]
    NoLedger,
    #[error("interrupted after {attempts} attempts")]
    Interrupted { attempts: usize },
}

/// Simulated crash points, for exercising resume.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interrupt {
    /// Stop once this trial's last attempt is in the ledger, before its
    /// trial record.
    AfterTrial(u32),
    /// Stop once this many attempts have been recorded by this invocation.
    AfterAttempts(usize),
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    /// Every attempt of the run, ordered by trial then dataset order.
    pub attempts: Vec<Attempt>,
}

pub struct Experiment {
    config: RunConfig,
    samples: Vec<Sample>,
    strategy: Box<dyn Strategy>,
    verifier: TaskVerifier,
    gateway: Gateway,
    docs: Option<Arc<DocStore>>,
    ledger_path: Option<PathBuf>,
    inline_transcript_cap: usize,
    interrupt: Option<Interrupt>,
}

struct BudgetGate<'a> {
    budget: &'a SharedBudget,
    model: &'a CostModel,
}

impl AdmissionGate for BudgetGate<'_> {
    fn admit(&self, in_flight: &TokenUsage) -> bool {
        self.budget.can_afford_with(cost_of(in_flight, self.model))
    }
}

struct Progress {
    attempts: Vec<Attempt>,
    recorded_here: usize,
    ledger: Option<LedgerWriter>,
}

struct Dispatch {
    next: usize,
    stop: bool,
    halted: bool,
    error: Option<EngineError>,
}

impl Experiment {
    pub fn new(
        config: RunConfig,
        samples: Vec<Sample>,
        strategy: Box<dyn Strategy>,
        verifier: TaskVerifier,
        gateway: Gateway,
    ) -> Self {
        Self {
            config,
            samples,
            strategy,
            verifier,
            gateway,
            docs: None,
            ledger_path: None,
            inline_transcript_cap: ledger::INLINE_TRANSCRIPT_CAP,
            interrupt: None,
        }
    }

    pub fn with_docs(mut self, docs: Arc<DocStore>) -> Self {
        self.docs = Some(docs);
        self
    }

    /// Persist every attempt to a JSON-lines ledger at `path`.
    pub fn with_ledger(mut self, path: impl Into<PathBuf>) -> Self {
        self.ledger_path = Some(path.into());
        self
    }

    pub fn with_inline_transcript_cap(mut self, bytes: usize) -> Self {
        self.inline_transcript_cap = bytes;
        self
    }

    pub fn with_concurrency(mut self, workers: usize) -> Self {
        self.config.concurrency = workers;
        self
    }

    pub fn with_interrupt(mut self, interrupt: Interrupt) -> Self {
        self.interrupt = Some(interrupt);
        self
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn ledger_path(&self) -> Option<&Path> {
        self.ledger_path.as_deref()
    }

    pub fn sample_ids(&self) -> Vec<String> {
        self.samples.iter().map(|s| s.id.clone()).collect()
    }

    pub fn template_hash(&self) -> String {
        self.strategy.prompts().hash()
    }

    /// Hex SHA-256 over the config, the prompt templates and the sample ids.
    pub fn config_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(&self.config).expect("configs serialize"));
        h.update(b"\0");
        h.update(self.template_hash().as_bytes());
        for id in &self.samples {
            h.update(b"\0");
            h.update(id.id.as_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    fn preflight(&self) -> Result<(), EngineError> {
        self.config.validate()?;
        if self.samples.is_empty() {
            return Err(EngineError::Config("no samples to run".into()));
        }
        if let Some(s) = self.samples.iter().find(|s| s.task != self.config.task) {
            return Err(EngineError::Config(format!("sample {} is not a {} sample", s.id, self.config.task)));
        }
        let mut seen = HashSet::new();
        if let Some(s) = self.samples.iter().find(|s| !seen.insert(&s.id)) {
            return Err(EngineError::Config(format!("duplicate sample id {}", s.id)));
        }
        let prompts = self.strategy.prompts();
        if self.strategy.method() != self.config.method || prompts.task != self.config.task {
            return Err(EngineError::Config(format!(
                "strategy is {}/{} but the config asks for {}/{}",
                prompts.task,
                self.strategy.method(),
                self.config.task,
                self.config.method
            )));
        }
        if self.strategy.params() != &self.config.strategy {
            return Err(EngineError::Config("strategy parameters differ from the config".into()));
        }
        self.verifier.preflight(self.config.task)?;
        Ok(())
    }

    fn header(&self) -> LedgerHeader {
        LedgerHeader {
            version: LEDGER_VERSION,
            config_hash: self.config_hash(),
            template_hash: self.template_hash(),
            config: self.config.clone(),
            sample_ids: self.sample_ids(),
        }
    }

    /// Runs from trial 1. An existing ledger at the configured path is
    /// replaced.
    pub fn run(&self) -> Result<RunOutcome, EngineError> {
        self.preflight()?;
        let ledger = match &self.ledger_path {
            Some(path) => Some(LedgerWriter::create(path, &self.header())?.with_inline_cap(self.inline_transcript_cap)),
            None => None,
        };
        self.drive(Vec::new(), HashSet::new(), ledger)
    }

    /// Continues the run recorded in the ledger. A finished run is returned
    /// as is; a run under a different configuration is refused.
    pub fn resume(&self) -> Result<RunOutcome, EngineError> {
        self.preflight()?;
        let path = self.ledger_path.as_deref().ok_or(EngineError::NoLedger)?;
        let contents = read_ledger(path)?;
        let current = self.config_hash();
        if contents.header.config_hash != current {
            return Err(EngineError::ConfigMismatch { ledger: contents.header.config_hash, current });
        }
        let attempts = self.ordered(contents.attempts);
        if let Some(halt) = contents.end {
            let report = self.report(&halt, &attempts);
            return Ok(RunOutcome { report, attempts });
        }
        let ledger = LedgerWriter::reopen(path, contents.valid_len)?.with_inline_cap(self.inline_transcript_cap);
        let recorded = contents.trials.iter().map(|t| t.trial_index).collect();
        self.drive(attempts, recorded, Some(ledger))
    }

    fn position(&self) -> HashMap<&str, usize> {
        self.samples.iter().enumerate().map(|(i, s)| (s.id.as_str(), i)).collect()
    }

    fn ordered(&self, mut attempts: Vec<Attempt>) -> Vec<Attempt> {
        let pos = self.position();
        attempts.sort_by_key(|a| (a.trial_index, pos.get(a.sample_id.as_str()).copied().unwrap_or(usize::MAX)));
        attempts
    }

    fn report(&self, halt: &HaltReason, attempts: &[Attempt]) -> RunReport {
        let config_hash = self.config_hash();
        let template_hash = self.template_hash();
        let sample_ids = self.sample_ids();
        report::build_report(
            report::ReportInputs {
                config: &self.config,
                config_hash: &config_hash,
                template_hash: &template_hash,
                sample_ids: &sample_ids,
                halt,
            },
            attempts,
        )
    }

    fn drive(
        &self,
        prior: Vec<Attempt>,
        mut recorded: HashSet<u32>,
        ledger: Option<LedgerWriter>,
    ) -> Result<RunOutcome, EngineError> {
        let spent: MoneyUsd = prior.iter().map(|a| cost_of(&a.usage, &self.config.cost_model)).sum();
        let budget = SharedBudget::new(Budget::new(self.config.budget_limit).charge(spent));
        let mut solved: HashSet<String> =
            prior.iter().filter(|a| a.verdict.is_solved()).map(|a| a.sample_id.clone()).collect();
        let mut trial = prior.iter().map(|a| a.trial_index).max().unwrap_or(1);
        let progress = Mutex::new(Progress { attempts: prior, recorded_here: 0, ledger });

        let halt = loop {
            let done_this_trial: HashSet<String> = {
                let p = progress.lock().expect("progress lock poisoned");
                p.attempts.iter().filter(|a| a.trial_index == trial).map(|a| a.sample_id.clone()).collect()
            };
            let unsolved_at_start: Vec<&Sample> = self
                .samples
                .iter()
                .filter(|s| !solved.contains(&s.id) || done_this_trial.contains(&s.id))
                .collect();
            if unsolved_at_start.is_empty() {
                break HaltReason::AllSolved;
            }
            if self.config.max_trials.is_some_and(|cap| trial > cap) {
                break HaltReason::TrialCap;
            }
            let pending: Vec<&Sample> =
                unsolved_at_start.into_iter().filter(|s| !done_this_trial.contains(&s.id)).collect();
            let halted = self.run_trial(trial, &pending, &budget, &progress)?;
            let mut p = progress.lock().expect("progress lock poisoned");
            for a in p.attempts.iter().filter(|a| a.trial_index == trial && a.verdict.is_solved()) {
                solved.insert(a.sample_id.clone());
            }
            if self.interrupt == Some(Interrupt::AfterTrial(trial)) {
                return Err(EngineError::Interrupted { attempts: p.recorded_here });
            }
            if halted {
                break HaltReason::BudgetExhausted { trial };
            }
            let attempts = self.ordered(std::mem::take(&mut p.attempts));
            let record = self
                .report(&HaltReason::AllSolved, &attempts)
                .trials
                .into_iter()
                .find(|t| t.trial_index == trial);
            p.attempts = attempts;
            if let (Some(ledger), Some(record)) = (p.ledger.as_mut(), record) {
                if recorded.insert(trial) {
                    ledger.trial(&record)?;
                }
            }
            drop(p);
            if solved.len() == self.samples.len() {
                break HaltReason::AllSolved;
            }
            trial += 1;
        };

        let mut p = progress.into_inner().expect("progress lock poisoned");
        let attempts = self.ordered(p.attempts);
        let report = self.report(&halt, &attempts);
        if let Some(ledger) = p.ledger.as_mut() {
            if let HaltReason::BudgetExhausted { trial } = halt {
                if let Some(record) = report.trials.iter().find(|t| t.trial_index == trial) {
                    ledger.trial(record)?;
                }
            }
            ledger.end(&halt)?;
        }
        Ok(RunOutcome { report, attempts })
    }

    /// Attempts `pending` in order. Returns whether the budget halted the
    /// trial.
    fn run_trial(
        &self,
        trial: u32,
        pending: &[&Sample],
        budget: &SharedBudget,
        progress: &Mutex<Progress>,
    ) -> Result<bool, EngineError> {
        let dispatch = Mutex::new(Dispatch { next: 0, stop: false, halted: false, error: None });
        let gate = BudgetGate { budget, model: &self.config.cost_model };
        let ctx = AttemptContext {
            gateway: &self.gateway,
            verifier: &self.verifier,
            gate: &gate,
            docs: self.docs.clone(),
            temperature: self.config.temperature,
            trial_index: trial,
        };
        let worker = || loop {
            let sample = {
                let mut d = dispatch.lock().expect("dispatch lock poisoned");
                if d.stop || d.next >= pending.len() {
                    return;
                }
                if !budget.can_afford() {
                    d.halted = true;
                    d.stop = true;
                    return;
                }
                d.next += 1;
                pending[d.next - 1]
            };
            let result = self.strategy.attempt(sample, &ctx).map_err(EngineError::from).and_then(|attempt| {
                let cost = cost_of(&attempt.usage, &self.config.cost_model);
                let mut p = progress.lock().expect("progress lock poisoned");
                budget.charge(cost);
                if let Some(ledger) = p.ledger.as_mut() {
                    ledger.attempt(&attempt, cost)?;
                }
                p.attempts.push(attempt);
                p.recorded_here += 1;
                if self.interrupt == Some(Interrupt::AfterAttempts(p.recorded_here)) {
                    return Err(EngineError::Interrupted { attempts: p.recorded_here });
                }
                Ok(())
            });
            if let Err(e) = result {
                let mut d = dispatch.lock().expect("dispatch lock poisoned");
                d.stop = true;
                d.error.get_or_insert(e);
                return;
            }
        };
        let workers = self.config.concurrency.min(pending.len()).max(1);
        if workers == 1 {
            worker();
        } else {
            thread::scope(|scope| {
                for _ in 0..workers {
                    scope.spawn(worker);
                }
            });
        }
        let d = dispatch.into_inner().expect("dispatch lock poisoned");
        match d.error {
            Some(e) => Err(e),
            None => Ok(d.halted),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{configure_mock, AnswerKey, MockBackend, MockScript};
    use crate::strategies::builtin_strategy;

    fn usd(s: &str) -> MoneyUsd {
        s.parse().unwrap()
    }

    fn bernoulli(n: usize, p: f64, budget: &str, max_trials: Option<u32>) -> Experiment {
        let samples: Vec<Sample> = (0..n).map(|i| Sample::game24(i, [1, 2, 3, 4])).collect();
        let key = AnswerKey::for_samples(&samples);
        let mock = configure_mock(MockScript::bernoulli(p, key, TokenUsage::new(400, 200), 11)).unwrap();
        let mut config = RunConfig::new(Task::Game24, Method::Io, usd(budget), CostModel::gpt_4o_mini());
        config.max_trials = max_trials;
        let strategy = builtin_strategy(Task::Game24, Method::Io, StrategyParams::default());
        Experiment::new(config, samples, strategy, TaskVerifier::default(), Gateway::new(Arc::new(mock)))
    }

    #[test]
    fn everything_solves_in_one_trial() {
        let out = bernoulli(10, 1.0, "10", None).run().unwrap();
        assert_eq!(out.report.trials.len(), 1);
        assert_eq!(out.report.success_rate, 1.0);
        assert_eq!(out.attempts.len(), 10);
        assert_eq!(out.report.halt, HaltReason::AllSolved);
    }

    #[test]
    fn zero_budget_halts_before_any_attempt() {
        let out = bernoulli(3, 1.0, "0", None).run().unwrap();
        assert_eq!(out.attempts.len(), 0);
        assert_eq!(out.report.total_cost, MoneyUsd::ZERO);
        assert_eq!(out.report.success_rate, 0.0);
        assert_eq!(out.report.trials.len(), 1);
        assert!(out.report.trials[0].halted_mid_trial);
        assert!(out.report.trials[0].attempted_sample_ids.is_empty());
    }

    #[test]
    fn trial_cap() {
        let out = bernoulli(4, 0.0, "10", Some(3)).run().unwrap();
        assert_eq!(out.report.trials.len(), 3);
        assert_eq!(out.attempts.len(), 12);
        assert_eq!(out.report.halt, HaltReason::TrialCap);
        assert_eq!(out.report.success_rate, 0.0);
    }

    #[test]
    fn concurrency_gives_the_same_report_when_budget_is_ample() {
        let serial = bernoulli(30, 0.4, "10", Some(4)).run().unwrap().report;
        let mut parallel = bernoulli(30, 0.4, "10", Some(4));
        parallel.config.concurrency = 4;
        let parallel = parallel.run().unwrap().report;
        assert_eq!(serial.trials, parallel.trials);
        assert_eq!(serial.total_cost, parallel.total_cost);
    }

    #[test]
    fn mismatched_strategy_is_a_config_error() {
        let samples = vec![Sample::game24(0, [1, 2, 3, 4])];
        let config = RunConfig::new(Task::Game24, Method::Cot, usd("1"), CostModel::gpt_4o_mini());
        let strategy = builtin_strategy(Task::Game24, Method::Io, StrategyParams::default());
        let gw = Gateway::new(Arc::new(MockBackend::scripted(vec![], TokenUsage::ZERO)));
        let err = Experiment::new(config, samples, strategy, TaskVerifier::default(), gw).run().unwrap_err();
        assert!(matches!(err, EngineError::Config(_)), "{err}");
    }

    #[test]
    fn ledger_round_trip_with_sidecar_transcripts() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ledger.jsonl");
        let exp = bernoulli(5, 0.5, "10", Some(3)).with_ledger(&path).with_inline_transcript_cap(10);
        let out = exp.run().unwrap();
        assert!(dir.path().join("transcripts").read_dir().unwrap().count() > 0);
        let contents = read_ledger(&path).unwrap();
        assert_eq!(contents.attempts.len(), out.attempts.len());
        assert_eq!(exp.ordered(contents.attempts), out.attempts);
        assert_eq!(contents.end, Some(out.report.halt.clone()));
        assert_eq!(contents.trials, out.report.trials);
        let again = exp.resume().unwrap();
        assert_eq!(again.report, out.report);
    }

    #[test]
    fn torn_last_line_is_ignored() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ledger.jsonl");
        let exp = bernoulli(6, 0.5, "10", Some(3)).with_ledger(&path);
        let full = exp.run().unwrap();
        let exp2 = bernoulli(6, 0.5, "10", Some(3)).with_ledger(&path).with_interrupt(Interrupt::AfterAttempts(4));
        assert!(matches!(exp2.run(), Err(EngineError::Interrupted { attempts: 4 })));
        let mut text = std::fs::read_to_string(&path).unwrap();
        text.push_str("{\"record\":\"attempt\",\"attem");
        std::fs::write(&path, text).unwrap();
        let resumed = exp.resume().unwrap();
        assert_eq!(resumed.report, full.report);
    }

    #[test]
    fn resume_refuses_a_changed_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ledger.jsonl");
        bernoulli(3, 0.5, "10", Some(2)).with_ledger(&path).run().unwrap();
        let mut changed = bernoulli(3, 0.5, "10", Some(2)).with_ledger(&path);
        changed.config.temperature = 1.0;
        let err = changed.resume().unwrap_err();
        assert!(err.to_string().contains("config mismatch"), "{err}");
    }
}
