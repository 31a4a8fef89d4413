//! JSON run configuration and the wiring from it to an [`Experiment`].
//!
//! Unknown keys are rejected. Relative paths are resolved against the
//! directory of the config file, and the resolved document is what gets
//! snapshotted next to a run. Credentials never appear here: the HTTP
//! section names the environment variables that hold them.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::{CostModel, MoneyUsd, TokenUsage};
use crate::datasets::{self, DatasetError, HOTPOTQA_DEFAULT_N};
use crate::doc_env::{DocStore, DocStoreError, LiveEncyclopedia};
use crate::engine::{Experiment, RunConfig};
use crate::gateway::{configure_mock, AnswerKey, ChatBackend, Gateway, HttpBackend, HttpConfig, MockScript};
use crate::strategies::{build_strategy, PromptSet, StrategyParams};
use crate::types::{Method, Sample, Task};
use crate::verifiers::{CodeVerifierConfig, InterpreterCommand, TaskVerifier};

#[derive(Debug, Error)]
pub enum SetupError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("document store: {0}")]
    Docs(#[from] DocStoreError),
}

fn config_err(e: impl std::fmt::Display) -> SetupError {
    SetupError::Config(e.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CostModelSpec {
    Preset(String),
    Custom(CostModel),
}

impl CostModelSpec {
    pub fn resolve(&self) -> Result<CostModel, SetupError> {
        match self {
            CostModelSpec::Preset(name) => {
                CostModel::preset(name).ok_or_else(|| SetupError::Config(format!("unknown cost model preset {name:?}")))
            }
            CostModelSpec::Custom(model) => Ok(model.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Mock,
    Http,
}

impl std::str::FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mock" => Ok(BackendKind::Mock),
            "http" => Ok(BackendKind::Http),
            _ => Err(format!("unknown backend {s:?} (expected mock or http)")),
        }
    }
}

/// Bernoulli mock: each answer call is correct with `success_probability`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MockSection {
    pub success_probability: f64,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl Default for MockSection {
    fn default() -> Self {
        Self { success_probability: 0.3, prompt_tokens: 400, completion_tokens: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HttpSection {
    pub base_url_env: String,
    pub api_key_env: String,
    /// Model id sent on the wire.
    pub model: String,
    pub timeout_secs: u64,
}

impl Default for HttpSection {
    fn default() -> Self {
        Self {
            base_url_env: "OPENAI_BASE_URL".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            model: "gpt-4o-mini".into(),
            timeout_secs: 120,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetPaths {
    pub game24: Option<PathBuf>,
    pub humaneval: Option<PathBuf>,
    pub hotpotqa: Option<PathBuf>,
    pub hotpotqa_n: Option<usize>,
    pub hotpotqa_seed: u64,
    /// Directory of fixture documents for the HotpotQA tools.
    pub hotpotqa_docs: Option<PathBuf>,
    /// Use the live encyclopedia instead of `hotpotqa_docs`.
    pub hotpotqa_live: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub task: Task,
    pub method: Method,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    pub budget: MoneyUsd,
    #[serde(default)]
    pub max_trials: Option<u32>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    pub cost_model: CostModelSpec,
    #[serde(default)]
    pub strategy: StrategyParams,
    #[serde(default)]
    pub datasets: DatasetPaths,
    #[serde(default)]
    pub prompts_dir: Option<PathBuf>,
    pub backend: BackendKind,
    #[serde(default)]
    pub mock: MockSection,
    #[serde(default)]
    pub http: HttpSection,
    #[serde(default)]
    pub interpreter_command: InterpreterCommand,
    #[serde(default = "default_code_timeout")]
    pub code_timeout_secs: u64,
    #[serde(default)]
    pub scratch_dir: Option<PathBuf>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

fn default_temperature() -> f64 {
    0.7
}

fn default_concurrency() -> usize {
    1
}

fn default_code_timeout() -> u64 {
    5
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// A ready-to-run experiment plus where its outputs go.
pub struct Prepared {
    pub experiment: Experiment,
    pub run_dir: PathBuf,
    pub run_id: String,
}

impl ConfigFile {
    /// Parses `path` and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self, SetupError> {
        let text = fs::read_to_string(path).map_err(|e| SetupError::Config(format!("{}: {e}", path.display())))?;
        let mut config: ConfigFile =
            serde_json::from_str(&text).map_err(|e| SetupError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let base = if base.as_os_str().is_empty() { PathBuf::from(".") } else { base };
        let base = base.canonicalize().unwrap_or(base);
        config.resolve_paths(&base);
        Ok(config)
    }

    pub fn from_json(text: &str, base: &Path) -> Result<Self, SetupError> {
        let mut config: ConfigFile = serde_json::from_str(text).map_err(config_err)?;
        config.resolve_paths(base);
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let d = &mut self.datasets;
        for p in [&mut d.game24, &mut d.humaneval, &mut d.hotpotqa, &mut d.hotpotqa_docs].into_iter().flatten() {
            fix(p);
        }
        for p in [&mut self.prompts_dir, &mut self.scratch_dir].into_iter().flatten() {
            fix(p);
        }
        fix(&mut self.out);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs serialize") + "\n"
    }

    /// `<task>-<method>-T<temperature>-s<seed>`.
    pub fn run_id(&self) -> String {
        format!("{}-{}-T{}-s{}", self.task, self.method, self.temperature, self.seed)
    }

    fn backend_identity(&self) -> serde_json::Value {
        match self.backend {
            BackendKind::Mock => serde_json::json!({
                "kind": "mock",
                "success_probability": self.mock.success_probability,
                "prompt_tokens": self.mock.prompt_tokens,
                "completion_tokens": self.mock.completion_tokens,
            }),
            BackendKind::Http => serde_json::json!({ "kind": "http", "model": self.http.model }),
        }
    }

    pub fn run_config(&self) -> Result<RunConfig, SetupError> {
        let config = RunConfig {
            task: self.task,
            method: self.method,
            temperature: self.temperature,
            budget_limit: self.budget,
            max_trials: self.max_trials,
            seed: self.seed,
            cost_model: self.cost_model.resolve()?,
            concurrency: self.concurrency,
            strategy: self.strategy.clone(),
            backend: self.backend_identity(),
        };
        config.validate().map_err(config_err)?;
        Ok(config)
    }

    fn dataset_path(&self, path: &Option<PathBuf>) -> Result<PathBuf, SetupError> {
        path.clone().ok_or_else(|| SetupError::Config(format!("datasets.{} is not set", self.task)))
    }

    pub fn load_samples(&self) -> Result<Vec<Sample>, SetupError> {
        let d = &self.datasets;
        Ok(match self.task {
            Task::Game24 => datasets::load_game24(&self.dataset_path(&d.game24)?)?.selected,
            Task::Humaneval => datasets::load_humaneval(&self.dataset_path(&d.humaneval)?)?,
            Task::Hotpotqa => datasets::load_hotpotqa(
                &self.dataset_path(&d.hotpotqa)?,
                d.hotpotqa_n.unwrap_or(HOTPOTQA_DEFAULT_N),
                d.hotpotqa_seed,
            )?,
        })
    }

    fn backend(&self, samples: &[Sample]) -> Result<Arc<dyn ChatBackend>, SetupError> {
        Ok(match self.backend {
            BackendKind::Mock => {
                let usage = TokenUsage::new(self.mock.prompt_tokens, self.mock.completion_tokens);
                let script =
                    MockScript::bernoulli(self.mock.success_probability, AnswerKey::for_samples(samples), usage, self.seed);
                Arc::new(configure_mock(script).map_err(config_err)?)
            }
            BackendKind::Http => {
                let mut http = HttpConfig::from_env(&self.http.base_url_env, &self.http.api_key_env, &self.http.model)
                    .map_err(config_err)?;
                http.timeout = Duration::from_secs(self.http.timeout_secs);
                Arc::new(HttpBackend::new(http).map_err(config_err)?)
            }
        })
    }

    fn docs(&self) -> Result<Option<Arc<DocStore>>, SetupError> {
        if self.task != Task::Hotpotqa {
            return Ok(None);
        }
        if self.datasets.hotpotqa_live {
            let live = LiveEncyclopedia::wikipedia().map_err(config_err)?;
            return Ok(Some(Arc::new(DocStore::Live(live))));
        }
        match &self.datasets.hotpotqa_docs {
            Some(dir) => Ok(Some(Arc::new(DocStore::load_dir(dir)?))),
            None => Ok(None),
        }
    }

    pub fn verifier(&self) -> TaskVerifier {
        TaskVerifier::new(CodeVerifierConfig {
            interpreter: self.interpreter_command.clone(),
            timeout: Duration::from_secs(self.code_timeout_secs),
            scratch_dir: self.scratch_dir.clone(),
        })
    }

    pub fn prompts(&self) -> Result<PromptSet, SetupError> {
        match &self.prompts_dir {
            Some(dir) => PromptSet::load(dir, self.task, self.method).map_err(config_err),
            None => Ok(PromptSet::builtin(self.task, self.method)),
        }
    }

    /// Loads data and builds the experiment, with its ledger under
    /// `<out>/<run-id>/ledger.jsonl`.
    pub fn prepare(&self) -> Result<Prepared, SetupError> {
        let run_config = self.run_config()?;
        let prompts = self.prompts()?;
        let samples = self.load_samples()?;
        let gateway = Gateway::new(self.backend(&samples)?);
        let strategy = build_strategy(prompts, self.strategy.clone());
        let run_id = self.run_id();
        let run_dir = self.out.join(&run_id);
        let mut experiment = Experiment::new(run_config, samples, strategy, self.verifier(), gateway)
            .with_ledger(run_dir.join("ledger.jsonl"));
        if let Some(docs) = self.docs()? {
            experiment = experiment.with_docs(docs);
        }
        Ok(Prepared { experiment, run_dir, run_id })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "task": "game24", "method": "cot", "budget": "0.05",
        "cost_model": "gpt-4o-mini", "backend": "mock",
        "datasets": {"game24": "data/24.csv"}
    }"#;

    #[test]
    fn defaults_and_relative_paths() {
        let c = ConfigFile::from_json(MINIMAL, Path::new("/cfg")).unwrap();
        assert_eq!(c.temperature, 0.7);
        assert_eq!(c.concurrency, 1);
        assert_eq!(c.datasets.game24.as_deref(), Some(Path::new("/cfg/data/24.csv")));
        assert_eq!(c.out, Path::new("/cfg/out"));
        assert_eq!(c.run_id(), "game24-cot-T0.7-s0");
        assert_eq!(c.run_config().unwrap().cost_model, CostModel::gpt_4o_mini());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let typo = MINIMAL.replace("\"seed\"", "x").replace("\"budget\"", "\"budjet\"");
        assert!(ConfigFile::from_json(&typo, Path::new("/")).is_err());
        let nested = MINIMAL.replace("\"backend\": \"mock\"", "\"backend\": \"mock\", \"mock\": {\"p\": 1}");
        assert!(ConfigFile::from_json(&nested, Path::new("/")).is_err());
    }

    #[test]
    fn custom_cost_model_must_be_exact() {
        let custom = MINIMAL.replace(
            "\"gpt-4o-mini\"",
            r#"{"model_id": "m", "prompt_price_per_million": "1.5", "completion_price_per_million": "2"}"#,
        );
        let c = ConfigFile::from_json(&custom, Path::new("/")).unwrap();
        assert_eq!(c.run_config().unwrap().cost_model.model_id, "m");
        let unknown = MINIMAL.replace("\"gpt-4o-mini\"", "\"gpt-9\"");
        assert!(ConfigFile::from_json(&unknown, Path::new("/")).unwrap().run_config().is_err());
    }

    #[test]
    fn snapshot_round_trips() {
        let c = ConfigFile::from_json(MINIMAL, Path::new("/cfg")).unwrap();
        let back = ConfigFile::from_json(&c.to_json(), Path::new("/elsewhere")).unwrap();
        assert_eq!(back, c);
    }
}
