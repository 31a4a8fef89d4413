//! Deterministic offline backend.
//!
//! Scripted modes replay fixed completions. Bernoulli mode answers each
//! answer-producing call correctly with probability `p`, drawing from a
//! stream keyed by `(seed, sample_id, trial_index, call_index)` so results
//! do not depend on call arrival order across worker threads.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::sync::Mutex;

use super::{CallPurpose, ChatBackend, ChatRequest, ChatResponse, GatewayError};
use crate::cost::TokenUsage;
use crate::rng::{seeded, stable_key, unit_f64};
use crate::types::{Sample, SamplePayload};
use crate::verifiers::game24::{game24_non_solution, game24_solvable};

pub const REFLECTION_TEXT: &str =
    "Reflection: the previous answer was rejected. Re-check every step and use each input exactly once.";
pub const EVALUATION_TEXT: &str = "likely";

/// Correct and wrong completions per sample id.
#[derive(Debug, Clone, Default)]
pub struct AnswerKey {
    entries: HashMap<String, (String, String)>,
}

impl AnswerKey {
    pub fn insert(&mut self, sample_id: impl Into<String>, correct: impl Into<String>, wrong: impl Into<String>) {
        self.entries.insert(sample_id.into(), (correct.into(), wrong.into()));
    }

    /// Completions shaped the way the strategies parse them. Game of 24
    /// witnesses come from the brute-force oracle; unsolvable puzzles get
    /// the wrong answer on both paths.
    pub fn for_samples(samples: &[Sample]) -> Self {
        let mut key = AnswerKey::default();
        for sample in samples {
            let (correct, wrong) = match &sample.payload {
                SamplePayload::Game24 { numbers } => {
                    let wrong = format!("Answer: {}", game24_non_solution(*numbers));
                    let correct = game24_solvable(*numbers)
                        .witness
                        .map(|w| format!("Answer: {w}"))
                        .unwrap_or_else(|| wrong.clone());
                    (correct, wrong)
                }
                SamplePayload::Code(task) => {
                    let wrong = format!("```python\n{}    return None\n```", task.prompt);
                    let correct = task
                        .canonical_solution
                        .as_ref()
                        .map(|body| format!("```python\n{}{}```", task.prompt, body))
                        .unwrap_or_else(|| wrong.clone());
                    (correct, wrong)
                }
                SamplePayload::Question { answer, .. } => (
                    format!("Answer: {answer}\nAction: Finish[{answer}]"),
                    "Answer: unknown\nAction: Finish[unknown]".to_string(),
                ),
            };
            key.insert(sample.id.clone(), correct, wrong);
        }
        key
    }

    fn get(&self, sample_id: &str) -> Option<&(String, String)> {
        self.entries.get(sample_id)
    }
}

#[derive(Debug, Clone)]
pub enum MockMode {
    /// One queue consumed FIFO across every call.
    Scripted(Vec<String>),
    /// Queues keyed by `(sample_id, trial_index)`, consumed FIFO within that
    /// attempt. Replays identically after a resume.
    PerAttempt(BTreeMap<(String, u32), Vec<String>>),
    Bernoulli { success_probability: f64, answers: AnswerKey },
}

#[derive(Debug, Clone)]
pub struct MockScript {
    pub mode: MockMode,
    pub per_call_usage: TokenUsage,
    pub seed: u64,
}

impl MockScript {
    pub fn scripted(queue: Vec<String>, per_call_usage: TokenUsage) -> Self {
        Self { mode: MockMode::Scripted(queue), per_call_usage, seed: 0 }
    }

    pub fn bernoulli(success_probability: f64, answers: AnswerKey, per_call_usage: TokenUsage, seed: u64) -> Self {
        Self { mode: MockMode::Bernoulli { success_probability, answers }, per_call_usage, seed }
    }
}

enum State {
    Fifo(Mutex<VecDeque<String>>),
    Keyed(Mutex<BTreeMap<(String, u32), VecDeque<String>>>),
    Bernoulli { p: f64, answers: AnswerKey },
}

pub struct MockBackend {
    state: State,
    per_call_usage: TokenUsage,
    seed: u64,
}

/// Builds a backend that follows `script` deterministically.
pub fn configure_mock(script: MockScript) -> Result<MockBackend, GatewayError> {
    let state = match script.mode {
        MockMode::Scripted(queue) => State::Fifo(Mutex::new(queue.into())),
        MockMode::PerAttempt(map) => {
            State::Keyed(Mutex::new(map.into_iter().map(|(k, v)| (k, v.into())).collect()))
        }
        MockMode::Bernoulli { success_probability: p, answers } => {
            if !(0.0..=1.0).contains(&p) {
                return Err(GatewayError::InvalidProbability(p));
            }
            State::Bernoulli { p, answers }
        }
    };
    Ok(MockBackend { state, per_call_usage: script.per_call_usage, seed: script.seed })
}

impl MockBackend {
    pub fn scripted(queue: Vec<String>, per_call_usage: TokenUsage) -> Self {
        configure_mock(MockScript::scripted(queue, per_call_usage)).expect("scripted mocks are always valid")
    }

    fn draw_success(&self, p: f64, request: &ChatRequest, sample_index: u32) -> bool {
        let meta = &request.meta;
        let key = stable_key(&[
            &self.seed.to_string(),
            &meta.sample_id,
            &meta.trial_index.to_string(),
            &meta.call_index.to_string(),
            &sample_index.to_string(),
        ]);
        unit_f64(&mut seeded(key)) < p
    }

    fn bernoulli_completion(&self, p: f64, answers: &AnswerKey, request: &ChatRequest, i: u32) -> Result<String, GatewayError> {
        match request.meta.purpose {
            CallPurpose::Evaluate => Ok(EVALUATION_TEXT.to_string()),
            CallPurpose::Reflect => Ok(REFLECTION_TEXT.to_string()),
            CallPurpose::Answer | CallPurpose::Propose => {
                let (correct, wrong) = answers.get(&request.meta.sample_id).ok_or_else(|| {
                    GatewayError::Config(format!("mock has no answer key for sample {}", request.meta.sample_id))
                })?;
                Ok(if self.draw_success(p, request, i) { correct.clone() } else { wrong.clone() })
            }
        }
    }
}

impl ChatBackend for MockBackend {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let n = request.n_samples as usize;
        let completions = match &self.state {
            State::Fifo(queue) => {
                let mut queue = queue.lock().expect("mock queue poisoned");
                if queue.len() < n {
                    return Err(GatewayError::ScriptExhausted);
                }
                queue.drain(..n).collect()
            }
            State::Keyed(map) => {
                let mut map = map.lock().expect("mock queue poisoned");
                let key = (request.meta.sample_id.clone(), request.meta.trial_index);
                let queue = map.get_mut(&key).ok_or(GatewayError::ScriptExhausted)?;
                if queue.len() < n {
                    return Err(GatewayError::ScriptExhausted);
                }
                queue.drain(..n).collect()
            }
            State::Bernoulli { p, answers } => (0..n as u32)
                .map(|i| self.bernoulli_completion(*p, answers, request, i))
                .collect::<Result<Vec<_>, _>>()?,
        };
        Ok(ChatResponse { completions, usage: self.per_call_usage })
    }
}
