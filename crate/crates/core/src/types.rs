//! Domain values shared across the harness.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cost::TokenUsage;
use crate::gateway::{CallPurpose, ChatMessage};
use crate::verifiers::code::CodeTask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Game24,
    Humaneval,
    Hotpotqa,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::Game24, Task::Humaneval, Task::Hotpotqa];

    pub fn as_str(&self) -> &'static str {
        match self {
            Task::Game24 => "game24",
            Task::Humaneval => "humaneval",
            Task::Hotpotqa => "hotpotqa",
        }
    }

    /// Name of the quality metric reported for this task.
    pub fn metric(&self) -> &'static str {
        match self {
            Task::Game24 => "success_rate",
            Task::Humaneval => "pass@1",
            Task::Hotpotqa => "exact_match",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Task::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown task {s:?} (expected game24, humaneval or hotpotqa)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Io,
    Cot,
    Tot,
    Reflexion,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Io, Method::Cot, Method::Tot, Method::Reflexion];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Io => "io",
            Method::Cot => "cot",
            Method::Tot => "tot",
            Method::Reflexion => "reflexion",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown method {s:?} (expected io, cot, tot or reflexion)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Solved,
    Unsolved,
}

/// Result of verifying one extracted answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub outcome: Outcome,
    /// Failure reason; `None` when solved.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub detail: Option<String>,
    /// The verdict consulted a hidden oracle answer that a solver could not
    /// see (exact-match tasks).
    #[serde(skip_serializing_if = "std::ops::Not::not", default)]
    pub oracle_verified: bool,
}

impl Verdict {
    pub fn solved() -> Self {
        Self { outcome: Outcome::Solved, detail: None, oracle_verified: false }
    }

    pub fn unsolved(detail: impl Into<String>) -> Self {
        Self { outcome: Outcome::Unsolved, detail: Some(detail.into()), oracle_verified: false }
    }

    pub fn with_oracle(mut self) -> Self {
        self.oracle_verified = true;
        self
    }

    pub fn is_solved(&self) -> bool {
        self.outcome == Outcome::Solved
    }

    pub fn detail(&self) -> &str {
        self.detail.as_deref().unwrap_or("")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SamplePayload {
    Game24 { numbers: [u32; 4] },
    Code(CodeTask),
    Question { question: String, answer: String },
}

impl SamplePayload {
    pub fn task(&self) -> Task {
        match self {
            SamplePayload::Game24 { .. } => Task::Game24,
            SamplePayload::Code(_) => Task::Humaneval,
            SamplePayload::Question { .. } => Task::Hotpotqa,
        }
    }
}

/// One benchmark instance. The id embeds `(task, source_index)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub task: Task,
    pub payload: SamplePayload,
    pub source_index: usize,
}

impl Sample {
    pub fn new(task: Task, source_index: usize, payload: SamplePayload) -> Self {
        debug_assert_eq!(task, payload.task());
        Self { id: sample_id(task, source_index), task, payload, source_index }
    }

    pub fn game24(source_index: usize, numbers: [u32; 4]) -> Self {
        Self::new(Task::Game24, source_index, SamplePayload::Game24 { numbers })
    }
}

pub fn sample_id(task: Task, source_index: usize) -> String {
    format!("{task}-{source_index}")
}

/// One backend round trip inside an attempt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub purpose: CallPurpose,
    pub prompt: Vec<ChatMessage>,
    pub completions: Vec<String>,
    pub usage: TokenUsage,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

/// One strategy execution on one sample within one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub attempt_id: String,
    pub sample_id: String,
    pub method: Method,
    pub trial_index: u32,
    pub transcript: Vec<Exchange>,
    pub extracted_answer: Option<String>,
    pub usage: TokenUsage,
    pub verdict: Verdict,
    pub elapsed_ms: u64,
}

impl Attempt {
    pub fn attempt_id(sample_id: &str, trial_index: u32) -> String {
        format!("{sample_id}-t{trial_index}")
    }

    pub fn calls(&self) -> usize {
        self.transcript.len()
    }

    /// Prompt of the first backend call, concatenated message texts.
    pub fn initial_prompt(&self) -> Option<String> {
        self.transcript.first().map(|x| {
            x.prompt
                .iter()
                .map(|m| format!("[{}]\n{}", m.role.as_str(), m.content))
                .collect::<Vec<_>>()
                .join("\n")
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn task_and_method_names_round_trip() {
        for t in Task::ALL {
            assert_eq!(t.as_str().parse::<Task>().unwrap(), t);
            assert_eq!(serde_json::to_string(&t).unwrap(), format!("\"{t}\""));
        }
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("dfs".parse::<Method>().is_err());
    }

    #[test]
    fn sample_ids_embed_task_and_index() {
        let s = Sample::game24(901, [1, 2, 3, 4]);
        assert_eq!(s.id, "game24-901");
        assert_eq!(s.task, Task::Game24);
    }

    #[test]
    fn verdict_serialization_omits_empty_fields() {
        let json = serde_json::to_string(&Verdict::solved()).unwrap();
        assert_eq!(json, r#"{"outcome":"solved"}"#);
        let v = Verdict::unsolved("timeout").with_oracle();
        let back: Verdict = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
        assert_eq!(back, v);
    }
}
