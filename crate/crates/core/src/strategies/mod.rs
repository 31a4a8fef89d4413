//! The four reasoning strategies as attempt generators.
//!
//! A strategy sees one sample and an [`AttemptContext`]; it never touches
//! the budget. Every backend call goes through a [`Session`], which asks the
//! engine's [`AdmissionGate`] before spending and records the exchange in
//! the attempt transcript. The verdict always comes from the task verifier.

pub mod extract;
pub mod reflexion;
pub mod templates;
pub mod tot;

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cost::TokenUsage;
use crate::doc_env::DocStore;
use crate::gateway::{CallPurpose, ChatMessage, ChatRequest, Gateway, GatewayError, RequestMeta};
use crate::types::{Attempt, Exchange, Method, Sample, SamplePayload, Task, Verdict};
use crate::verifiers::{TaskVerifier, VerifierError};

pub use extract::{extract_cot, extract_io, marker_answer};
pub use reflexion::{run_reflexion, ReflexionMemory, ReflexionParams};
pub use templates::{PromptSet, TemplateError};
pub use tot::{tot_evaluate, tot_propose, tot_search, ThoughtNode, TotParams};

/// Engine-side check run before every backend call of an attempt.
pub trait AdmissionGate: Sync {
    /// `in_flight` is the usage this attempt has accumulated so far but the
    /// engine has not charged yet.
    fn admit(&self, in_flight: &TokenUsage) -> bool;
}

/// Admits everything. For examples and tests that run strategies directly.
pub struct Unmetered;

impl AdmissionGate for Unmetered {
    fn admit(&self, _: &TokenUsage) -> bool {
        true
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrategyParams {
    /// Completions requested per backend call.
    pub n_samples: u32,
    pub max_completion_tokens: u32,
    pub tot: TotParams,
    pub reflexion: ReflexionParams,
    /// Thought/Action turns per HotpotQA answer in Reflexion.
    pub react_max_steps: u32,
}

impl Default for StrategyParams {
    fn default() -> Self {
        Self {
            n_samples: 1,
            max_completion_tokens: crate::gateway::DEFAULT_MAX_COMPLETION_TOKENS,
            tot: TotParams::default(),
            reflexion: ReflexionParams::default(),
            react_max_steps: 6,
        }
    }
}

/// Everything an attempt may use besides the sample itself.
pub struct AttemptContext<'a> {
    pub gateway: &'a Gateway,
    pub verifier: &'a TaskVerifier,
    pub gate: &'a dyn AdmissionGate,
    pub docs: Option<Arc<DocStore>>,
    pub temperature: f64,
    pub trial_index: u32,
}

pub trait Strategy: Send + Sync {
    fn method(&self) -> Method;
    fn prompts(&self) -> &PromptSet;
    fn params(&self) -> &StrategyParams;
    fn attempt(&self, sample: &Sample, ctx: &AttemptContext<'_>) -> Result<Attempt, VerifierError>;
}

/// Why a session call did not produce completions.
#[derive(Debug, Clone, PartialEq)]
pub enum CallError {
    Budget,
    Backend(GatewayError),
}

impl CallError {
    pub fn verdict(&self) -> Verdict {
        match self {
            CallError::Budget => Verdict::unsolved("budget"),
            CallError::Backend(e) => Verdict::unsolved(format!("backend error: {e}")),
        }
    }
}

/// Call log and usage meter for one attempt.
pub struct Session<'s, 'a> {
    ctx: &'s AttemptContext<'a>,
    params: &'s StrategyParams,
    sample: &'s Sample,
    method: Method,
    transcript: Vec<Exchange>,
    usage: TokenUsage,
    started: Instant,
}

impl<'s, 'a> Session<'s, 'a> {
    pub fn new(ctx: &'s AttemptContext<'a>, params: &'s StrategyParams, sample: &'s Sample, method: Method) -> Self {
        Self { ctx, params, sample, method, transcript: Vec::new(), usage: TokenUsage::ZERO, started: Instant::now() }
    }

    pub fn sample(&self) -> &Sample {
        self.sample
    }

    pub fn context(&self) -> &AttemptContext<'a> {
        self.ctx
    }

    pub fn calls(&self) -> usize {
        self.transcript.len()
    }

    pub fn call(&mut self, purpose: CallPurpose, prompt: String) -> Result<Vec<String>, CallError> {
        if !self.ctx.gate.admit(&self.usage) {
            return Err(CallError::Budget);
        }
        let meta = RequestMeta::new(&self.sample.id, self.ctx.trial_index, self.transcript.len() as u32, purpose);
        let mut request = ChatRequest::new(vec![ChatMessage::user(prompt)], self.ctx.temperature, meta);
        request.max_completion_tokens = self.params.max_completion_tokens;
        request.n_samples = self.params.n_samples;
        let result = self.ctx.gateway.complete(&request);
        let (completions, usage, error) = match &result {
            Ok(r) => (r.completions.clone(), r.usage, None),
            Err(e) => (Vec::new(), TokenUsage::ZERO, Some(e.to_string())),
        };
        self.usage += usage;
        self.transcript.push(Exchange { purpose, prompt: request.messages, completions, usage, error });
        result.map(|r| r.completions).map_err(CallError::Backend)
    }

    /// First completion of one call.
    pub fn call_one(&mut self, purpose: CallPurpose, prompt: String) -> Result<String, CallError> {
        self.call(purpose, prompt).map(|mut c| c.swap_remove(0))
    }

    pub fn verify(&self, answer: Option<&str>) -> Result<Verdict, VerifierError> {
        self.ctx.verifier.verify(self.sample, answer)
    }

    pub fn finish(self, extracted_answer: Option<String>, verdict: Verdict) -> Attempt {
        Attempt {
            attempt_id: Attempt::attempt_id(&self.sample.id, self.ctx.trial_index),
            sample_id: self.sample.id.clone(),
            method: self.method,
            trial_index: self.ctx.trial_index,
            transcript: self.transcript,
            extracted_answer,
            usage: self.usage,
            verdict,
            elapsed_ms: self.started.elapsed().as_millis() as u64,
        }
    }

    pub fn verify_and_finish(self, answer: Option<String>) -> Result<Attempt, VerifierError> {
        let verdict = self.verify(answer.as_deref())?;
        Ok(self.finish(answer, verdict))
    }
}

/// The text substituted for `{input}`.
pub fn task_input(sample: &Sample) -> String {
    match &sample.payload {
        SamplePayload::Game24 { numbers } => numbers.map(|n| n.to_string()).join(" "),
        SamplePayload::Code(task) => task.prompt.clone(),
        SamplePayload::Question { question, .. } => question.clone(),
    }
}

pub fn run_io(prompts: &PromptSet, params: &StrategyParams, sample: &Sample, ctx: &AttemptContext<'_>) -> Result<Attempt, VerifierError> {
    let mut session = Session::new(ctx, params, sample, Method::Io);
    let prompt = prompts.render("prompt", &[("input", &task_input(sample))]);
    match session.call_one(CallPurpose::Answer, prompt) {
        Ok(text) => {
            let answer = extract_io(sample.task, &text);
            session.verify_and_finish(answer)
        }
        Err(e) => Ok(session.finish(None, e.verdict())),
    }
}

pub fn run_cot(prompts: &PromptSet, params: &StrategyParams, sample: &Sample, ctx: &AttemptContext<'_>) -> Result<Attempt, VerifierError> {
    let mut session = Session::new(ctx, params, sample, Method::Cot);
    let prompt = prompts.render("prompt", &[("input", &task_input(sample))]);
    match session.call_one(CallPurpose::Answer, prompt) {
        Ok(text) => match extract_cot(sample.task, &text) {
            Some(answer) => session.verify_and_finish(Some(answer)),
            None => Ok(session.finish(None, Verdict::unsolved("unparseable"))),
        },
        Err(e) => Ok(session.finish(None, e.verdict())),
    }
}

struct Builtin {
    method: Method,
    prompts: PromptSet,
    params: StrategyParams,
    reflexion: reflexion::Reflexion,
}

impl Strategy for Builtin {
    fn method(&self) -> Method {
        self.method
    }

    fn prompts(&self) -> &PromptSet {
        &self.prompts
    }

    fn params(&self) -> &StrategyParams {
        &self.params
    }

    fn attempt(&self, sample: &Sample, ctx: &AttemptContext<'_>) -> Result<Attempt, VerifierError> {
        match self.method {
            Method::Io => run_io(&self.prompts, &self.params, sample, ctx),
            Method::Cot => run_cot(&self.prompts, &self.params, sample, ctx),
            Method::Tot => tot_search(&self.prompts, &self.params, sample, ctx),
            Method::Reflexion => self.reflexion.run(&self.prompts, &self.params, sample, ctx),
        }
    }
}

/// The strategy for `prompts.method`, configured by `params`.
pub fn build_strategy(prompts: PromptSet, params: StrategyParams) -> Box<dyn Strategy> {
    let reflexion = reflexion::Reflexion::new(params.reflexion.persist_memory);
    Box::new(Builtin { method: prompts.method, prompts, params, reflexion })
}

/// Convenience for the builtin templates.
pub fn builtin_strategy(task: Task, method: Method, params: StrategyParams) -> Box<dyn Strategy> {
    build_strategy(PromptSet::builtin(task, method), params)
}
