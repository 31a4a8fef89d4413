//! Reflexion: answer, verify, reflect on the failure, answer again with the
//! reflections in context. The loop is bounded by `max_inner` and its
//! memory belongs to one attempt unless `persist_memory` is set.

use std::collections::HashMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::extract::{extract_cot, marker_answer};
use super::{task_input, AttemptContext, CallError, PromptSet, Session, StrategyParams};
use crate::doc_env::{parse_action, Action, DocEnv};
use crate::gateway::CallPurpose;
use crate::types::{Attempt, Method, Sample, Task, Verdict};
use crate::verifiers::VerifierError;

/// Observation returned when a HotpotQA run has no document store.
pub const NO_STORE: &str = "Tool error: no document store configured.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReflexionParams {
    pub max_inner: u32,
    /// Carry reflections into later trials of the same sample. Off by
    /// default: retrials start from an empty memory.
    pub persist_memory: bool,
}

impl Default for ReflexionParams {
    fn default() -> Self {
        Self { max_inner: 2, persist_memory: false }
    }
}

/// Reflections gathered inside one attempt, oldest first.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReflexionMemory {
    reflections: Vec<String>,
    cap: usize,
}

impl ReflexionMemory {
    pub fn new(cap: usize) -> Self {
        Self { reflections: Vec::new(), cap }
    }

    pub fn push(&mut self, reflection: String) {
        if self.cap == 0 {
            return;
        }
        if self.reflections.len() == self.cap {
            self.reflections.remove(0);
        }
        self.reflections.push(reflection);
    }

    pub fn reflections(&self) -> &[String] {
        &self.reflections
    }

    pub fn clear(&mut self) {
        self.reflections.clear();
    }

    /// Prompt block for `{reflections}`; empty when there are none.
    pub fn render(&self) -> String {
        if self.reflections.is_empty() {
            return String::new();
        }
        let mut out = String::from("Reflections on earlier attempts at this problem:\n");
        for r in &self.reflections {
            out.push_str("- ");
            out.push_str(r);
            out.push('\n');
        }
        out.push('\n');
        out
    }
}

/// Strategy state: only non-empty when memory persists across trials.
pub(crate) struct Reflexion {
    carried: Option<Mutex<HashMap<String, Vec<String>>>>,
}

impl Reflexion {
    pub(crate) fn new(persist_memory: bool) -> Self {
        Self { carried: persist_memory.then(|| Mutex::new(HashMap::new())) }
    }

    pub(crate) fn run(
        &self,
        prompts: &PromptSet,
        params: &StrategyParams,
        sample: &Sample,
        ctx: &AttemptContext<'_>,
    ) -> Result<Attempt, VerifierError> {
        let cap = params.reflexion.max_inner.saturating_sub(1) as usize;
        let mut memory = ReflexionMemory::new(cap);
        if let Some(carried) = &self.carried {
            for r in carried.lock().expect("reflexion memory poisoned").get(&sample.id).into_iter().flatten() {
                memory.push(r.clone());
            }
        }
        let attempt = inner_loop(prompts, params, sample, ctx, &mut memory);
        if let Some(carried) = &self.carried {
            carried.lock().expect("reflexion memory poisoned").insert(sample.id.clone(), memory.reflections.clone());
        }
        attempt
    }
}

/// Reflexion with a fresh memory, discarded when the attempt ends.
pub fn run_reflexion(
    prompts: &PromptSet,
    params: &StrategyParams,
    sample: &Sample,
    ctx: &AttemptContext<'_>,
) -> Result<Attempt, VerifierError> {
    let cap = params.reflexion.max_inner.saturating_sub(1) as usize;
    inner_loop(prompts, params, sample, ctx, &mut ReflexionMemory::new(cap))
}

fn inner_loop(
    prompts: &PromptSet,
    params: &StrategyParams,
    sample: &Sample,
    ctx: &AttemptContext<'_>,
    memory: &mut ReflexionMemory,
) -> Result<Attempt, VerifierError> {
    let max_inner = params.reflexion.max_inner;
    assert!(max_inner >= 1, "Reflexion needs max_inner of at least 1");
    let mut session = Session::new(ctx, params, sample, Method::Reflexion);
    let input = task_input(sample);
    let mut last: Option<String> = None;
    for i in 1..=max_inner {
        let (answer, trace) = match generate(&mut session, prompts, params, &input, memory) {
            Ok(g) => g,
            Err(e) => return Ok(session.finish(last, e.verdict())),
        };
        let verdict = match (&answer, sample.task) {
            (None, Task::Game24) => Verdict::unsolved("unparseable"),
            _ => session.verify(answer.as_deref())?,
        };
        if verdict.is_solved() || i == max_inner {
            return Ok(session.finish(answer, verdict));
        }
        last = answer;
        let prompt = prompts.render(
            "reflect",
            &[("input", &input), ("answer", &trace), ("feedback", verdict.detail())],
        );
        match session.call_one(CallPurpose::Reflect, prompt) {
            Ok(reflection) => memory.push(reflection.trim().to_string()),
            Err(e) => return Ok(session.finish(last, e.verdict())),
        }
    }
    unreachable!("the loop returns on its last iteration")
}

/// One answer under the current memory, with the text to reflect on.
fn generate(
    session: &mut Session<'_, '_>,
    prompts: &PromptSet,
    params: &StrategyParams,
    input: &str,
    memory: &ReflexionMemory,
) -> Result<(Option<String>, String), CallError> {
    let reflections = memory.render();
    if session.sample().task == Task::Hotpotqa {
        return react(session, prompts, input, &reflections, params.react_max_steps);
    }
    let prompt = prompts.render("answer", &[("input", input), ("reflections", &reflections)]);
    let text = session.call_one(CallPurpose::Answer, prompt)?;
    Ok((extract_cot(session.sample().task, &text), text))
}

/// Thought/Action/Observation loop over the document tools.
fn react(
    session: &mut Session<'_, '_>,
    prompts: &PromptSet,
    input: &str,
    reflections: &str,
    max_steps: u32,
) -> Result<(Option<String>, String), CallError> {
    let mut env = session.context().docs.clone().map(DocEnv::new);
    let mut scratchpad = String::new();
    for _ in 0..max_steps {
        let prompt = prompts.render(
            "answer",
            &[("input", input), ("reflections", reflections), ("scratchpad", &scratchpad)],
        );
        let text = session.call_one(CallPurpose::Answer, prompt)?;
        let step = text.trim();
        scratchpad.push_str(step);
        scratchpad.push('\n');
        match parse_action(step) {
            Some(Action::Finish(answer)) => return Ok((Some(answer), scratchpad)),
            Some(action) => {
                let observation = match env.as_mut() {
                    Some(env) => env.act(&action).unwrap_or_default(),
                    None => NO_STORE.to_string(),
                };
                scratchpad.push_str("Observation: ");
                scratchpad.push_str(&observation);
                scratchpad.push('\n');
            }
            None => {
                if let Some(answer) = marker_answer(step) {
                    return Ok((Some(answer), scratchpad));
                }
            }
        }
    }
    Ok((None, scratchpad))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::super::testing::Harness;
    use super::super::ReflexionParams;
    use super::*;
    use crate::doc_env::DocStore;
    use crate::types::SamplePayload;

    fn params(max_inner: u32) -> StrategyParams {
        StrategyParams { reflexion: ReflexionParams { max_inner, persist_memory: false }, ..Default::default() }
    }

    fn run(script: &[&str], max_inner: u32, sample: &Sample) -> (Attempt, u64) {
        let h = Harness::scripted(script);
        let a = run_reflexion(&PromptSet::builtin(sample.task, Method::Reflexion), &params(max_inner), sample, &h.ctx(1))
            .unwrap();
        (a, h.gateway.totals().calls)
    }

    #[test]
    fn wrong_reflect_correct() {
        let s = Sample::game24(0, [1, 2, 3, 4]);
        let (a, calls) = run(&["Answer: 1+2+3+4", "Reflection: multiply instead.", "Answer: (1+2+3)*4"], 2, &s);
        assert!(a.verdict.is_solved());
        assert_eq!(calls, 3);
        assert_eq!(a.usage.prompt_tokens, 30);
        let second = &a.transcript[2].prompt[0].content;
        assert!(second.contains("- Reflection: multiply instead."), "{second}");
        assert!(!a.transcript[0].prompt[0].content.contains("Reflection"));
    }

    #[test]
    fn single_inner_iteration_is_cot_plus_verification() {
        let s = Sample::game24(0, [1, 2, 3, 4]);
        let (a, calls) = run(&["Answer: 1+2+3+4", "unused"], 1, &s);
        assert!(!a.verdict.is_solved());
        assert_eq!(calls, 1);
        assert_eq!(a.verdict.detail(), "value 10 ≠ 24");
    }

    #[test]
    fn solved_first_try_skips_reflection() {
        let s = Sample::game24(0, [1, 2, 3, 4]);
        let (a, calls) = run(&["Answer: 1*2*3*4"], 3, &s);
        assert!(a.verdict.is_solved());
        assert_eq!(calls, 1);
    }

    #[test]
    fn memory_does_not_leak_into_the_next_trial() {
        let s = Sample::game24(0, [1, 2, 3, 4]);
        let h = Harness::scripted(&["Answer: 1+2+3+4", "Reflection: r", "Answer: 1+1", "Answer: 1*2*3*4"]);
        let strategy = super::super::builtin_strategy(Task::Game24, Method::Reflexion, params(2));
        let t1 = strategy.attempt(&s, &h.ctx(1)).unwrap();
        let t2 = strategy.attempt(&s, &h.ctx(2)).unwrap();
        assert_eq!(t1.initial_prompt(), t2.initial_prompt());
        assert!(t2.verdict.is_solved());
    }

    #[test]
    fn persisted_memory_is_opt_in() {
        let s = Sample::game24(0, [1, 2, 3, 4]);
        let h = Harness::scripted(&["Answer: 1+2+3+4", "Reflection: r", "Answer: 1+1", "Answer: 1*2*3*4"]);
        let mut p = params(2);
        p.reflexion.persist_memory = true;
        let strategy = super::super::builtin_strategy(Task::Game24, Method::Reflexion, p);
        let t1 = strategy.attempt(&s, &h.ctx(1)).unwrap();
        let t2 = strategy.attempt(&s, &h.ctx(2)).unwrap();
        assert_ne!(t1.initial_prompt(), t2.initial_prompt());
        assert!(t2.initial_prompt().unwrap().contains("- Reflection: r"));
    }

    #[test]
    fn memory_cap() {
        let mut m = ReflexionMemory::new(2);
        for r in ["a", "b", "c"] {
            m.push(r.into());
        }
        assert_eq!(m.reflections(), ["b", "c"]);
        let mut none = ReflexionMemory::new(0);
        none.push("x".into());
        assert!(none.render().is_empty());
    }

    #[test]
    fn react_uses_the_document_tools() {
        let store = Arc::new(DocStore::local([(
            "Eiffel Tower".to_string(),
            vec!["The Eiffel Tower is in Paris.".to_string(), "It was completed in 1889.".to_string()],
        )]));
        let sample = Sample::new(
            Task::Hotpotqa,
            3,
            SamplePayload::Question { question: "When was the Eiffel Tower completed?".into(), answer: "1889".into() },
        );
        let h = Harness::scripted(&[
            "Thought: search it.\nAction: Search[Eiffel Tower]",
            "Thought: find the year.\nAction: Lookup[completed]",
            "Thought: done.\nAction: Finish[1889]",
        ]);
        let mut ctx = h.ctx(1);
        ctx.docs = Some(store);
        let a = run_reflexion(&PromptSet::builtin(Task::Hotpotqa, Method::Reflexion), &params(2), &sample, &ctx).unwrap();
        assert!(a.verdict.is_solved());
        assert!(a.verdict.oracle_verified);
        assert_eq!(a.calls(), 3);
        let last_prompt = &a.transcript[2].prompt[0].content;
        assert!(last_prompt.contains("Observation: It was completed in 1889."), "{last_prompt}");
    }
}
