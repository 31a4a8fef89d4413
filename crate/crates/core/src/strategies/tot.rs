//! Tree-of-thoughts as breadth-first beam search.
//!
//! Each level proposes up to `k` children for every kept node, scores all
//! of them with the evaluator prompt and keeps the best `breadth`. Kept
//! nodes that carry a complete answer are verified in rank order and the
//! first verified answer ends the search. A level costs at most
//! `breadth` propose calls plus `breadth * k` evaluate calls.

use serde::{Deserialize, Serialize};

use super::extract::{code_blocks, finish_answer, marker_answer};
use super::{task_input, AttemptContext, CallError, PromptSet, Session, StrategyParams};
use crate::doc_env::{parse_action, DocEnv};
use crate::gateway::CallPurpose;
use crate::types::{Attempt, Method, Sample, Task, Verdict};
use crate::verifiers::expr::{parse_expression, Expr};
use crate::verifiers::game24::{looks_final, parse_left_numbers};
use crate::verifiers::VerifierError;

pub const SCORE_SURE: f64 = 20.0;
pub const SCORE_LIKELY: f64 = 1.0;
pub const SCORE_IMPOSSIBLE: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TotParams {
    /// Children kept per proposal call.
    pub k: u32,
    pub breadth: u32,
    pub depth: u32,
}

impl Default for TotParams {
    fn default() -> Self {
        Self { k: 5, breadth: 5, depth: 3 }
    }
}

impl TotParams {
    /// Upper bound on backend calls for one search.
    pub fn max_calls(&self) -> u64 {
        let (k, b, d) = (self.k as u64, self.breadth as u64, self.depth as u64);
        d * (b + b * k)
    }
}

#[derive(Debug, Clone)]
pub struct ThoughtNode {
    /// What is left to solve, e.g. the remaining numbers.
    pub partial_state: String,
    pub path: Vec<String>,
    pub value_score: f64,
    /// Game of 24: remaining (value, expression) pairs, when every step so
    /// far could be tracked.
    exprs: Option<Vec<(String, String)>>,
    env: Option<DocEnv>,
}

impl ThoughtNode {
    pub fn root(sample: &Sample, ctx: &AttemptContext<'_>) -> Self {
        let (partial_state, exprs) = match sample.task {
            Task::Game24 => {
                let input = task_input(sample);
                let pairs = input.split_whitespace().map(|n| (n.to_string(), n.to_string())).collect();
                (input, Some(pairs))
            }
            _ => (String::new(), None),
        };
        let env = match sample.task {
            Task::Hotpotqa => ctx.docs.clone().map(DocEnv::new),
            _ => None,
        };
        Self { partial_state, path: Vec::new(), value_score: 0.0, exprs, env }
    }

    pub fn depth(&self) -> usize {
        self.path.len()
    }

    fn history(&self) -> String {
        self.path.join("\n")
    }

    fn child(&self, task: Task, thought: &str) -> ThoughtNode {
        let mut node = self.clone();
        node.value_score = 0.0;
        let mut step = thought.to_string();
        match task {
            Task::Game24 => {
                if marker_answer(thought).is_none() {
                    if let Some(left) = parse_left_numbers(thought) {
                        node.partial_state = left.join(" ");
                    }
                    node.exprs = node.exprs.as_deref().and_then(|pool| combine_step(pool, thought));
                }
            }
            Task::Hotpotqa => {
                if let (Some(env), Some(action)) = (node.env.as_mut(), parse_action(thought)) {
                    if let Some(observation) = env.act(&action) {
                        step = format!("{thought}\nObservation: {observation}");
                    }
                }
            }
            Task::Humaneval => {}
        }
        node.path.push(step);
        node
    }

    /// The answer this node commits to, if it is terminal.
    fn answer(&self, task: Task, at_max_depth: bool) -> Option<String> {
        let last = self.path.last()?;
        match task {
            Task::Game24 => marker_answer(last)
                .or_else(|| match self.exprs.as_deref() {
                    Some([(value, expr)]) if value == "24" => Some(expr.clone()),
                    _ => None,
                })
                .or_else(|| (at_max_depth && looks_final(last)).then(|| last.trim().to_string())),
            Task::Humaneval => {
                let code = code_blocks(last).into_iter().next().unwrap_or_else(|| last.clone());
                (!code.trim().is_empty()).then_some(code)
            }
            Task::Hotpotqa => {
                let thought = last.split("\nObservation:").next().unwrap_or(last);
                finish_answer(thought).or_else(|| marker_answer(thought))
            }
        }
    }
}

/// Applies a step like `4 + 8 = 12 (left: 4 6 12)` to the expression pool.
fn combine_step(pool: &[(String, String)], thought: &str) -> Option<Vec<(String, String)>> {
    let (lhs, rhs) = thought.split_once('=')?;
    let result = rhs.split('(').next()?.trim();
    if result.is_empty() {
        return None;
    }
    let Expr::Binary(op, a, b) = parse_expression(lhs.trim()).ok()? else {
        return None;
    };
    let (Expr::Num(a), Expr::Num(b)) = (*a, *b) else {
        return None;
    };
    let mut pool = pool.to_vec();
    let mut take = |v: u64| {
        let i = pool.iter().position(|(value, _)| *value == v.to_string())?;
        Some(pool.remove(i).1)
    };
    let ea = take(a)?;
    let eb = take(b)?;
    pool.push((result.to_string(), format!("({ea} {} {eb})", op.symbol())));
    Some(pool)
}

fn split_proposals(task: Task, text: &str) -> Vec<String> {
    match task {
        Task::Humaneval => {
            let blocks = code_blocks(text);
            if blocks.is_empty() {
                vec![text.trim().to_string()]
            } else {
                blocks.into_iter().map(|b| format!("```python\n{b}```")).collect()
            }
        }
        _ => text
            .lines()
            .map(|l| l.trim().trim_start_matches(['-', '*']).trim())
            .filter(|l| !l.is_empty() && !l.ends_with(':'))
            .map(str::to_string)
            .collect(),
    }
}

fn normalized(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Up to `k` children of `node`, deduplicated on whitespace-normalized
/// text. A backend error yields no children; a refused admission is
/// returned as an error so the search can stop.
///
/// # Panics
/// When `node` is already at `max_depth`.
pub fn tot_propose(
    session: &mut Session<'_, '_>,
    prompts: &PromptSet,
    node: &ThoughtNode,
    k: usize,
    max_depth: usize,
) -> Result<Vec<ThoughtNode>, CallError> {
    assert!(node.depth() < max_depth, "tot_propose called on a node at max depth {max_depth}");
    let task = session.sample().task;
    let prompt = prompts.render(
        "propose",
        &[
            ("input", &task_input(session.sample())),
            ("state", &node.partial_state),
            ("history", &node.history()),
            ("k", &k.to_string()),
        ],
    );
    let completions = match session.call(CallPurpose::Propose, prompt) {
        Ok(c) => c,
        Err(CallError::Budget) => return Err(CallError::Budget),
        Err(CallError::Backend(_)) => return Ok(Vec::new()),
    };
    let mut seen = Vec::new();
    let mut children = Vec::new();
    for thought in completions.iter().flat_map(|c| split_proposals(task, c)) {
        if children.len() == k {
            break;
        }
        let key = normalized(&thought);
        if key.is_empty() || seen.contains(&key) {
            continue;
        }
        seen.push(key);
        children.push(node.child(task, &thought));
    }
    Ok(children)
}

/// Score for the evaluator's last label: sure 20, likely 1, impossible or
/// anything else 0.001.
pub fn score_label(text: &str) -> f64 {
    let lower = text.to_lowercase();
    let last = ["sure", "likely", "impossible"]
        .into_iter()
        .filter_map(|label| lower.rfind(label).map(|pos| (pos, label)))
        .max_by_key(|(pos, _)| *pos);
    match last {
        Some((_, "sure")) => SCORE_SURE,
        Some((_, "likely")) => SCORE_LIKELY,
        _ => SCORE_IMPOSSIBLE,
    }
}

pub fn tot_evaluate(session: &mut Session<'_, '_>, prompts: &PromptSet, node: &ThoughtNode) -> Result<f64, CallError> {
    let (parent_history, thought) = match node.path.split_last() {
        Some((last, rest)) => (rest.join("\n"), last.as_str()),
        None => (String::new(), ""),
    };
    let prompt = prompts.render(
        "evaluate",
        &[
            ("input", &task_input(session.sample())),
            ("state", &node.partial_state),
            ("history", &parent_history),
            ("thought", thought),
        ],
    );
    match session.call_one(CallPurpose::Evaluate, prompt) {
        Ok(text) => Ok(score_label(&text)),
        Err(CallError::Budget) => Err(CallError::Budget),
        Err(CallError::Backend(_)) => Ok(SCORE_IMPOSSIBLE),
    }
}

pub fn tot_search(
    prompts: &PromptSet,
    params: &StrategyParams,
    sample: &Sample,
    ctx: &AttemptContext<'_>,
) -> Result<Attempt, VerifierError> {
    let TotParams { k, breadth, depth } = params.tot;
    assert!(breadth >= 1 && depth >= 1 && k >= 1, "ToT needs k, breadth and depth of at least 1");
    let (k, breadth, depth) = (k as usize, breadth as usize, depth as usize);
    let mut session = Session::new(ctx, params, sample, Method::Tot);
    let mut frontier = vec![ThoughtNode::root(sample, ctx)];
    let mut last_tried: Option<(String, Verdict)> = None;

    for level in 1..=depth {
        let mut candidates = Vec::new();
        for node in &frontier {
            match tot_propose(&mut session, prompts, node, k, depth) {
                Ok(children) => candidates.extend(children),
                Err(e) => return Ok(session.finish(last_tried.map(|(a, _)| a), e.verdict())),
            }
        }
        for node in candidates.iter_mut() {
            match tot_evaluate(&mut session, prompts, node) {
                Ok(score) => node.value_score = score,
                Err(e) => return Ok(session.finish(last_tried.map(|(a, _)| a), e.verdict())),
            }
        }
        // stable: equal scores keep proposal order
        candidates.sort_by(|a, b| b.value_score.total_cmp(&a.value_score));
        candidates.truncate(breadth);

        let mut next = Vec::new();
        for node in candidates {
            match node.answer(sample.task, level == depth) {
                Some(answer) => {
                    let verdict = session.verify(Some(&answer))?;
                    if verdict.is_solved() {
                        return Ok(session.finish(Some(answer), verdict));
                    }
                    last_tried = Some((answer, verdict));
                }
                None if level < depth => next.push(node),
                None => {}
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok(match last_tried {
        Some((answer, verdict)) => session.finish(Some(answer), verdict),
        None => {
            let verdict = session.verify(None)?;
            session.finish(None, verdict)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::super::testing::Harness;
    use super::*;
    use crate::verifiers::verify_game24;

    fn search(script: &[&str], tot: TotParams, sample: &Sample) -> (Attempt, u64) {
        let h = Harness::scripted(script);
        let params = StrategyParams { tot, ..StrategyParams::default() };
        let a = tot_search(&PromptSet::builtin(sample.task, Method::Tot), &params, sample, &h.ctx(1)).unwrap();
        (a, h.gateway.totals().calls)
    }

    fn params(k: u32, breadth: u32, depth: u32) -> TotParams {
        TotParams { k, breadth, depth }
    }

    #[test]
    fn minimal_tree() {
        let s = Sample::game24(0, [1, 2, 3, 4]);
        let (a, calls) = search(&["Answer: (1+2+3)*4", "sure"], params(5, 1, 1), &s);
        assert!(a.verdict.is_solved());
        assert_eq!(calls, 2);
        assert_eq!(a.transcript[0].purpose, CallPurpose::Propose);
        assert_eq!(a.transcript[1].purpose, CallPurpose::Evaluate);
    }

    #[test]
    fn beam_width_decides_the_two_leaf_tree() {
        let s = Sample::game24(0, [1, 2, 3, 4]);
        let script = ["Answer: 1+2+3+4\nAnswer: (1+2+3)*4", "likely", "likely"];
        let (narrow, c1) = search(&script, params(5, 1, 1), &s);
        assert!(!narrow.verdict.is_solved());
        assert_eq!(narrow.extracted_answer.as_deref(), Some("1+2+3+4"));
        let (wide, c2) = search(&script, params(5, 2, 1), &s);
        assert!(wide.verdict.is_solved());
        assert_eq!((c1, c2), (3, 3));
    }

    #[test]
    fn scores_rank_but_never_prune() {
        let s = Sample::game24(0, [1, 2, 3, 4]);
        let script = [
            "1+2=3 (left: 3 3 4)\n3*4=12 (left: 1 2 12)\n1*2=2 (left: 2 3 4)",
            "impossible",
            "impossible",
            "impossible",
            "Answer: 1+2+3+4",
            "Answer: 1+2+3+4",
            "impossible",
            "impossible",
        ];
        let tot = params(3, 2, 2);
        let (a, calls) = search(&script, tot, &s);
        assert!(!a.verdict.is_solved());
        assert_eq!(calls, 8);
        assert!(calls <= tot.max_calls());
    }

    #[test]
    fn duplicate_proposals_are_dropped() {
        let s = Sample::game24(0, [1, 2, 3, 4]);
        let h = Harness::scripted(&["1*2=2 (left: 2 3 4)\n  1*2=2  (left:   2 3 4)\n\n3+4=7 (left: 1 2 7)"]);
        let p = StrategyParams::default();
        let ctx = h.ctx(1);
        let mut session = Session::new(&ctx, &p, &s, Method::Tot);
        let prompts = PromptSet::builtin(Task::Game24, Method::Tot);
        let root = ThoughtNode::root(&s, &ctx);
        let children = tot_propose(&mut session, &prompts, &root, 5, 3).unwrap();
        assert_eq!(children.len(), 2);
        assert_eq!(children[0].partial_state, "2 3 4");
        assert_eq!(children[1].path, vec!["3+4=7 (left: 1 2 7)"]);
    }

    #[test]
    fn k_one_is_a_greedy_chain() {
        let s = Sample::game24(0, [1, 2, 3, 4]);
        let h = Harness::scripted(&["1*2=2 (left: 2 3 4)\n3+4=7 (left: 1 2 7)"]);
        let p = StrategyParams::default();
        let ctx = h.ctx(1);
        let mut session = Session::new(&ctx, &p, &s, Method::Tot);
        let prompts = PromptSet::builtin(Task::Game24, Method::Tot);
        let children = tot_propose(&mut session, &prompts, &ThoughtNode::root(&s, &ctx), 1, 3).unwrap();
        assert_eq!(children.len(), 1);
    }

    #[test]
    #[should_panic(expected = "max depth")]
    fn proposing_at_max_depth_panics() {
        let s = Sample::game24(0, [1, 2, 3, 4]);
        let h = Harness::scripted(&[]);
        let p = StrategyParams::default();
        let ctx = h.ctx(1);
        let mut session = Session::new(&ctx, &p, &s, Method::Tot);
        let prompts = PromptSet::builtin(Task::Game24, Method::Tot);
        let mut node = ThoughtNode::root(&s, &ctx);
        node.path.push("1*2=2 (left: 2 3 4)".into());
        let _ = tot_propose(&mut session, &prompts, &node, 5, 1);
    }

    #[test]
    fn backend_error_makes_a_dead_end() {
        let s = Sample::game24(0, [1, 2, 3, 4]);
        let (a, calls) = search(&[], params(5, 5, 3), &s);
        assert_eq!(calls, 0);
        assert_eq!(a.transcript.len(), 1);
        assert_eq!(a.verdict.detail(), "no answer extracted");
    }

    #[test]
    fn label_mapping() {
        assert_eq!(score_label("sure"), 20.0);
        assert_eq!(score_label("Likely"), 1.0);
        assert_eq!(score_label("impossible"), 0.001);
        assert_eq!(score_label("banana"), 0.001);
        assert_eq!(score_label("not sure... impossible"), 0.001);
        assert_eq!(score_label("impossible? no, sure"), 20.0);
    }

    #[test]
    fn steps_compose_into_an_answer() {
        let s = Sample::game24(0, [1, 2, 3, 4]);
        let script = [
            "1*2=2 (left: 2 3 4)",
            "likely",
            "2*3=6 (left: 4 6)",
            "likely",
            "4*6=24 (left: 24)",
            "sure",
        ];
        let (a, calls) = search(&script, params(5, 1, 3), &s);
        assert!(a.verdict.is_solved(), "{a:?}");
        assert_eq!(calls, 6);
        let answer = a.extracted_answer.unwrap();
        assert!(verify_game24(&[1, 2, 3, 4], &answer).is_solved());
    }

    #[test]
    fn combine_step_tracks_expressions() {
        let pool: Vec<_> = ["4", "4", "6", "8"].iter().map(|n| (n.to_string(), n.to_string())).collect();
        let p = combine_step(&pool, "4 + 8 = 12 (left: 4 6 12)").unwrap();
        assert_eq!(p, vec![("4".into(), "4".into()), ("6".into(), "6".into()), ("12".into(), "(4 + 8)".into())]);
        assert!(combine_step(&pool, "5 + 8 = 13").is_none());
        assert!(combine_step(&pool, "no step here").is_none());
    }
}
