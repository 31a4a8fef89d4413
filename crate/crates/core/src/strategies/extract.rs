//! Answer extraction from raw completions.

use crate::doc_env::{parse_action, Action};
use crate::types::Task;

const MARKER: &str = "answer:";

/// Text after the last `Answer:` marker, trimmed. Case-insensitive; the
/// marker may be preceded by prose on the same line.
pub fn marker_answer(text: &str) -> Option<String> {
    let lower = text.to_ascii_lowercase();
    let pos = lower.rfind(MARKER)?;
    let rest = &text[pos + MARKER.len()..];
    let line = rest.lines().next().unwrap_or("").trim();
    (!line.is_empty()).then(|| line.to_string())
}

/// Body of the first fenced code block. The language tag is dropped.
pub fn first_code_block(text: &str) -> Option<String> {
    code_blocks(text).into_iter().next()
}

pub fn code_blocks(text: &str) -> Vec<String> {
    let mut blocks = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find("```") {
        let after = &rest[open + 3..];
        let Some(newline) = after.find('\n') else { break };
        let body = &after[newline + 1..];
        let Some(close) = body.find("```") else { break };
        blocks.push(body[..close].to_string());
        rest = &body[close + 3..];
    }
    blocks
}

/// IO: strip the answer marker if present, otherwise the whole completion.
pub fn extract_io(task: Task, completion: &str) -> Option<String> {
    let answer = match task {
        Task::Humaneval => first_code_block(completion).unwrap_or_else(|| completion.to_string()),
        Task::Hotpotqa => marker_answer(completion)
            .or_else(|| finish_answer(completion))
            .unwrap_or_else(|| completion.trim().to_string()),
        Task::Game24 => marker_answer(completion).unwrap_or_else(|| completion.trim().to_string()),
    };
    (!answer.trim().is_empty()).then_some(answer)
}

/// CoT: the last marker line. `None` means the completion is unparseable.
/// Code answers fall back to the whole completion.
pub fn extract_cot(task: Task, completion: &str) -> Option<String> {
    match task {
        Task::Humaneval => {
            let code = first_code_block(completion).unwrap_or_else(|| completion.to_string());
            (!code.trim().is_empty()).then_some(code)
        }
        Task::Hotpotqa => marker_answer(completion).or_else(|| finish_answer(completion)),
        Task::Game24 => marker_answer(completion),
    }
}

pub fn finish_answer(text: &str) -> Option<String> {
    match parse_action(text) {
        Some(Action::Finish(a)) if !a.is_empty() => Some(a),
        _ => None,
    }
}
