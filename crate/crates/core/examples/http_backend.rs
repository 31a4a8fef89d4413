//! One call through an OpenAI-compatible endpoint, charged at gpt-4o-mini
//! prices. Reads the endpoint and key from `OPENAI_BASE_URL` and
//! `OPENAI_API_KEY`.
//!
//! ```text
//! OPENAI_BASE_URL=https://api.openai.com/v1 OPENAI_API_KEY=... \
//!     cargo run -p retrials --example http_backend
//! ```

use retrials::gateway::{CallPurpose, ChatBackend, ChatMessage, ChatRequest, HttpBackend, HttpConfig, RequestMeta};
use retrials::strategies::{marker_answer, PromptSet};
use retrials::verifiers::verify_game24;
use retrials::{cost_of, CostModel, Method, Task};

fn main() {
    let config = match HttpConfig::from_env("OPENAI_BASE_URL", "OPENAI_API_KEY", "gpt-4o-mini") {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}; set OPENAI_BASE_URL and OPENAI_API_KEY to try a live call");
            return;
        }
    };
    let backend = HttpBackend::new(config).unwrap();
    let prompt = PromptSet::builtin(Task::Game24, Method::Cot).render("prompt", &[("input", "4 9 10 13")]);
    let request = ChatRequest::new(vec![ChatMessage::user(prompt)], 0.7, RequestMeta::new("game24-demo", 1, 0, CallPurpose::Answer));
    match backend.complete(&request) {
        Ok(response) => {
            let text = &response.completions[0];
            println!("{text}");
            let verdict = verify_game24(&[4, 9, 10, 13], marker_answer(text).as_deref().unwrap_or(""));
            println!("verdict: {}", if verdict.is_solved() { "solved" } else { verdict.detail() });
            println!("usage {:?}, cost ${}", response.usage, cost_of(&response.usage, &CostModel::gpt_4o_mini()));
        }
        Err(e) => eprintln!("call failed: {e}"),
    }
}
