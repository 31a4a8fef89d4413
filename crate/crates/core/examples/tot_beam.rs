//! Tree-of-Thoughts beam search on a scripted tree.
//!
//! One proposal call yields two candidate answers that evaluate equally.
//! The correct one ranks second, so a beam of one misses it and a beam of
//! two finds it.
//!
//! ```text
//! cargo run -p retrials --example tot_beam
//! ```

use std::sync::Arc;

use retrials::engine::RunConfig;
use retrials::gateway::{Gateway, MockBackend};
use retrials::strategies::{builtin_strategy, StrategyParams, TotParams};
use retrials::verifiers::TaskVerifier;
use retrials::{CostModel, Experiment, Method, Sample, Task, TokenUsage};

fn run(breadth: u32) {
    let script = ["Answer: 1+2+3+4\nAnswer: (1+2+3)*4", "likely", "likely"].map(String::from).to_vec();
    let mock = MockBackend::scripted(script, TokenUsage::new(300, 120));
    let tot = TotParams { k: 5, breadth, depth: 1 };
    let params = StrategyParams { tot, ..StrategyParams::default() };
    let mut config = RunConfig::new(Task::Game24, Method::Tot, "1".parse().unwrap(), CostModel::gpt_4o_mini());
    config.max_trials = Some(1);
    config.strategy = params.clone();
    let strategy = builtin_strategy(Task::Game24, Method::Tot, params);
    let sample = Sample::game24(0, [1, 2, 3, 4]);
    let experiment = Experiment::new(config, vec![sample], strategy, TaskVerifier::default(), Gateway::new(Arc::new(mock)));

    let attempt = experiment.run().unwrap().attempts.remove(0);
    println!(
        "breadth {breadth}: answer {:?}, {}, {} calls (at most {})",
        attempt.extracted_answer.as_deref().unwrap_or("-"),
        if attempt.verdict.is_solved() { "solved" } else { "unsolved" },
        attempt.calls(),
        tot.max_calls()
    );
    for x in &attempt.transcript {
        println!("  {:?}: {:?}", x.purpose, x.completions[0]);
    }
}

fn main() {
    run(1);
    run(2);
}
