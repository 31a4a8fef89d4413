//! Reflexion inside one attempt: answer, reflect on the rejection, answer
//! again. The reflection memory is cleared before the next trial.
//!
//! ```text
//! cargo run -p retrials --example reflexion_inner_loop
//! ```

use std::collections::BTreeMap;
use std::sync::Arc;

use retrials::engine::RunConfig;
use retrials::gateway::{configure_mock, Gateway, MockMode, MockScript};
use retrials::strategies::{builtin_strategy, ReflexionParams, StrategyParams};
use retrials::verifiers::TaskVerifier;
use retrials::{CostModel, Experiment, Method, Sample, Task, TokenUsage};

fn main() {
    let sample = Sample::game24(0, [4, 9, 10, 13]);
    let mut queues = BTreeMap::new();
    // Trial 1: a wrong answer, a reflection, another wrong answer.
    queues.insert(
        (sample.id.clone(), 1),
        ["Answer: 13+9+10-4", "The sum overshoots; products are needed.", "Answer: 13*9-10*4"].map(String::from).to_vec(),
    );
    // Trial 2: wrong, reflect, right.
    queues.insert(
        (sample.id.clone(), 2),
        ["Answer: 4*9-13+10", "Pair the differences and multiply them.", "Answer: (13-9)*(10-4)"].map(String::from).to_vec(),
    );
    let script = MockScript { mode: MockMode::PerAttempt(queues), per_call_usage: TokenUsage::new(500, 150), seed: 0 };
    let mock = configure_mock(script).unwrap();

    let params = StrategyParams { reflexion: ReflexionParams { max_inner: 2, persist_memory: false }, ..StrategyParams::default() };
    let mut config = RunConfig::new(Task::Game24, Method::Reflexion, "1".parse().unwrap(), CostModel::gpt_4o_mini());
    config.strategy = params.clone();
    config.max_trials = Some(3);
    let strategy = builtin_strategy(Task::Game24, Method::Reflexion, params);
    let experiment = Experiment::new(config, vec![sample], strategy, TaskVerifier::default(), Gateway::new(Arc::new(mock)));

    let outcome = experiment.run().unwrap();
    for a in &outcome.attempts {
        println!("trial {}: {} calls, answer {:?}, {}", a.trial_index, a.calls(), a.extracted_answer, if a.verdict.is_solved() { "solved" } else { a.verdict.detail() });
    }
    let first = outcome.attempts[0].initial_prompt();
    let second = outcome.attempts[1].initial_prompt();
    println!("trial 2 starts from the same prompt as trial 1: {}", first == second);
}
