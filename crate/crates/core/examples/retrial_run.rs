//! A budget-limited retrial run against the deterministic mock backend.
//!
//! Every sample is attempted in trial 1, only the unsolved ones in later
//! trials, until all are solved, the budget runs out or the trial cap hits.
//!
//! ```text
//! cargo run -p retrials --example retrial_run
//! ```

use std::path::Path;
use std::sync::Arc;

use retrials::datasets::load_game24;
use retrials::engine::RunConfig;
use retrials::gateway::{configure_mock, AnswerKey, Gateway, MockScript};
use retrials::metrics::{self, Axis};
use retrials::strategies::{builtin_strategy, StrategyParams};
use retrials::verifiers::TaskVerifier;
use retrials::{CostModel, Experiment, Method, Task, TokenUsage};

fn main() {
    let data = load_game24(&Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/game24/24.csv")).unwrap();
    let samples = data.selected;

    let answers = AnswerKey::for_samples(&samples);
    let mock = configure_mock(MockScript::bernoulli(0.3, answers, TokenUsage::new(400, 200), 7)).unwrap();

    let mut config = RunConfig::new(Task::Game24, Method::Cot, "0.05".parse().unwrap(), CostModel::gpt_4o_mini());
    config.max_trials = Some(10);
    config.seed = 7;
    let strategy = builtin_strategy(Task::Game24, Method::Cot, StrategyParams::default());
    let experiment = Experiment::new(config, samples, strategy, TaskVerifier::default(), Gateway::new(Arc::new(mock)));

    let outcome = experiment.run().unwrap();
    let report = &outcome.report;
    for t in &report.trials {
        println!(
            "trial {:>2}: attempted {:>3}, newly solved {:>3}, solved {:>3}, spent ${}{}",
            t.trial_index,
            t.attempted_sample_ids.len(),
            t.newly_solved_ids.len(),
            t.cumulative_solved_count,
            t.cumulative_cost,
            if t.halted_mid_trial { " (budget ran out)" } else { "" }
        );
    }
    println!("halt: {:?}", report.halt);
    print!("{}", metrics::to_csv(&metrics::success_curve(report, Axis::Cost)));
}
