//! Interrupting a run after its first trial and resuming from the ledger.
//! The resumed report matches an uninterrupted run exactly.
//!
//! ```text
//! cargo run -p retrials --example resume_run
//! ```

use std::path::Path;

use retrials::config::ConfigFile;
use retrials::engine::{read_ledger, Interrupt};

fn config(out: &Path) -> ConfigFile {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let text = serde_json::json!({
        "task": "game24",
        "method": "io",
        "budget": "0.05",
        "max_trials": 5,
        "seed": 3,
        "cost_model": "gpt-4o-mini",
        "datasets": { "game24": fixtures.join("game24/24.csv") },
        "backend": "mock",
        "mock": { "success_probability": 0.3, "prompt_tokens": 400, "completion_tokens": 200 },
        "out": out,
    });
    ConfigFile::from_json(&text.to_string(), out).unwrap()
}

fn main() {
    let dir = tempfile::tempdir().unwrap();

    let whole = config(&dir.path().join("whole")).prepare().unwrap().experiment.run().unwrap();

    let prepared = config(&dir.path().join("interrupted")).prepare().unwrap();
    let ledger = prepared.run_dir.join("ledger.jsonl");
    let err = prepared.experiment.with_interrupt(Interrupt::AfterTrial(1)).run().unwrap_err();
    println!("first invocation stopped: {err}");
    let contents = read_ledger(&ledger).unwrap();
    println!("ledger holds {} attempts and {} trial records", contents.attempts.len(), contents.trials.len());

    let resumed = config(&dir.path().join("interrupted")).prepare().unwrap().experiment.resume().unwrap();
    println!(
        "resumed: {} trials, {}/{} solved, ${} spent",
        resumed.report.trials.len(),
        resumed.report.solved,
        resumed.report.total,
        resumed.report.total_cost
    );
    println!("identical to the uninterrupted run: {}", resumed.report == whole.report);
}
