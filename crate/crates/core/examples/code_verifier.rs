//! Running candidate programs against their checks in a subprocess with a
//! timeout. Needs `python3` on PATH.
//!
//! ```text
//! cargo run -p retrials --example code_verifier
//! ```

use std::path::Path;
use std::time::Instant;

use retrials::datasets::load_humaneval;
use retrials::verifiers::code::{verify_code, CodeVerifierConfig};
use retrials::SamplePayload;

fn main() {
    let tasks = load_humaneval(&Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/humaneval/humaneval-161.jsonl")).unwrap();
    println!("{} programming tasks", tasks.len());
    let SamplePayload::Code(task) = &tasks[0].payload else { unreachable!() };
    let config = CodeVerifierConfig::default();
    if !config.interpreter.is_available() {
        eprintln!("{} is not available; nothing to run", config.interpreter.program());
        return;
    }

    let canonical = format!("{}{}", task.prompt, task.canonical_solution.as_deref().unwrap_or(""));
    let candidates = [
        ("canonical", canonical),
        ("wrong", format!("{}    return None\n", task.prompt)),
        ("looping", format!("{}    while True:\n        pass\n", task.prompt)),
    ];
    for (name, code) in candidates {
        let started = Instant::now();
        let v = verify_code(task, &code, &config).unwrap();
        let detail = if v.is_solved() { "solved".to_string() } else { v.detail().lines().last().unwrap_or("").to_string() };
        println!("{}: {name:<9} {detail} ({:.1?})", task.task_id, started.elapsed());
    }
}
