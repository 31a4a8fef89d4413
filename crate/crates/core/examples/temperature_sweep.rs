//! One run per sampling temperature, collected into a single curve file.
//! The mock backend ignores temperature, so each run here also gets its own
//! success probability and seed to stand in for its effect.
//!
//! ```text
//! cargo run -p retrials --example temperature_sweep
//! ```

use std::path::Path;

use retrials::config::ConfigFile;
use retrials::metrics::{self, Axis};

fn main() {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let dir = tempfile::tempdir().unwrap();
    let mut reports = Vec::new();
    for (i, temperature) in [0.3, 0.7, 1.0].into_iter().enumerate() {
        let text = serde_json::json!({
            "task": "game24",
            "method": "cot",
            "temperature": temperature,
            "budget": "0.03",
            "seed": i,
            "cost_model": "gpt-4o-mini",
            "datasets": { "game24": fixtures.join("game24/24.csv") },
            "backend": "mock",
            "mock": { "success_probability": 0.2 + 0.1 * i as f64, "prompt_tokens": 400, "completion_tokens": 200 },
        });
        let config = ConfigFile::from_json(&text.to_string(), dir.path()).unwrap();
        reports.push(config.prepare().unwrap().experiment.run().unwrap().report);
    }
    for family in metrics::temperature_sweep(&reports, Axis::Trials).unwrap() {
        let last = family.points.last().map(|p| p.y).unwrap_or(0.0);
        println!("T={}: {} trials, final success {last:.2}", family.temperature, family.points.len());
    }
    let families = metrics::temperature_sweep(&reports, Axis::Cost).unwrap();
    let points: Vec<_> = families.into_iter().flat_map(|f| f.points).collect();
    print!("{}", metrics::to_csv(&points));
}
