//! The Search/Lookup/Finish tool environment used for multi-hop questions,
//! over the bundled fixture documents.
//!
//! ```text
//! cargo run -p retrials --example hotpotqa_tools
//! ```

use std::path::Path;
use std::sync::Arc;

use retrials::datasets::load_hotpotqa;
use retrials::doc_env::{parse_action, Action, DocEnv, DocStore};
use retrials::verifiers::verify_em;
use retrials::SamplePayload;

fn main() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/hotpotqa");
    let store = Arc::new(DocStore::load_dir(&root.join("docs")).unwrap());
    println!("{} documents loaded", store.len());

    let samples = load_hotpotqa(&root.join("hotpotqa-fixture.json"), 5, 0).unwrap();
    for s in &samples {
        if let SamplePayload::Question { question, answer } = &s.payload {
            println!("{}: {question} (gold: {answer})", s.id);
        }
    }

    let mut env = DocEnv::new(store);
    let steps = [
        "Thought: find the tower first.\nAction: Search[Eiffel Tower]",
        "Action: Lookup[completed]",
        "Action: Search[Eiffel]",
        "Action: Finish[Paris]",
    ];
    for step in steps {
        let action = parse_action(step).expect("every step names an action");
        match &action {
            Action::Finish(answer) => {
                let v = verify_em(answer, "Paris");
                println!("{action:?} -> {}", if v.is_solved() { "exact match" } else { v.detail() });
            }
            _ => println!("{action:?} -> {}", env.act(&action).unwrap_or_default()),
        }
    }
}
