//! Exact per-call charging and budget admission.
//!
//! ```text
//! cargo run -p retrials --example cost_accounting
//! ```

use retrials::cost::SharedBudget;
use retrials::{cost_of, Budget, CostModel, MoneyUsd, TokenUsage};

fn main() {
    let model = CostModel::gpt_4o_mini();
    let call = TokenUsage::new(400, 200);
    let per_call = cost_of(&call, &model);
    println!("{} prompt + {} completion tokens on {} cost ${per_call}", call.prompt_tokens, call.completion_tokens, model.model_id);

    // Linear and exact: a thousand calls cost exactly a thousand times one.
    let thousand = TokenUsage::new(400_000, 200_000);
    assert_eq!(cost_of(&thousand, &model), MoneyUsd::from_picos(per_call.picos() * 1000));

    let llama = CostModel::llama_3_3_70b();
    println!("the same call on {} costs ${}", llama.model_id, cost_of(&call, &llama));

    // Admission is checked before a call starts, so spend may overshoot the
    // limit by at most one call.
    let budget = SharedBudget::new(Budget::new("0.001".parse().unwrap()));
    let mut calls = 0;
    while budget.can_afford() {
        budget.charge(per_call);
        calls += 1;
    }
    let snapshot = budget.snapshot();
    println!("a $0.001 budget admits {calls} calls and ends at ${} spent", snapshot.spent);

    // Prices that do not divide into whole picodollars per token are refused.
    let err = CostModel::new("odd", "0.0000001".parse().unwrap(), "1".parse().unwrap()).unwrap_err();
    println!("rejected price: {err}");
}
