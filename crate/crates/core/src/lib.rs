//! Budget-constrained retrial harness for LLM reasoning strategies.
//!
//! Unsolved benchmark samples are re-attempted in later trials, with no
//! feedback carried over, until every sample is solved, the monetary budget
//! runs out, or a trial cap is reached. Strategies (IO, CoT, ToT, Reflexion)
//! are pluggable, verification is deterministic per task, and every backend
//! call is charged exactly from the provider-reported token usage.
//!
//! The crate is organised around the runnable programs in `examples/`:
//!
//! ```text
//! cargo run -p retrials --example cost_accounting
//! cargo run -p retrials --example game24_oracle
//! cargo run -p retrials --example retrial_run
//! cargo run -p retrials --example tot_beam
//! cargo run -p retrials --example reflexion_inner_loop
//! cargo run -p retrials --example hotpotqa_tools
//! cargo run -p retrials --example code_verifier
//! cargo run -p retrials --example resume_run
//! cargo run -p retrials --example temperature_sweep
//! cargo run -p retrials --example http_backend   # needs a live endpoint
//! ```
//!
//! The `retrials` binary is a thin driver over [`cli`] with `run`, `resume`
//! and `sweep` subcommands.

pub mod cli;
pub mod config;
pub mod cost;
pub mod datasets;
pub mod doc_env;
pub mod engine;
pub mod gateway;
pub mod metrics;
pub mod rng;
pub mod strategies;
pub mod types;
pub mod verifiers;

pub use cost::{cost_of, Budget, CostModel, MoneyUsd, TokenUsage};
pub use engine::{Experiment, RunOutcome, RunReport, TrialRecord};
pub use types::{Attempt, Method, Outcome, Sample, SamplePayload, Task, Verdict};
