//! Deterministic answer verification per task.

pub mod code;
pub mod em;
pub mod expr;
pub mod game24;

use thiserror::Error;

pub use code::{verify_code, CodeTask, CodeVerifierConfig, CodeVerifyError, InterpreterCommand};
pub use em::{normalize_answer, verify_em};
pub use expr::{eval_exact, parse_expression, EvalError, Expr, ParseError};
pub use game24::{game24_solvable, verify_game24, Solvability};

use crate::types::{Sample, SamplePayload, Task, Verdict};

#[derive(Debug, Error)]
pub enum VerifierError {
    #[error(transparent)]
    Code(#[from] CodeVerifyError),
}

/// Dispatches a sample to the verifier for its task.
#[derive(Debug, Clone, Default)]
pub struct TaskVerifier {
    pub code: CodeVerifierConfig,
}

impl TaskVerifier {
    pub fn new(code: CodeVerifierConfig) -> Self {
        Self { code }
    }

    /// Configuration problems that must abort a run before its first trial.
    pub fn preflight(&self, task: Task) -> Result<(), VerifierError> {
        if task == Task::Humaneval && !self.code.interpreter.is_available() {
            let raw: String = self.code.interpreter.clone().into();
            return Err(CodeVerifyError::InterpreterMissing(raw).into());
        }
        Ok(())
    }

    pub fn verify(&self, sample: &Sample, answer: Option<&str>) -> Result<Verdict, VerifierError> {
        let Some(answer) = answer.filter(|a| !a.trim().is_empty()) else {
            let v = Verdict::unsolved("no answer extracted");
            return Ok(if sample.task == Task::Hotpotqa { v.with_oracle() } else { v });
        };
        Ok(match &sample.payload {
            SamplePayload::Game24 { numbers } => verify_game24(numbers, answer),
            SamplePayload::Code(task) => verify_code(task, answer, &self.code)?,
            SamplePayload::Question { answer: oracle, .. } => verify_em(oracle, answer),
        })
    }
}
