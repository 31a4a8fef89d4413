//! Functional-correctness checks for generated programs.
//!
//! The candidate and the task's check program are written to a fresh
//! temporary directory and run through a configured interpreter command as a
//! subprocess with a wall-clock timeout. The environment is cleared and HTTP
//! proxies point at a closed local port, which keeps well-behaved code off
//! the network. This is not an OS-level sandbox: operators who run untrusted
//! model output should wrap the interpreter command themselves.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::Verdict;

/// Captured output kept in verdicts and ledger records.
pub const OUTPUT_TAIL_BYTES: usize = 4096;
const POLL_INTERVAL: Duration = Duration::from_millis(10);
const DEAD_PROXY: &str = "http://127.0.0.1:9";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeTask {
    pub task_id: String,
    /// Function signature plus docstring.
    pub prompt: String,
    pub entry_point: String,
    /// Check program defining `check(candidate)`.
    pub tests: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub canonical_solution: Option<String>,
}

impl CodeTask {
    /// Full program: candidate, then the checks, then `check(entry_point)`.
    /// A candidate that does not define the entry point is treated as a
    /// body completion and appended to the prompt.
    pub fn program(&self, candidate: &str) -> String {
        let defines_entry = candidate.contains(&format!("def {}", self.entry_point));
        let mut program = String::new();
        if !defines_entry {
            program.push_str(&self.prompt);
        }
        program.push_str(candidate);
        program.push_str("\n\n");
        program.push_str(&self.tests);
        program.push_str(&format!("\n\ncheck({})\n", self.entry_point));
        program
    }
}

#[derive(Debug, Error)]
pub enum CodeVerifyError {
    #[error("interpreter command {0:?} could not be started (not installed or not on PATH)")]
    InterpreterMissing(String),
    #[error("interpreter command must contain a {{file}} placeholder: {0:?}")]
    BadCommand(String),
    #[error("scratch workspace: {0}")]
    Io(#[from] io::Error),
}

/// An interpreter invocation such as `python3 {file}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct InterpreterCommand {
    raw: String,
    program: String,
    args: Vec<String>,
}

impl InterpreterCommand {
    pub fn parse(raw: &str) -> Result<Self, CodeVerifyError> {
        let mut parts = raw.split_whitespace().map(str::to_string);
        let program = parts.next().ok_or_else(|| CodeVerifyError::BadCommand(raw.to_string()))?;
        let args: Vec<String> = parts.collect();
        if !args.iter().any(|a| a.contains("{file}")) {
            return Err(CodeVerifyError::BadCommand(raw.to_string()));
        }
        Ok(Self { raw: raw.to_string(), program, args })
    }

    pub fn program(&self) -> &str {
        &self.program
    }

    /// Looks the program up on `PATH` (or checks it directly when it
    /// contains a path separator).
    pub fn is_available(&self) -> bool {
        let candidate = Path::new(&self.program);
        if candidate.components().count() > 1 {
            return candidate.is_file();
        }
        std::env::var_os("PATH")
            .map(|paths| std::env::split_paths(&paths).any(|dir| dir.join(&self.program).is_file()))
            .unwrap_or(false)
    }
}

impl Default for InterpreterCommand {
    fn default() -> Self {
        Self::parse("python3 -I {file}").expect("static command")
    }
}

impl TryFrom<String> for InterpreterCommand {
    type Error = CodeVerifyError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::parse(&value)
    }
}

impl From<InterpreterCommand> for String {
    fn from(value: InterpreterCommand) -> Self {
        value.raw
    }
}

#[derive(Debug, Clone)]
pub struct CodeVerifierConfig {
    pub interpreter: InterpreterCommand,
    pub timeout: Duration,
    pub scratch_dir: Option<PathBuf>,
}

impl Default for CodeVerifierConfig {
    fn default() -> Self {
        Self { interpreter: InterpreterCommand::default(), timeout: Duration::from_secs(5), scratch_dir: None }
    }
}

/// Last `OUTPUT_TAIL_BYTES` of `text`, cut on a character boundary.
pub fn tail(text: &str) -> &str {
    if text.len() <= OUTPUT_TAIL_BYTES {
        return text;
    }
    let mut start = text.len() - OUTPUT_TAIL_BYTES;
    while !text.is_char_boundary(start) {
        start += 1;
    }
    &text[start..]
}

/// Runs the candidate against the task's checks. Only a missing
/// interpreter or an unusable scratch directory is an error; everything the
/// candidate does wrong is an unsolved verdict.
pub fn verify_code(task: &CodeTask, answer_text: &str, config: &CodeVerifierConfig) -> Result<Verdict, CodeVerifyError> {
    if answer_text.trim().is_empty() {
        return Ok(Verdict::unsolved("no answer extracted"));
    }
    let mut builder = tempfile::Builder::new();
    builder.prefix("retrials-code-");
    let workspace = match &config.scratch_dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            builder.tempdir_in(dir)?
        }
        None => builder.tempdir()?,
    };
    let file = workspace.path().join("candidate.py");
    fs::write(&file, task.program(answer_text))?;
    let stdout_path = workspace.path().join("stdout.txt");
    let stderr_path = workspace.path().join("stderr.txt");

    let file_arg = file.to_string_lossy().into_owned();
    let args: Vec<String> = config.interpreter.args.iter().map(|a| a.replace("{file}", &file_arg)).collect();
    let mut command = Command::new(&config.interpreter.program);
    command
        .args(&args)
        .current_dir(workspace.path())
        .env_clear()
        .env("PATH", std::env::var_os("PATH").unwrap_or_default())
        .env("HOME", workspace.path())
        .env("PYTHONDONTWRITEBYTECODE", "1")
        .env("http_proxy", DEAD_PROXY)
        .env("https_proxy", DEAD_PROXY)
        .env("HTTP_PROXY", DEAD_PROXY)
        .env("HTTPS_PROXY", DEAD_PROXY)
        .stdin(Stdio::null())
        .stdout(fs::File::create(&stdout_path)?)
        .stderr(fs::File::create(&stderr_path)?);

    let mut child = match command.spawn() {
        Ok(c) => c,
        Err(e) if e.kind() == io::ErrorKind::NotFound || e.kind() == io::ErrorKind::PermissionDenied => {
            return Err(CodeVerifyError::InterpreterMissing(config.interpreter.raw.clone()))
        }
        Err(e) => return Err(e.into()),
    };

    let deadline = Instant::now() + config.timeout;
    let status = loop {
        if let Some(status) = child.try_wait()? {
            break Some(status);
        }
        if Instant::now() >= deadline {
            let _ = child.kill();
            let _ = child.wait();
            break None;
        }
        thread::sleep(POLL_INTERVAL);
    };

    let Some(status) = status else {
        return Ok(Verdict::unsolved("timeout"));
    };
    if status.success() {
        return Ok(Verdict::solved());
    }
    let stderr = fs::read_to_string(&stderr_path).unwrap_or_default();
    let stdout = fs::read_to_string(&stdout_path).unwrap_or_default();
    let output = if stderr.trim().is_empty() { stdout } else { stderr };
    let code = status.code().map(|c| c.to_string()).unwrap_or_else(|| "signal".into());
    Ok(Verdict::unsolved(format!("exit status {code}: {}", tail(output.trim_end()))))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn task() -> CodeTask {
        CodeTask {
            task_id: "t/0".into(),
            prompt: "def answer() -> int:\n    \"\"\"Return 42.\"\"\"\n".into(),
            entry_point: "answer".into(),
            tests: "def check(candidate):\n    assert candidate() == 42, 'wrong constant'\n".into(),
            canonical_solution: Some("    return 42\n".into()),
        }
    }

    #[test]
    fn program_assembly() {
        let t = task();
        let full = t.program("def answer():\n    return 42\n");
        assert!(full.starts_with("def answer():"));
        assert!(full.ends_with("check(answer)\n"));
        let body = t.program("    return 42\n");
        assert!(body.starts_with("def answer() -> int:"));
    }

    #[test]
    fn command_parsing() {
        let c = InterpreterCommand::parse("python3 -I {file}").unwrap();
        assert_eq!(c.program(), "python3");
        assert!(InterpreterCommand::parse("python3").is_err());
        assert!(InterpreterCommand::parse("").is_err());
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(json, "\"python3 -I {file}\"");
    }

    #[test]
    fn missing_interpreter_is_a_configuration_error() {
        let config = CodeVerifierConfig {
            interpreter: InterpreterCommand::parse("definitely-not-an-interpreter-xyz {file}").unwrap(),
            ..Default::default()
        };
        assert!(!config.interpreter.is_available());
        let err = verify_code(&task(), "    return 42\n", &config).unwrap_err();
        assert!(matches!(err, CodeVerifyError::InterpreterMissing(_)));
    }

    #[test]
    fn empty_answer_is_unsolved_without_running() {
        let v = verify_code(&task(), "  ", &CodeVerifierConfig::default()).unwrap();
        assert_eq!(v.detail(), "no answer extracted");
    }

    #[test]
    fn tail_is_bounded_and_char_safe() {
        let long = "\u{00e9}".repeat(5000);
        let t = tail(&long);
        assert!(t.len() <= OUTPUT_TAIL_BYTES);
        assert!(t.chars().all(|c| c == '\u{00e9}'));
        assert_eq!(tail("short"), "short");
    }
}
