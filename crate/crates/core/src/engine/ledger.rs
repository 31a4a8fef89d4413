//! Append-only JSON-lines run ledger.
//!
//! Line 1 is a header with the config snapshot and its hash. Then come
//! attempt records as attempts finish, a trial record at each trial end, and
//! an end record once the run halts. Transcripts larger than the inline cap
//! go to `transcripts/<attempt_id>.json` next to the ledger.

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{HaltReason, RunConfig, TrialRecord};
use crate::cost::MoneyUsd;
use crate::types::{Attempt, Exchange};

pub const LEDGER_VERSION: u32 = 1;
/// Serialized transcript size above which it moves to a sidecar file.
pub const INLINE_TRANSCRIPT_CAP: usize = 64 * 1024;
pub const TRANSCRIPT_DIR: &str = "transcripts";

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("ledger {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("ledger {path}, line {line}: {message}")]
    Corrupt { path: PathBuf, line: usize, message: String },
    #[error("ledger {path}: missing header")]
    MissingHeader { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerHeader {
    pub version: u32,
    pub config_hash: String,
    pub template_hash: String,
    pub config: RunConfig,
    pub sample_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptEntry {
    pub attempt: Attempt,
    pub cost: MoneyUsd,
    /// Sidecar path relative to the ledger directory, when the transcript
    /// is not inline.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub transcript_file: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "lowercase")]
pub enum LedgerRecord {
    Header(LedgerHeader),
    Attempt(AttemptEntry),
    Trial(TrialRecord),
    End { halt: HaltReason },
}

#[derive(Debug, Clone)]
pub struct LedgerContents {
    pub header: LedgerHeader,
    pub attempts: Vec<Attempt>,
    pub trials: Vec<TrialRecord>,
    pub end: Option<HaltReason>,
    /// Byte length of the well-formed prefix.
    pub valid_len: u64,
}

pub struct LedgerWriter {
    path: PathBuf,
    out: BufWriter<File>,
    inline_cap: usize,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> LedgerError + '_ {
    move |source| LedgerError::Io { path: path.to_path_buf(), source }
}

impl LedgerWriter {
    /// Starts a new ledger, replacing any file at `path`.
    pub fn create(path: &Path, header: &LedgerHeader) -> Result<Self, LedgerError> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
        let file = File::create(path).map_err(io_err(path))?;
        let mut writer = Self { path: path.to_path_buf(), out: BufWriter::new(file), inline_cap: INLINE_TRANSCRIPT_CAP };
        writer.write(&LedgerRecord::Header(header.clone()))?;
        Ok(writer)
    }

    /// Reopens a ledger for appending after its well-formed prefix. A torn
    /// final line is cut off.
    pub fn reopen(path: &Path, valid_len: u64) -> Result<Self, LedgerError> {
        let file = OpenOptions::new().write(true).open(path).map_err(io_err(path))?;
        file.set_len(valid_len).map_err(io_err(path))?;
        let file = OpenOptions::new().append(true).open(path).map_err(io_err(path))?;
        Ok(Self { path: path.to_path_buf(), out: BufWriter::new(file), inline_cap: INLINE_TRANSCRIPT_CAP })
    }

    pub fn with_inline_cap(mut self, bytes: usize) -> Self {
        self.inline_cap = bytes;
        self
    }

    fn write(&mut self, record: &LedgerRecord) -> Result<(), LedgerError> {
        let line = serde_json::to_string(record).expect("ledger records serialize");
        let path = self.path.clone();
        self.out.write_all(line.as_bytes()).map_err(io_err(&path))?;
        self.out.write_all(b"\n").map_err(io_err(&path))?;
        self.out.flush().map_err(io_err(&path))
    }

    pub fn attempt(&mut self, attempt: &Attempt, cost: MoneyUsd) -> Result<(), LedgerError> {
        let transcript = serde_json::to_string(&attempt.transcript).expect("transcripts serialize");
        let entry = if transcript.len() > self.inline_cap {
            let dir = self.path.parent().unwrap_or(Path::new(".")).join(TRANSCRIPT_DIR);
            fs::create_dir_all(&dir).map_err(io_err(&dir))?;
            let name = format!("{}.json", attempt.attempt_id);
            let file = dir.join(&name);
            fs::write(&file, transcript).map_err(io_err(&file))?;
            let mut stripped = attempt.clone();
            stripped.transcript.clear();
            AttemptEntry { attempt: stripped, cost, transcript_file: Some(format!("{TRANSCRIPT_DIR}/{name}")) }
        } else {
            AttemptEntry { attempt: attempt.clone(), cost, transcript_file: None }
        };
        self.write(&LedgerRecord::Attempt(entry))
    }

    pub fn trial(&mut self, record: &TrialRecord) -> Result<(), LedgerError> {
        self.write(&LedgerRecord::Trial(record.clone()))
    }

    pub fn end(&mut self, halt: &HaltReason) -> Result<(), LedgerError> {
        self.write(&LedgerRecord::End { halt: halt.clone() })
    }
}

/// Reads a ledger. A final line without its newline was torn by a crash and
/// is ignored; any other malformed line is an error.
pub fn read_ledger(path: &Path) -> Result<LedgerContents, LedgerError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut header = None;
    let mut attempts = Vec::new();
    let mut trials = Vec::new();
    let mut end = None;
    let mut valid_len = 0u64;
    let mut offset = 0usize;
    for (i, line) in text.split_inclusive('\n').enumerate() {
        offset += line.len();
        if !line.ends_with('\n') {
            break;
        }
        let body = line.trim_end_matches(['\n', '\r']);
        valid_len = offset as u64;
        if body.trim().is_empty() {
            continue;
        }
        let record: LedgerRecord = match serde_json::from_str(body) {
            Ok(r) => r,
            Err(e) => {
                return Err(LedgerError::Corrupt { path: path.to_path_buf(), line: i + 1, message: e.to_string() })
            }
        };
        match record {
            LedgerRecord::Header(h) => header = Some(h),
            LedgerRecord::Attempt(entry) => {
                let mut attempt = entry.attempt;
                if let Some(rel) = entry.transcript_file {
                    let file = dir.join(rel);
                    let raw = fs::read_to_string(&file).map_err(io_err(&file))?;
                    let transcript: Vec<Exchange> = serde_json::from_str(&raw).map_err(|e| LedgerError::Corrupt {
                        path: file.clone(),
                        line: 1,
                        message: e.to_string(),
                    })?;
                    attempt.transcript = transcript;
                }
                attempts.push(attempt);
            }
            LedgerRecord::Trial(t) => trials.push(t),
            LedgerRecord::End { halt } => end = Some(halt),
        }
    }
    let header = header.ok_or_else(|| LedgerError::MissingHeader { path: path.to_path_buf() })?;
    Ok(LedgerContents { header, attempts, trials, end, valid_len })
}
