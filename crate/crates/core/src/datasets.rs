//! Benchmark loaders: Game of 24 CSV, HumanEval JSON lines, HotpotQA JSON.

use std::fs;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::rng::select_indices;
use crate::types::{Sample, SamplePayload, Task};
use crate::verifiers::CodeTask;

/// Ranks of the standard Game of 24 test split.
pub const GAME24_TEST_RANKS: RangeInclusive<u32> = 901..=1000;
pub const HOTPOTQA_DEFAULT_N: usize = 100;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("dataset {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}, row {row}: {message}")]
    Row { path: PathBuf, row: usize, message: String },
    #[error("{path}: record {record}: {message}")]
    Record { path: PathBuf, record: String, message: String },
    #[error("{path}: no samples")]
    Empty { path: PathBuf },
    #[error("{path}: cannot select {requested} of {available} records")]
    TooFew { path: PathBuf, requested: usize, available: usize },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

fn read(path: &Path) -> Result<String, DatasetError> {
    fs::read_to_string(path).map_err(|source| DatasetError::Io { path: path.to_path_buf(), source })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Game24Puzzle {
    pub rank: u32,
    pub numbers: [u32; 4],
}

#[derive(Debug, Clone)]
pub struct Game24Data {
    pub puzzles: Vec<Game24Puzzle>,
    pub selected: Vec<Sample>,
}

/// Parses every row and selects the test ranks 901-1000. Columns after the
/// puzzle (solve times, rates) are ignored.
pub fn load_game24(path: &Path) -> Result<Game24Data, DatasetError> {
    load_game24_ranks(path, GAME24_TEST_RANKS)
}

pub fn load_game24_ranks(path: &Path, ranks: RangeInclusive<u32>) -> Result<Game24Data, DatasetError> {
    let text = read(path)?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let row_err = |row: usize, message: String| DatasetError::Row { path: path.to_path_buf(), row, message };
    let columns = reader
        .headers()
        .map_err(|e| row_err(1, e.to_string()))?
        .len();
    if columns < 2 {
        return Err(row_err(1, format!("expected at least 2 columns (rank, puzzle), found {columns}")));
    }
    let mut puzzles = Vec::new();
    for (i, record) in reader.records().enumerate() {
        // header is row 1
        let row = i + 2;
        let record = record.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths { len, expected_len, .. } => {
                row_err(row, format!("wrong column count: {len} (expected {expected_len})"))
            }
            _ => row_err(row, e.to_string()),
        })?;
        let rank: u32 = record[0].parse().map_err(|_| row_err(row, format!("bad rank {:?}", &record[0])))?;
        let numbers: Vec<u32> = record[1]
            .split_whitespace()
            .map(|n| n.parse::<u32>())
            .collect::<Result<_, _>>()
            .map_err(|_| row_err(row, format!("bad puzzle {:?}", &record[1])))?;
        let numbers: [u32; 4] = numbers
            .try_into()
            .map_err(|v: Vec<u32>| row_err(row, format!("puzzle must have 4 numbers, found {}", v.len())))?;
        puzzles.push(Game24Puzzle { rank, numbers });
    }
    let selected: Vec<Sample> = puzzles
        .iter()
        .filter(|p| ranks.contains(&p.rank))
        .map(|p| Sample::game24(p.rank as usize, p.numbers))
        .collect();
    if selected.is_empty() {
        log::warn!(
            "{}: no puzzles with ranks {}-{} ({} rows parsed)",
            path.display(),
            ranks.start(),
            ranks.end(),
            puzzles.len()
        );
    }
    Ok(Game24Data { puzzles, selected })
}

#[derive(Deserialize)]
struct RawCodeRecord {
    task_id: Option<String>,
    prompt: Option<String>,
    entry_point: Option<String>,
    test: Option<String>,
    canonical_solution: Option<String>,
}

/// One `CodeTask` sample per JSON line, in file order.
pub fn load_humaneval(path: &Path) -> Result<Vec<Sample>, DatasetError> {
    let text = read(path)?;
    let mut samples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawCodeRecord = serde_json::from_str(line).map_err(|e| DatasetError::Row {
            path: path.to_path_buf(),
            row: i + 1,
            message: e.to_string(),
        })?;
        let record = raw.task_id.clone().unwrap_or_else(|| format!("line {}", i + 1));
        let missing = |field: &str| DatasetError::Record {
            path: path.to_path_buf(),
            record: record.clone(),
            message: format!("missing field {field}"),
        };
        let task = CodeTask {
            task_id: record.clone(),
            prompt: raw.prompt.ok_or_else(|| missing("prompt"))?,
            entry_point: raw.entry_point.ok_or_else(|| missing("entry_point"))?,
            tests: raw.test.ok_or_else(|| missing("test"))?,
            canonical_solution: raw.canonical_solution,
        };
        samples.push(Sample::new(Task::Humaneval, samples.len(), SamplePayload::Code(task)));
    }
    if samples.is_empty() {
        return Err(DatasetError::Empty { path: path.to_path_buf() });
    }
    Ok(samples)
}

#[derive(Deserialize)]
struct RawQaRecord {
    question: String,
    answer: String,
}

/// Seeded uniform selection of `n` records without replacement (see
/// [`crate::rng::select_indices`]), returned in file order.
pub fn load_hotpotqa(path: &Path, n: usize, seed: u64) -> Result<Vec<Sample>, DatasetError> {
    let text = read(path)?;
    let records: Vec<RawQaRecord> = serde_json::from_str(&text)
        .map_err(|e| DatasetError::Format { path: path.to_path_buf(), message: e.to_string() })?;
    if n > records.len() {
        return Err(DatasetError::TooFew { path: path.to_path_buf(), requested: n, available: records.len() });
    }
    let mut chosen = select_indices(records.len(), n, seed);
    chosen.sort_unstable();
    Ok(chosen
        .into_iter()
        .map(|i| {
            let r = &records[i];
            Sample::new(
                Task::Hotpotqa,
                i,
                SamplePayload::Question { question: r.question.clone(), answer: r.answer.clone() },
            )
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn temp_file(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn game24_row_parse() {
        let f = temp_file("Rank,Puzzles,AMT (s)\n901, 1 2 3 4, 5.2\n902,4 9 10 13,6.1\n");
        let data = load_game24(f.path()).unwrap();
        assert_eq!(data.puzzles.len(), 2);
        assert_eq!(data.selected[0].payload, SamplePayload::Game24 { numbers: [1, 2, 3, 4] });
        assert_eq!(data.selected[0].id, "game24-901");
    }

    #[test]
    fn game24_outside_test_ranks_selects_nothing() {
        let rows: String = (1..=10).map(|r| format!("{r},1 2 3 4\n")).collect();
        let f = temp_file(&format!("Rank,Puzzles\n{rows}"));
        let data = load_game24(f.path()).unwrap();
        assert_eq!(data.puzzles.len(), 10);
        assert!(data.selected.is_empty());
    }

    #[test]
    fn game24_malformed_rows() {
        let f = temp_file("Rank,Puzzles\n1,1 2 3 4\n2,1 2 x 4\n");
        let err = load_game24(f.path()).unwrap_err();
        assert!(matches!(err, DatasetError::Row { row: 3, .. }), "{err}");

        let f = temp_file("Rank,Puzzles\n1,1 2 3 4,extra\n");
        let err = load_game24(f.path()).unwrap_err();
        assert!(err.to_string().contains("wrong column count"), "{err}");

        let f = temp_file("Rank,Puzzles\n1,1 2 3\n");
        assert!(load_game24(f.path()).unwrap_err().to_string().contains("4 numbers"));
    }

    #[test]
    fn humaneval_missing_field_names_the_record() {
        let f = temp_file("{\"task_id\":\"X/7\",\"prompt\":\"def f():\\n\",\"test\":\"\"}\n");
        let err = load_humaneval(f.path()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("X/7") && msg.contains("entry_point"), "{msg}");
    }

    #[test]
    fn humaneval_empty_file() {
        let f = temp_file("\n");
        assert!(matches!(load_humaneval(f.path()), Err(DatasetError::Empty { .. })));
    }

    #[test]
    fn hotpotqa_selection() {
        let recs: Vec<String> = (0..20).map(|i| format!("{{\"question\":\"q{i}\",\"answer\":\"a{i}\"}}")).collect();
        let f = temp_file(&format!("[{}]", recs.join(",")));
        let a = load_hotpotqa(f.path(), 5, 7).unwrap();
        let b = load_hotpotqa(f.path(), 5, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0].source_index < w[1].source_index));
        assert_eq!(load_hotpotqa(f.path(), 20, 1).unwrap().len(), 20);
        assert!(load_hotpotqa(f.path(), 0, 1).unwrap().is_empty());
        assert!(matches!(load_hotpotqa(f.path(), 21, 1), Err(DatasetError::TooFew { .. })));
    }

    #[test]
    fn missing_file_names_the_path() {
        let err = load_game24(Path::new("/nonexistent/24.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/24.csv"));
    }
}
