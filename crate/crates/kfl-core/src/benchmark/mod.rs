//! Benchmark instances and scoring.
//!
//! A task ties one bug report to one codebase and exactly one gold file
//! (optionally with the gold methods inside it). Scoring is recall@k plus
//! MRR over the rank of the gold file in a prediction list, with paired
//! significance testing for comparing two prediction sets.

mod diff;
mod stats;

pub use diff::{
    ground_truth_from_patch, ground_truth_from_patch_in, parse_unified_diff, DiffFile, Hunk,
    ParsedDiff,
};
pub use stats::{significance, SignificanceResult, BOOTSTRAP_RESAMPLES};

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::retrieval::RankedList;

pub const TASK_MAGIC: &str = "kfl-task-v1";

#[derive(Debug, Error)]
pub enum BenchmarkError {
    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("bad header: expected {expected:?}")]
    BadHeader { expected: &'static str },
    #[error("parse error at line {line}: {msg}")]
    ParseError { line: usize, msg: String },
    #[error("task {task_id}: {reason}")]
    InvariantViolation { task_id: String, reason: String },
    #[error("prediction for unknown task id {0:?}")]
    UnknownTaskId(String),
    #[error("no prediction entry for task {0:?}")]
    MissingPrediction(String),
    #[error("no valid hunk found in diff: {0}")]
    DiffParse(String),
    #[error("paired samples differ in length: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("need at least 2 paired samples, got {0}")]
    TooFewSamples(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BugReport {
    pub title: String,
    pub description: String,
    #[serde(default)]
    pub product: String,
    #[serde(default)]
    pub component: String,
    #[serde(default)]
    pub hardware: String,
    #[serde(default)]
    pub kernel_version: String,
    pub report_date: DateTime<Utc>,
}

impl BugReport {
    /// Title and description joined, the standard IR query text.
    pub fn query_text(&self) -> String {
        format!("{}\n{}", self.title, self.description)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FLTask {
    pub id: String,
    pub report: BugReport,
    /// Path of the codebase root or of a prebuilt index archive.
    pub codebase_root: String,
    pub gold_files: Vec<String>,
    #[serde(default)]
    pub gold_methods: Vec<(String, String)>,
}

impl FLTask {
    pub fn gold_file(&self) -> &str {
        &self.gold_files[0]
    }

    fn validate(&self) -> Result<(), BenchmarkError> {
        let fail = |reason: String| {
            Err(BenchmarkError::InvariantViolation { task_id: self.id.clone(), reason })
        };
        if self.id.trim().is_empty() {
            return fail("empty id".to_string());
        }
        if self.gold_files.len() != 1 {
            return fail(format!("expected exactly one gold file, got {}", self.gold_files.len()));
        }
        if self.report.title.trim().is_empty() {
            return fail("empty title".to_string());
        }
        if self.report.description.trim().is_empty() {
            return fail("empty description".to_string());
        }
        for (file, name) in &self.gold_methods {
            if !self.gold_files.contains(file) {
                return fail(format!("gold method {name} references non-gold file {file}"));
            }
        }
        Ok(())
    }
}

/// Reads a `kfl-task-v1` file: header line, then one JSON task per line.
/// Every task must satisfy the task invariants; the first violation aborts
/// the load with the offending id.
pub fn load_tasks<R: std::io::Read>(input: R) -> Result<Vec<FLTask>, BenchmarkError> {
    let reader = BufReader::new(input);
    let mut lines = reader.lines().enumerate();
    let header = match lines.next() {
        Some((_, Ok(l))) => l,
        Some((_, Err(source))) => {
            return Err(BenchmarkError::Io { path: PathBuf::from("<tasks>"), source })
        }
        None => return Err(BenchmarkError::BadHeader { expected: TASK_MAGIC }),
    };
    if header.trim_end() != TASK_MAGIC {
        return Err(BenchmarkError::BadHeader { expected: TASK_MAGIC });
    }
    let mut tasks = Vec::new();
    let mut seen = HashSet::new();
    for (n, line) in lines {
        let line =
            line.map_err(|source| BenchmarkError::Io { path: PathBuf::from("<tasks>"), source })?;
        if line.trim().is_empty() {
            continue;
        }
        let task: FLTask = serde_json::from_str(&line)
            .map_err(|e| BenchmarkError::ParseError { line: n + 1, msg: e.to_string() })?;
        task.validate()?;
        if !seen.insert(task.id.clone()) {
            return Err(BenchmarkError::InvariantViolation {
                task_id: task.id,
                reason: "duplicate task id".to_string(),
            });
        }
        tasks.push(task);
    }
    Ok(tasks)
}

pub fn load_tasks_from_path(path: &Path) -> Result<Vec<FLTask>, BenchmarkError> {
    let f = std::fs::File::open(path)
        .map_err(|source| BenchmarkError::Io { path: path.to_path_buf(), source })?;
    load_tasks(f)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TaskScore {
    /// 1-based rank of the gold file; None when it never appears.
    pub rank: Option<usize>,
    pub reciprocal_rank: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub per_task: BTreeMap<String, TaskScore>,
    pub recall_at: BTreeMap<usize, f64>,
    pub mrr: f64,
    pub n_tasks: usize,
}

fn report_from_ranks(ranks: BTreeMap<String, Option<usize>>, ks: &[usize]) -> EvalReport {
    let n = ranks.len();
    let per_task: BTreeMap<String, TaskScore> = ranks
        .into_iter()
        .map(|(id, rank)| {
            let rr = rank.map(|r| 1.0 / r as f64).unwrap_or(0.0);
            (id, TaskScore { rank, reciprocal_rank: rr })
        })
        .collect();
    let mut recall_at = BTreeMap::new();
    for &k in ks {
        let hits = per_task.values().filter(|s| s.rank.map(|r| r <= k).unwrap_or(false)).count();
        recall_at.insert(k, if n == 0 { 0.0 } else { hits as f64 / n as f64 });
    }
    let mrr = if n == 0 {
        0.0
    } else {
        per_task.values().map(|s| s.reciprocal_rank).sum::<f64>() / n as f64
    };
    EvalReport { per_task, recall_at, mrr, n_tasks: n }
}

fn check_prediction_ids<T>(
    predictions: &BTreeMap<String, T>,
    tasks: &[FLTask],
) -> Result<(), BenchmarkError> {
    let task_ids: HashSet<&str> = tasks.iter().map(|t| t.id.as_str()).collect();
    for id in predictions.keys() {
        if !task_ids.contains(id.as_str()) {
            return Err(BenchmarkError::UnknownTaskId(id.clone()));
        }
    }
    for t in tasks {
        if !predictions.contains_key(&t.id) {
            return Err(BenchmarkError::MissingPrediction(t.id.clone()));
        }
    }
    Ok(())
}

/// File-level scoring: per task, the 1-based rank of the gold file in the
/// predicted list (absent = no credit); recall@k over `ks`; MRR with 1/∞ = 0.
pub fn evaluate(
    predictions: &BTreeMap<String, RankedList>,
    tasks: &[FLTask],
    ks: &[usize],
) -> Result<EvalReport, BenchmarkError> {
    check_prediction_ids(predictions, tasks)?;
    let ranks = tasks
        .iter()
        .map(|t| (t.id.clone(), predictions[&t.id].rank_of(t.gold_file())))
        .collect();
    Ok(report_from_ranks(ranks, ks))
}

/// Method-level scoring. A prediction hits when both file and element name
/// match a gold method; with several gold methods the best (smallest)
/// matching rank counts.
pub fn method_evaluate(
    predictions: &BTreeMap<String, Vec<(String, String)>>,
    tasks: &[FLTask],
    ks: &[usize],
) -> Result<EvalReport, BenchmarkError> {
    check_prediction_ids(predictions, tasks)?;
    let ranks = tasks
        .iter()
        .map(|t| {
            let gold: HashSet<(&str, &str)> =
                t.gold_methods.iter().map(|(f, m)| (f.as_str(), m.as_str())).collect();
            let rank = predictions[&t.id]
                .iter()
                .position(|(f, m)| gold.contains(&(f.as_str(), m.as_str())))
                .map(|p| p + 1);
            (t.id.clone(), rank)
        })
        .collect();
    Ok(report_from_ranks(ranks, ks))
}

/// One line of a prediction file:
/// `task_id<TAB>rank<TAB>path[<TAB>element]`, ranks 1-based and contiguous
/// per task.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictionRecord {
    pub task_id: String,
    pub rank: usize,
    pub path: String,
    pub element: Option<String>,
}

pub fn write_predictions<W: Write>(
    out: W,
    records: &[PredictionRecord],
) -> Result<(), BenchmarkError> {
    let io_err = |source| BenchmarkError::Io { path: PathBuf::from("<predictions>"), source };
    let mut w = BufWriter::new(out);
    for r in records {
        match &r.element {
            Some(el) => writeln!(w, "{}\t{}\t{}\t{}", r.task_id, r.rank, r.path, el),
            None => writeln!(w, "{}\t{}\t{}", r.task_id, r.rank, r.path),
        }
        .map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

pub fn read_predictions<R: std::io::Read>(
    input: R,
) -> Result<Vec<PredictionRecord>, BenchmarkError> {
    let reader = BufReader::new(input);
    let mut records: Vec<PredictionRecord> = Vec::new();
    let mut expected: BTreeMap<String, usize> = BTreeMap::new();
    for (n, line) in reader.lines().enumerate() {
        let line =
            line.map_err(|source| BenchmarkError::Io { path: PathBuf::from("<predictions>"), source })?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |msg: String| BenchmarkError::ParseError { line: n + 1, msg };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 3 || fields.len() > 4 {
            return Err(parse_err(format!("expected 3 or 4 tab-separated fields, got {}", fields.len())));
        }
        let rank: usize = fields[1]
            .parse()
            .map_err(|e| parse_err(format!("bad rank {:?}: {e}", fields[1])))?;
        let next = expected.entry(fields[0].to_string()).or_insert(1);
        if rank != *next {
            return Err(parse_err(format!(
                "task {}: expected rank {}, got {rank} (ranks must be 1-based and contiguous)",
                fields[0], *next
            )));
        }
        *next += 1;
        records.push(PredictionRecord {
            task_id: fields[0].to_string(),
            rank,
            path: fields[2].to_string(),
            element: fields.get(3).map(|s| s.to_string()),
        });
    }
    Ok(records)
}

pub fn read_predictions_from_path(path: &Path) -> Result<Vec<PredictionRecord>, BenchmarkError> {
    let f = std::fs::File::open(path)
        .map_err(|source| BenchmarkError::Io { path: path.to_path_buf(), source })?;
    read_predictions(f)
}

/// Groups records into per-task ranked file lists (elements ignored).
pub fn predictions_as_file_lists(records: &[PredictionRecord]) -> BTreeMap<String, RankedList> {
    let mut by_task: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for r in records {
        by_task.entry(r.task_id.clone()).or_default().push(r.path.clone());
    }
    by_task.into_iter().map(|(id, paths)| (id, RankedList::from_paths(paths))).collect()
}

/// Groups records into per-task ranked (file, element) lists. Records
/// without an element column are rejected.
pub fn predictions_as_method_lists(
    records: &[PredictionRecord],
) -> Result<BTreeMap<String, Vec<(String, String)>>, BenchmarkError> {
    let mut by_task: BTreeMap<String, Vec<(String, String)>> = BTreeMap::new();
    for r in records {
        let el = r.element.clone().ok_or_else(|| BenchmarkError::InvariantViolation {
            task_id: r.task_id.clone(),
            reason: format!("prediction at rank {} lacks an element column", r.rank),
        })?;
        by_task.entry(r.task_id.clone()).or_default().push((r.path.clone(), el));
    }
    Ok(by_task)
}

/// Ensures every task has an entry, adding empty ones; convenience for
/// evaluating agents that skipped tasks.
pub fn fill_missing_predictions(
    predictions: &mut BTreeMap<String, RankedList>,
    tasks: &[FLTask],
) {
    for t in tasks {
        predictions.entry(t.id.clone()).or_insert_with(|| RankedList::from_paths(Vec::new()));
    }
}
