//! Python bindings for the core fault-localization operations: codebase
//! indexing, the IR rankers, the patch-mail knowledge base, rank fusion,
//! fix-patch ground truth, evaluation, and a fully offline pipeline run
//! against a scripted model. Errors surface as ValueError; paths are plain
//! strings.

use std::collections::HashMap;
use std::fmt::Display;
use std::path::Path;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use kfl_core::benchmark::{self, BugReport, FLTask};
use kfl_core::corpus::{self, SourceFile};
use kfl_core::llm::{LlmClient, MockProvider, MockScript, PromptBudget};
use kfl_core::mailkb;
use kfl_core::pipeline::{self, AgentPrediction, PipelineConfig, PipelineDeps};
use kfl_core::retrieval::{self, Query, RankedList};

fn value_err(e: impl Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_utc(s: &str) -> PyResult<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(s)
        .map(|d| d.with_timezone(&Utc))
        .map_err(|e| value_err(format!("invalid RFC 3339 timestamp {s:?}: {e}")))
}

/// A report stub for rankers that only read title and description.
fn report_stub(title: &str, description: &str) -> BugReport {
    BugReport {
        title: title.to_string(),
        description: description.to_string(),
        product: String::new(),
        component: String::new(),
        hardware: String::new(),
        kernel_version: String::new(),
        report_date: DateTime::<Utc>::UNIX_EPOCH,
    }
}

fn scored_pairs(list: RankedList) -> Vec<(String, f64)> {
    list.items()
        .iter()
        .map(|i| (i.path.clone(), i.score.expect("ranker output is scored")))
        .collect()
}

/// Tokenized, entity-annotated index over one source tree.
#[pyclass(name = "CodebaseIndex", frozen)]
struct PyCodebaseIndex {
    inner: corpus::CodebaseIndex,
}

#[pymethods]
impl PyCodebaseIndex {
    /// Walks `root` and indexes every C source and header file.
    #[staticmethod]
    fn build(root: &str) -> PyResult<Self> {
        let inner = corpus::index_codebase(Path::new(root)).map_err(value_err)?;
        Ok(PyCodebaseIndex { inner })
    }

    /// Indexes already-loaded `(path, content)` pairs.
    #[staticmethod]
    fn from_files(files: Vec<(String, String)>) -> PyResult<Self> {
        let files = files.into_iter().map(|(p, c)| SourceFile::new(p, c)).collect();
        let inner = corpus::CodebaseIndex::from_files(files).map_err(value_err)?;
        Ok(PyCodebaseIndex { inner })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let inner =
            corpus::CodebaseIndex::load_from_path(Path::new(path)).map_err(value_err)?;
        Ok(PyCodebaseIndex { inner })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save_to_path(Path::new(path)).map_err(value_err)
    }

    fn contains(&self, path: &str) -> bool {
        self.inner.contains(path)
    }

    fn paths(&self) -> Vec<String> {
        (0..self.inner.len()).map(|id| self.inner.path(id).to_string()).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Indexed archive of patch-bearing mailing-list mails.
#[pyclass(name = "MailKb", frozen)]
struct PyMailKb {
    inner: mailkb::MailIndex,
}

#[pymethods]
impl PyMailKb {
    /// Ingests an mbox (or maildir), applying the collection filters.
    /// Returns the knowledge base and a per-filter rejection count dict.
    #[staticmethod]
    fn ingest(path: &str) -> PyResult<(Self, HashMap<String, usize>)> {
        let (mails, rejected) = mailkb::ingest_mbox(Path::new(path)).map_err(value_err)?;
        let counts = HashMap::from([
            ("no_patch".to_string(), rejected.no_patch),
            ("file_count".to_string(), rejected.file_count),
            ("url".to_string(), rejected.url),
            ("keyword".to_string(), rejected.keyword),
            ("duplicate".to_string(), rejected.duplicate),
        ]);
        Ok((PyMailKb { inner: mailkb::build_mail_index(mails) }, counts))
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let inner = mailkb::MailIndex::load_from_path(Path::new(path)).map_err(value_err)?;
        Ok(PyMailKb { inner })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save_to_path(Path::new(path)).map_err(value_err)
    }

    /// BM25 retrieval of mails touching the predicted files and strictly
    /// predating `before` (RFC 3339). Empty `predicted_files` widens to the
    /// whole archive. Returns `(message_id, date, subject)` tuples.
    #[pyo3(signature = (predicted_files, bug_behavior, potential_causes="", expected_behavior="", possible_solutions="", *, before, k=10))]
    #[allow(clippy::too_many_arguments)]
    fn retrieve(
        &self,
        predicted_files: Vec<String>,
        bug_behavior: &str,
        potential_causes: &str,
        expected_behavior: &str,
        possible_solutions: &str,
        before: &str,
        k: usize,
    ) -> PyResult<Vec<(String, String, String)>> {
        if k == 0 {
            return Err(value_err("k must be at least 1"));
        }
        let query = mailkb::ReformulatedQuery {
            bug_behavior: bug_behavior.to_string(),
            potential_causes: potential_causes.to_string(),
            expected_behavior: expected_behavior.to_string(),
            possible_solutions: possible_solutions.to_string(),
        };
        let mails =
            mailkb::retrieve_mails(&self.inner, &predicted_files, &query, parse_utc(before)?, k);
        Ok(mails
            .into_iter()
            .map(|m| (m.message_id, m.date.to_rfc3339(), m.subject))
            .collect())
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Splits identifiers and prose into lowercased search tokens.
#[pyfunction]
fn tokenize(text: &str) -> Vec<String> {
    corpus::tokenize(text)
}

#[pyfunction]
fn bm25(index: &PyCodebaseIndex, query: &str, k: usize) -> PyResult<Vec<(String, f64)>> {
    let ranked = retrieval::bm25_rank(&index.inner, &Query::new(query), k).map_err(value_err)?;
    Ok(scored_pairs(ranked))
}

#[pyfunction]
fn rvsm(index: &PyCodebaseIndex, query: &str, k: usize) -> PyResult<Vec<(String, f64)>> {
    let ranked = retrieval::rvsm_rank(&index.inner, &Query::new(query), k).map_err(value_err)?;
    Ok(scored_pairs(ranked))
}

#[pyfunction]
fn bluir(
    index: &PyCodebaseIndex,
    title: &str,
    description: &str,
    k: usize,
) -> PyResult<Vec<(String, f64)>> {
    let report = report_stub(title, description);
    let ranked = retrieval::bluir_rank(&index.inner, &report, k).map_err(value_err)?;
    Ok(scored_pairs(ranked))
}

/// Reciprocal-rank fusion of up to three ranked path lists.
#[pyfunction]
#[pyo3(signature = (r_dir, r_direct, r_mail))]
fn fuse(
    r_dir: Vec<String>,
    r_direct: Vec<String>,
    r_mail: Vec<String>,
) -> Vec<(String, f64)> {
    let merged = pipeline::merge_candidates(
        &RankedList::from_paths(r_dir),
        &RankedList::from_paths(r_direct),
        &RankedList::from_paths(r_mail),
    );
    merged.scored
}

/// Modified files and touched `(file, element)` pairs from a fix patch.
#[pyfunction]
fn ground_truth_from_patch(
    diff_text: &str,
) -> PyResult<(Vec<String>, Vec<(String, String)>)> {
    benchmark::ground_truth_from_patch(diff_text).map_err(value_err)
}

fn lists_for_tasks(
    tasks: &[FLTask],
    predictions: HashMap<String, Vec<String>>,
) -> PyResult<std::collections::BTreeMap<String, RankedList>> {
    let mut lists: std::collections::BTreeMap<String, RankedList> = predictions
        .into_iter()
        .map(|(id, paths)| (id, RankedList::from_paths(paths)))
        .collect();
    for id in lists.keys() {
        if !tasks.iter().any(|t| &t.id == id) {
            return Err(value_err(format!("predictions mention unknown task {id}")));
        }
    }
    for t in tasks {
        lists.entry(t.id.clone()).or_default();
    }
    Ok(lists)
}

/// File-level recall@k and MRR of `predictions` (task id to ranked paths)
/// against the gold files of a task file. Tasks without a prediction score
/// as empty lists.
#[pyfunction]
#[pyo3(signature = (tasks_path, predictions, ks=vec![1, 5, 10]))]
fn evaluate_files(
    py: Python<'_>,
    tasks_path: &str,
    predictions: HashMap<String, Vec<String>>,
    ks: Vec<usize>,
) -> PyResult<Py<PyDict>> {
    let tasks = benchmark::load_tasks_from_path(Path::new(tasks_path)).map_err(value_err)?;
    let lists = lists_for_tasks(&tasks, predictions)?;
    let report = benchmark::evaluate(&lists, &tasks, &ks).map_err(value_err)?;
    let ranks: HashMap<&String, Option<usize>> =
        report.per_task.iter().map(|(id, s)| (id, s.rank)).collect();
    let d = PyDict::new(py);
    d.set_item("recall_at", &report.recall_at)?;
    d.set_item("mrr", report.mrr)?;
    d.set_item("n_tasks", report.n_tasks)?;
    d.set_item("ranks", ranks)?;
    Ok(d.into())
}

/// Paired two-sided t-test plus seeded bootstrap confidence intervals over
/// two equal-length per-task score vectors.
#[pyfunction]
#[pyo3(signature = (a, b, seed=17))]
fn significance_test(
    py: Python<'_>,
    a: Vec<f64>,
    b: Vec<f64>,
    seed: u64,
) -> PyResult<Py<PyDict>> {
    let s = benchmark::significance(&a, &b, seed).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("n", s.n)?;
    d.set_item("mean_a", s.mean_a)?;
    d.set_item("mean_b", s.mean_b)?;
    d.set_item("std_a", s.std_a)?;
    d.set_item("std_b", s.std_b)?;
    d.set_item("mean_diff", s.mean_diff)?;
    d.set_item("t_stat", s.t_stat)?;
    d.set_item("p_value", s.p_value)?;
    d.set_item("ci_a", s.ci_a)?;
    d.set_item("ci_b", s.ci_b)?;
    d.set_item("degenerate", s.degenerate)?;
    Ok(d.into())
}

/// The whole enhancement pipeline against a scripted model: expansion of
/// each task's initial prediction, fusion, rerank. Deterministic, no
/// network. Returns the final ranked paths per task id.
#[pyfunction]
#[pyo3(signature = (index, tasks_path, predictions, mock_script_path, mailkb=None, *,
    enable_dir=true, enable_direct=true, enable_mail=true, enable_rerank=true,
    k_dir=10, k_mail=10, k_final=10))]
#[allow(clippy::too_many_arguments)]
fn enhance_offline(
    index: &PyCodebaseIndex,
    tasks_path: &str,
    predictions: HashMap<String, Vec<String>>,
    mock_script_path: &str,
    mailkb: Option<&PyMailKb>,
    enable_dir: bool,
    enable_direct: bool,
    enable_mail: bool,
    enable_rerank: bool,
    k_dir: usize,
    k_mail: usize,
    k_final: usize,
) -> PyResult<HashMap<String, Vec<String>>> {
    let config = PipelineConfig {
        enable_dir,
        enable_direct,
        enable_mail,
        enable_rerank,
        k_dir,
        k_mail,
        k_final,
    };
    config.validate().map_err(value_err)?;
    if enable_mail && mailkb.is_none() {
        return Err(value_err("mail expansion is enabled but no mailkb was given"));
    }

    let tasks = benchmark::load_tasks_from_path(Path::new(tasks_path)).map_err(value_err)?;
    for id in predictions.keys() {
        if !tasks.iter().any(|t| &t.id == id) {
            return Err(value_err(format!("predictions mention unknown task {id}")));
        }
    }

    let script_text = std::fs::read_to_string(mock_script_path)
        .map_err(|e| value_err(format!("reading {mock_script_path}: {e}")))?;
    let script = MockScript::from_jsonl(&script_text).map_err(value_err)?;
    let client =
        LlmClient::new(Arc::new(MockProvider::new(script)), PromptBudget::default(), true);
    let deps = PipelineDeps {
        index: &index.inner,
        mail_index: mailkb.map(|m| &m.inner),
        client: &client,
    };

    let mut out = HashMap::with_capacity(tasks.len());
    for task in &tasks {
        let initial = match predictions.get(&task.id) {
            Some(files) => AgentPrediction::new(task.id.clone(), files.clone()),
            None => AgentPrediction::empty(task.id.clone()),
        };
        let outcome = pipeline::localize(task, &initial, &config, &deps)
            .map_err(|e| value_err(format!("task {}: {e}", task.id)))?;
        out.insert(task.id.clone(), outcome.final_list.to_path_vec());
    }
    Ok(out)
}

#[pymodule]
fn kfl_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCodebaseIndex>()?;
    m.add_class::<PyMailKb>()?;
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(bm25, m)?)?;
    m.add_function(wrap_pyfunction!(rvsm, m)?)?;
    m.add_function(wrap_pyfunction!(bluir, m)?)?;
    m.add_function(wrap_pyfunction!(fuse, m)?)?;
    m.add_function(wrap_pyfunction!(ground_truth_from_patch, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_files, m)?)?;
    m.add_function(wrap_pyfunction!(significance_test, m)?)?;
    m.add_function(wrap_pyfunction!(enhance_offline, m)?)?;
    Ok(())
}
