//! Command-line front end: reproducible runs over persisted indexes,
//! task files, and prediction files. Each subcommand is a plain function
//! so tests and the Python bindings can drive the same code paths the
//! binary does.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, ensure, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use kfl_core::benchmark::{
    evaluate, fill_missing_predictions, load_tasks_from_path, method_evaluate,
    predictions_as_file_lists, predictions_as_method_lists, read_predictions_from_path,
    significance, write_predictions, EvalReport, FLTask, PredictionRecord, SignificanceResult,
};
use kfl_core::corpus::{index_codebase, CodebaseIndex};
use kfl_core::llm::{
    EmbeddingProvider, HashedEmbedder, HttpProvider, HttpProviderConfig, LlmClient, MockProvider,
    MockScript, PromptBudget, TextModelProvider,
};
use kfl_core::mailkb::{build_mail_index, ingest_mbox, MailIndex, RejectionCounts};
use kfl_core::pipeline::{
    localize, method_localize, AgentPrediction, LocalizeOutcome, PipelineConfig, PipelineDeps,
};
use kfl_core::retrieval::{
    bluir_rank, bm25_rank, embed_rank, rvsm_rank, Query, RankedList, RetrievalError,
};

pub const DEFAULT_SEED: u64 = 42;

/// Dimensions of the offline feature-hashing embedder.
const OFFLINE_EMBED_DIMS: usize = 256;

#[derive(Debug, Parser)]
#[command(name = "kfl", version, about = "Fault localization toolkit for large C codebases")]
pub struct Cli {
    /// TOML configuration file; command-line flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Never touch the network: model calls are served by the mock script
    /// and embeddings by a deterministic feature hasher.
    #[arg(long, global = true)]
    pub offline: bool,

    /// JSONL script backing model calls in offline mode.
    #[arg(long, global = true)]
    pub mock_script: Option<PathBuf>,

    /// Seed for every stochastic step (bootstrap resampling).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads for per-task processing.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Index a C source tree into a persisted codebase index.
    Index {
        #[arg(long)]
        root: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Ingest an mbox archive (or maildir) into a patch-mail knowledge base.
    BuildMailkb {
        #[arg(long)]
        mbox: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Rejection report destination (default: <out>.rejections.json).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Rank files for every task with a deterministic IR baseline.
    Baseline {
        #[arg(long, value_enum)]
        method: BaselineMethod,
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        tasks: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Predictions kept per task.
        #[arg(long, default_value_t = 10)]
        k: usize,
    },
    /// Expand, fuse, and re-rank an agent's file predictions.
    Enhance {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        tasks: PathBuf,
        /// The agent's initial predictions (task_id<TAB>rank<TAB>path).
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        mailkb: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Per-task provenance destination (default: <out>.provenance.json).
        #[arg(long)]
        provenance: Option<PathBuf>,
        /// Final list length; overrides the configured k_final.
        #[arg(long)]
        k: Option<usize>,
        /// Full request/response transcript destination (JSONL).
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Score predictions against gold files (or methods with --methods).
    Eval {
        #[arg(long)]
        tasks: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        /// Second prediction set; adds a paired significance test of
        /// per-task reciprocal ranks (first set minus second).
        #[arg(long)]
        against: Option<PathBuf>,
        /// Score path::element pairs instead of files.
        #[arg(long)]
        methods: bool,
        /// Recall cutoffs.
        #[arg(long, value_delimiter = ',', default_values_t = vec![1usize, 5, 10])]
        k: Vec<usize>,
        /// Machine-readable report destination (JSON).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Descend from predicted files to path::element pairs.
    Methods {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        tasks: PathBuf,
        /// File-level predictions to descend from.
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Full request/response transcript destination (JSONL).
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineMethod {
    Bm25,
    Rvsm,
    Bluir,
    Embed,
}

impl BaselineMethod {
    fn name(&self) -> &'static str {
        match self {
            BaselineMethod::Bm25 => "bm25",
            BaselineMethod::Rvsm => "rvsm",
            BaselineMethod::Bluir => "bluir",
            BaselineMethod::Embed => "embed",
        }
    }
}

/// Per-million-token prices used for the cost estimate printed after runs
/// that call a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PriceTable {
    pub prompt_per_million: f64,
    pub completion_per_million: f64,
}

impl Default for PriceTable {
    fn default() -> Self {
        PriceTable { prompt_per_million: 2.5, completion_per_million: 10.0 }
    }
}

impl PriceTable {
    pub fn cost(&self, prompt_tokens: u64, completion_tokens: u64) -> f64 {
        (prompt_tokens as f64 * self.prompt_per_million
            + completion_tokens as f64 * self.completion_per_million)
            / 1e6
    }
}

/// The optional TOML configuration file. Every table and field may be
/// omitted; flags override whatever it sets.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub provider: Option<HttpProviderConfig>,
    pub pipeline: Option<PipelineConfig>,
    pub budget: Option<PromptBudget>,
    pub pricing: Option<PriceTable>,
}

/// Everything a run needs beyond its input paths, resolved from defaults,
/// then the configuration file, then flags, in that order.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub provider: HttpProviderConfig,
    pub pipeline: PipelineConfig,
    pub budget: PromptBudget,
    pub pricing: PriceTable,
    pub seed: u64,
    pub jobs: usize,
    pub offline: bool,
    pub mock_script: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            provider: HttpProviderConfig::default(),
            pipeline: PipelineConfig::default(),
            budget: PromptBudget::default(),
            pricing: PriceTable::default(),
            seed: DEFAULT_SEED,
            jobs: 1,
            offline: false,
            mock_script: None,
        }
    }
}

impl RunConfig {
    pub fn resolve(
        config: Option<&Path>,
        offline: bool,
        mock_script: Option<&Path>,
        seed: Option<u64>,
        jobs: Option<usize>,
    ) -> Result<RunConfig> {
        let mut run = RunConfig::default();
        if let Some(path) = config {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            let file: FileConfig = toml::from_str(&text)
                .with_context(|| format!("parsing config {}", path.display()))?;
            if let Some(s) = file.seed {
                run.seed = s;
            }
            if let Some(j) = file.jobs {
                run.jobs = j;
            }
            if let Some(p) = file.provider {
                run.provider = p;
            }
            if let Some(p) = file.pipeline {
                run.pipeline = p;
            }
            if let Some(b) = file.budget {
                run.budget = b;
            }
            if let Some(p) = file.pricing {
                run.pricing = p;
            }
        }
        run.offline = offline;
        if let Some(p) = mock_script {
            run.mock_script = Some(p.to_path_buf());
        }
        if let Some(s) = seed {
            run.seed = s;
        }
        if let Some(j) = jobs {
            run.jobs = j;
        }
        ensure!(run.jobs >= 1, "--jobs must be at least 1");
        if let Some(p) = &run.mock_script {
            require_exists("mock script", p)?;
        }
        Ok(run)
    }

    fn from_cli(cli: &Cli) -> Result<RunConfig> {
        RunConfig::resolve(
            cli.config.as_deref(),
            cli.offline,
            cli.mock_script.as_deref(),
            cli.seed,
            cli.jobs,
        )
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = RunConfig::from_cli(&cli)?;
    match cli.command {
        Command::Index { root, out } => {
            cmd_index(&root, &out)?;
        }
        Command::BuildMailkb { mbox, out, report } => {
            cmd_build_mailkb(&mbox, &out, report.as_deref())?;
        }
        Command::Baseline { method, index, tasks, out, k } => {
            cmd_baseline(method, &index, &tasks, &out, k, &cfg)?;
        }
        Command::Enhance { index, tasks, predictions, mailkb, out, provenance, k, transcript } => {
            let mut cfg = cfg;
            if let Some(k) = k {
                cfg.pipeline.k_final = k;
            }
            cmd_enhance(
                &index,
                &tasks,
                &predictions,
                mailkb.as_deref(),
                &out,
                provenance.as_deref(),
                transcript.as_deref(),
                &cfg,
            )?;
        }
        Command::Eval { tasks, predictions, against, methods, k, out } => {
            cmd_eval(
                &tasks,
                &predictions,
                against.as_deref(),
                &k,
                methods,
                out.as_deref(),
                cfg.seed,
            )?;
        }
        Command::Methods { index, tasks, predictions, out, transcript } => {
            cmd_methods(&index, &tasks, &predictions, &out, transcript.as_deref(), &cfg)?;
        }
    }
    Ok(())
}

fn require_exists(role: &str, path: &Path) -> Result<()> {
    ensure!(path.exists(), "{role} path {} does not exist", path.display());
    Ok(())
}

/// Writes through a temporary sibling and renames, so readers never see a
/// half-written file and identical reruns leave identical bytes.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path)
        .with_context(|| format!("renaming {} to {}", tmp.display(), path.display()))?;
    Ok(())
}

/// Order-preserving map over `items` with up to `jobs` worker threads.
/// Workers take strided slots, so output index i always holds f(items[i]).
fn parallel_map<T, R, F>(jobs: usize, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let jobs = jobs.clamp(1, items.len().max(1));
    if jobs <= 1 {
        return items.iter().map(f).collect();
    }
    let mut indexed: Vec<(usize, R)> = std::thread::scope(|s| {
        let f = &f;
        let handles: Vec<_> = (0..jobs)
            .map(|w| {
                s.spawn(move || {
                    items
                        .iter()
                        .enumerate()
                        .skip(w)
                        .step_by(jobs)
                        .map(|(i, t)| (i, f(t)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    });
    indexed.sort_by_key(|(i, _)| *i);
    indexed.into_iter().map(|(_, r)| r).collect()
}

fn make_client(run: &RunConfig) -> Result<LlmClient> {
    let provider: Arc<dyn TextModelProvider> = if run.offline {
        let script = match &run.mock_script {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading mock script {}", path.display()))?;
                MockScript::from_jsonl(&text)
                    .with_context(|| format!("parsing mock script {}", path.display()))?
            }
            None => MockScript::new(Vec::new()),
        };
        Arc::new(MockProvider::new(script))
    } else {
        Arc::new(HttpProvider::from_config(run.provider.clone())?)
    };
    Ok(LlmClient::new(provider, run.budget.clone(), run.offline))
}

fn print_token_summary(client: &LlmClient, pricing: &PriceTable) {
    let (prompt, completion) = client.token_totals();
    println!(
        "model calls: {}   # tokens: {} prompt + {} completion   est. cost: ${:.4}",
        client.transcript_len(),
        prompt,
        completion,
        pricing.cost(prompt, completion)
    );
}

fn write_transcript(client: &LlmClient, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    client.export_transcript(&mut buf).context("serializing transcript")?;
    atomic_write(path, &buf)
}

/// Appends `suffix` to the file name: `preds.tsv` -> `preds.tsv.rejections.json`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    path.with_file_name(format!("{name}.{suffix}"))
}

pub struct IndexSummary {
    pub n_files: usize,
    pub out: PathBuf,
}

pub fn cmd_index(root: &Path, out: &Path) -> Result<IndexSummary> {
    require_exists("codebase root", root)?;
    let index = index_codebase(root)
        .with_context(|| format!("indexing {}", root.display()))?;
    let mut buf = Vec::new();
    index.save(&mut buf)?;
    atomic_write(out, &buf)?;
    println!("indexed {} files under {} -> {}", index.len(), root.display(), out.display());
    Ok(IndexSummary { n_files: index.len(), out: out.to_path_buf() })
}

pub struct MailkbSummary {
    pub accepted: usize,
    pub rejections: RejectionCounts,
    pub out: PathBuf,
    pub report: PathBuf,
}

pub fn cmd_build_mailkb(mbox: &Path, out: &Path, report: Option<&Path>) -> Result<MailkbSummary> {
    require_exists("mbox", mbox)?;
    let (emails, rejections) = ingest_mbox(mbox)
        .with_context(|| format!("ingesting {}", mbox.display()))?;
    let index = build_mail_index(emails);
    let mut buf = Vec::new();
    index.save(&mut buf)?;
    atomic_write(out, &buf)?;

    let report_path = report.map(Path::to_path_buf).unwrap_or_else(|| sibling(out, "rejections.json"));
    #[derive(Serialize)]
    struct RejectionReport<'a> {
        accepted: usize,
        rejected_total: usize,
        rejected: &'a RejectionCounts,
    }
    let body = serde_json::to_vec_pretty(&RejectionReport {
        accepted: index.len(),
        rejected_total: rejections.total(),
        rejected: &rejections,
    })?;
    atomic_write(&report_path, &body)?;

    println!(
        "accepted {} mails ({} rejected: {} no patch, {} file count, {} url, {} keyword, {} duplicate) -> {}",
        index.len(),
        rejections.total(),
        rejections.no_patch,
        rejections.file_count,
        rejections.url,
        rejections.keyword,
        rejections.duplicate,
        out.display()
    );
    Ok(MailkbSummary { accepted: index.len(), rejections, out: out.to_path_buf(), report: report_path })
}

/// Per-task failures that did not abort a run: (task id, what went wrong).
pub type TaskFailures = Vec<(String, String)>;

fn records_from_lists(
    tasks: &[FLTask],
    results: Vec<Result<RankedList, RetrievalError>>,
    failures: &mut TaskFailures,
) -> Vec<PredictionRecord> {
    let mut records = Vec::new();
    for (task, res) in tasks.iter().zip(results) {
        match res {
            Ok(list) => {
                for (i, path) in list.paths().enumerate() {
                    records.push(PredictionRecord {
                        task_id: task.id.clone(),
                        rank: i + 1,
                        path: path.to_string(),
                        element: None,
                    });
                }
            }
            Err(e) => failures.push((task.id.clone(), e.to_string())),
        }
    }
    records
}

pub struct BaselineSummary {
    pub n_tasks: usize,
    pub failures: TaskFailures,
    pub out: PathBuf,
}

pub fn cmd_baseline(
    method: BaselineMethod,
    index_path: &Path,
    tasks_path: &Path,
    out: &Path,
    k: usize,
    run: &RunConfig,
) -> Result<BaselineSummary> {
    require_exists("index", index_path)?;
    require_exists("tasks", tasks_path)?;
    ensure!(k >= 1, "--k must be at least 1");
    let index = CodebaseIndex::load_from_path(index_path)?;
    let tasks = load_tasks_from_path(tasks_path)?;

    let embedder: Option<Box<dyn EmbeddingProvider>> = match method {
        BaselineMethod::Embed if run.offline => Some(Box::new(HashedEmbedder::new(OFFLINE_EMBED_DIMS))),
        BaselineMethod::Embed => Some(Box::new(HttpProvider::from_config(run.provider.clone())?)),
        _ => None,
    };
    let fields = matches!(method, BaselineMethod::Bluir)
        .then(|| kfl_core::retrieval::build_entity_fields(&index));

    let results = parallel_map(run.jobs, &tasks, |task| {
        let query = Query::from_report(&task.report);
        match method {
            BaselineMethod::Bm25 => bm25_rank(&index, &query, k),
            BaselineMethod::Rvsm => rvsm_rank(&index, &query, k),
            BaselineMethod::Bluir => match &fields {
                Some(f) => kfl_core::retrieval::bluir_rank_with(&index, f, &task.report, k),
                None => bluir_rank(&index, &task.report, k),
            },
            BaselineMethod::Embed => {
                embed_rank(embedder.as_deref().expect("embedder built above"), &index, &query, k)
            }
        }
    });

    let mut failures = TaskFailures::new();
    let records = records_from_lists(&tasks, results, &mut failures);
    let mut buf = Vec::new();
    write_predictions(&mut buf, &records)?;
    atomic_write(out, &buf)?;

    println!(
        "{}: ranked {} tasks ({} failed) -> {}",
        method.name(),
        tasks.len(),
        failures.len(),
        out.display()
    );
    for (id, err) in &failures {
        eprintln!("  task {id}: {err}");
    }
    Ok(BaselineSummary { n_tasks: tasks.len(), failures, out: out.to_path_buf() })
}

/// Machine-readable companion to an enhanced prediction file: the full
/// per-task pipeline outcome plus any per-task hard failures.
#[derive(Serialize)]
pub struct ProvenanceFile {
    pub tasks: BTreeMap<String, LocalizeOutcome>,
    pub failures: BTreeMap<String, String>,
}

pub struct EnhanceSummary {
    pub n_tasks: usize,
    pub failures: TaskFailures,
    /// Tasks where at least one source degraded to empty.
    pub degraded: usize,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub cost: f64,
    pub out: PathBuf,
    pub provenance: PathBuf,
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_enhance(
    index_path: &Path,
    tasks_path: &Path,
    predictions_path: &Path,
    mailkb_path: Option<&Path>,
    out: &Path,
    provenance_path: Option<&Path>,
    transcript_path: Option<&Path>,
    run: &RunConfig,
) -> Result<EnhanceSummary> {
    require_exists("index", index_path)?;
    require_exists("tasks", tasks_path)?;
    require_exists("predictions", predictions_path)?;
    run.pipeline.validate().map_err(|e| anyhow::anyhow!(e))?;

    let index = CodebaseIndex::load_from_path(index_path)?;
    let tasks = load_tasks_from_path(tasks_path)?;
    let records = read_predictions_from_path(predictions_path)?;
    let lists = predictions_as_file_lists(&records);
    for id in lists.keys() {
        ensure!(
            tasks.iter().any(|t| &t.id == id),
            "predictions mention task {id}, which the task file does not contain"
        );
    }

    let mail_index = match mailkb_path {
        Some(p) => {
            require_exists("mail knowledge base", p)?;
            Some(MailIndex::load_from_path(p)?)
        }
        None => None,
    };
    if run.pipeline.enable_mail && mail_index.is_none() {
        bail!("mail expansion is enabled but no --mailkb was given (pass one or disable it in the config)");
    }

    let client = make_client(run)?;
    let deps = PipelineDeps { index: &index, mail_index: mail_index.as_ref(), client: &client };

    let outcomes = parallel_map(run.jobs, &tasks, |task| {
        let initial = match lists.get(&task.id) {
            Some(list) => AgentPrediction::new(task.id.clone(), list.to_path_vec()),
            None => AgentPrediction::empty(task.id.clone()),
        };
        localize(task, &initial, &run.pipeline, &deps)
    });

    let mut prediction_records = Vec::new();
    let mut provenance = ProvenanceFile { tasks: BTreeMap::new(), failures: BTreeMap::new() };
    let mut failures = TaskFailures::new();
    let mut degraded = 0usize;
    for (task, res) in tasks.iter().zip(outcomes) {
        match res {
            Ok(outcome) => {
                for (i, path) in outcome.final_list.paths().enumerate() {
                    prediction_records.push(PredictionRecord {
                        task_id: task.id.clone(),
                        rank: i + 1,
                        path: path.to_string(),
                        element: None,
                    });
                }
                if !outcome.failed_sources.is_empty() {
                    degraded += 1;
                }
                provenance.tasks.insert(task.id.clone(), outcome);
            }
            Err(e) => {
                failures.push((task.id.clone(), e.to_string()));
                provenance.failures.insert(task.id.clone(), e.to_string());
            }
        }
    }

    let mut buf = Vec::new();
    write_predictions(&mut buf, &prediction_records)?;
    atomic_write(out, &buf)?;
    let provenance_path =
        provenance_path.map(Path::to_path_buf).unwrap_or_else(|| sibling(out, "provenance.json"));
    atomic_write(&provenance_path, &serde_json::to_vec_pretty(&provenance)?)?;
    if let Some(p) = transcript_path {
        write_transcript(&client, p)?;
    }

    let (prompt_tokens, completion_tokens) = client.token_totals();
    println!(
        "enhanced {} tasks ({} failed, {} with a degraded source) -> {}",
        tasks.len(),
        failures.len(),
        degraded,
        out.display()
    );
    for (id, err) in &failures {
        eprintln!("  task {id}: {err}");
    }
    print_token_summary(&client, &run.pricing);
    Ok(EnhanceSummary {
        n_tasks: tasks.len(),
        failures,
        degraded,
        prompt_tokens,
        completion_tokens,
        cost: run.pricing.cost(prompt_tokens, completion_tokens),
        out: out.to_path_buf(),
        provenance: provenance_path,
    })
}

/// Machine-readable evaluation output.
#[derive(Serialize)]
pub struct EvalFile {
    pub primary: EvalReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub against: Option<EvalReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub significance: Option<SignificanceResult>,
}

pub struct EvalSummary {
    pub primary: EvalReport,
    pub against: Option<EvalReport>,
    pub significance: Option<SignificanceResult>,
}

fn load_eval_report(
    path: &Path,
    tasks: &[FLTask],
    ks: &[usize],
    methods: bool,
) -> Result<EvalReport> {
    require_exists("predictions", path)?;
    let records = read_predictions_from_path(path)?;
    if methods {
        let mut lists = predictions_as_method_lists(&records)?;
        for t in tasks {
            lists.entry(t.id.clone()).or_default();
        }
        Ok(method_evaluate(&lists, tasks, ks)?)
    } else {
        let mut lists = predictions_as_file_lists(&records);
        fill_missing_predictions(&mut lists, tasks);
        Ok(evaluate(&lists, tasks, ks)?)
    }
}

fn print_eval_row(name: &str, report: &EvalReport, ks: &[usize]) {
    let mut row = format!("{name:<12}");
    for k in ks {
        row.push_str(&format!("  recall@{k} = {:.4}", report.recall_at[k]));
    }
    row.push_str(&format!("  MRR = {:.4}", report.mrr));
    println!("{row}");
}

pub fn cmd_eval(
    tasks_path: &Path,
    predictions_path: &Path,
    against_path: Option<&Path>,
    ks: &[usize],
    methods: bool,
    out: Option<&Path>,
    seed: u64,
) -> Result<EvalSummary> {
    require_exists("tasks", tasks_path)?;
    ensure!(!ks.is_empty(), "--k needs at least one cutoff");
    let tasks = load_tasks_from_path(tasks_path)?;
    let primary = load_eval_report(predictions_path, &tasks, ks, methods)?;
    print_eval_row("predictions", &primary, ks);

    let mut against = None;
    let mut sig = None;
    if let Some(path) = against_path {
        let other = load_eval_report(path, &tasks, ks, methods)?;
        print_eval_row("against", &other, ks);
        let a: Vec<f64> = tasks.iter().map(|t| primary.per_task[&t.id].reciprocal_rank).collect();
        let b: Vec<f64> = tasks.iter().map(|t| other.per_task[&t.id].reciprocal_rank).collect();
        let s = significance(&a, &b, seed)?;
        println!(
            "paired t = {:.6}, p = {:.6}, mean diff = {:+.4}, n = {}{}",
            s.t_stat,
            s.p_value,
            s.mean_diff,
            s.n,
            if s.degenerate { " (degenerate: constant differences)" } else { "" }
        );
        against = Some(other);
        sig = Some(s);
    }

    if let Some(path) = out {
        let file = EvalFile {
            primary: primary.clone(),
            against: against.clone(),
            significance: sig.clone(),
        };
        atomic_write(path, &serde_json::to_vec_pretty(&file)?)?;
    }
    Ok(EvalSummary { primary, against, significance: sig })
}

pub struct MethodsSummary {
    pub n_tasks: usize,
    /// Tasks skipped because they had no file predictions to descend from.
    pub skipped: usize,
    pub failures: TaskFailures,
    pub out: PathBuf,
}

pub fn cmd_methods(
    index_path: &Path,
    tasks_path: &Path,
    predictions_path: &Path,
    out: &Path,
    transcript_path: Option<&Path>,
    run: &RunConfig,
) -> Result<MethodsSummary> {
    require_exists("index", index_path)?;
    require_exists("tasks", tasks_path)?;
    require_exists("predictions", predictions_path)?;
    let index = CodebaseIndex::load_from_path(index_path)?;
    let tasks = load_tasks_from_path(tasks_path)?;
    let records = read_predictions_from_path(predictions_path)?;
    let lists = predictions_as_file_lists(&records);
    let client = make_client(run)?;

    enum TaskOut {
        Pairs(Vec<(String, String)>),
        Skipped,
        Failed(String),
    }
    let results = parallel_map(run.jobs, &tasks, |task| {
        match lists.get(&task.id) {
            Some(files) if !files.is_empty() => {
                match method_localize(&task.report, files, &index, &client) {
                    Ok(pairs) => TaskOut::Pairs(pairs),
                    Err(e) => TaskOut::Failed(e.to_string()),
                }
            }
            _ => TaskOut::Skipped,
        }
    });

    let mut out_records = Vec::new();
    let mut skipped = 0usize;
    let mut failures = TaskFailures::new();
    for (task, res) in tasks.iter().zip(results) {
        match res {
            TaskOut::Pairs(pairs) => {
                for (i, (path, element)) in pairs.into_iter().enumerate() {
                    out_records.push(PredictionRecord {
                        task_id: task.id.clone(),
                        rank: i + 1,
                        path,
                        element: Some(element),
                    });
                }
            }
            TaskOut::Skipped => skipped += 1,
            TaskOut::Failed(e) => failures.push((task.id.clone(), e)),
        }
    }

    let mut buf = Vec::new();
    write_predictions(&mut buf, &out_records)?;
    atomic_write(out, &buf)?;
    if let Some(p) = transcript_path {
        write_transcript(&client, p)?;
    }

    println!(
        "method-level output for {} tasks ({} skipped, {} failed) -> {}",
        tasks.len(),
        skipped,
        failures.len(),
        out.display()
    );
    for (id, err) in &failures {
        eprintln!("  task {id}: {err}");
    }
    print_token_summary(&client, &run.pricing);
    Ok(MethodsSummary { n_tasks: tasks.len(), skipped, failures, out: out.to_path_buf() })
}
