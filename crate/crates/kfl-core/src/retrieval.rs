//! IR baselines that rank indexed files against a bug report: plain BM25,
//! the length-boosted tf-idf cosine used by BugLocator, structured
//! entity-field retrieval in the BLUiR style, and embedding cosine via a
//! pluggable provider.
//!
//! All rankers share the conventions: scores strictly positive (files with
//! no evidence are omitted), descending order with lexicographic path
//! tie-break, output truncated to k.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::benchmark::BugReport;
use crate::corpus::{tokenize, CodebaseIndex, CodeEntities};
use crate::llm::{truncate_chars, EmbeddingProvider, ProviderError};

pub const BM25_K1: f64 = 1.2;
pub const BM25_B: f64 = 0.75;

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("cannot rank over an empty index")]
    EmptyIndex,
    #[error("embedding provider failed")]
    Provider(#[from] ProviderError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedItem {
    pub path: String,
    /// Absent for rankings that carry order but no scores, e.g. model
    /// output or prediction files.
    pub score: Option<f64>,
}

/// A ranking of file paths, best first. Construction enforces uniqueness
/// and, for scored lists, descending order with lexicographic tie-break.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct RankedList {
    items: Vec<RankedItem>,
    k_limit: Option<usize>,
}

impl RankedList {
    pub fn from_scored(scored: Vec<(String, f64)>) -> RankedList {
        let mut items: Vec<RankedItem> =
            scored.into_iter().map(|(path, s)| RankedItem { path, score: Some(s) }).collect();
        items.sort_by(|a, b| {
            b.score
                .unwrap()
                .total_cmp(&a.score.unwrap())
                .then_with(|| a.path.cmp(&b.path))
        });
        debug_assert!(
            items.windows(2).all(|w| w[0].path != w[1].path),
            "scored input contains duplicate paths"
        );
        RankedList { items, k_limit: None }
    }

    /// Order-preserving, duplicates keep their first position, no scores.
    pub fn from_paths(paths: Vec<String>) -> RankedList {
        let mut items: Vec<RankedItem> = Vec::with_capacity(paths.len());
        for path in paths {
            if !items.iter().any(|i| i.path == path) {
                items.push(RankedItem { path, score: None });
            }
        }
        RankedList { items, k_limit: None }
    }

    pub fn truncated(mut self, k: usize) -> RankedList {
        self.items.truncate(k);
        self.k_limit = Some(k);
        self
    }

    pub fn items(&self) -> &[RankedItem] {
        &self.items
    }

    pub fn paths(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(|i| i.path.as_str())
    }

    pub fn to_path_vec(&self) -> Vec<String> {
        self.items.iter().map(|i| i.path.clone()).collect()
    }

    /// 1-based; None encodes the rank-infinity convention for absent files.
    pub fn rank_of(&self, path: &str) -> Option<usize> {
        self.items.iter().position(|i| i.path == path).map(|p| p + 1)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn k_limit(&self) -> Option<usize> {
        self.k_limit
    }
}

/// A bug report as an IR query: raw text plus its token stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub text: String,
    pub tokens: Vec<String>,
}

impl Query {
    pub fn new(text: impl Into<String>) -> Query {
        let text = text.into();
        let tokens = tokenize(&text);
        Query { text, tokens }
    }

    pub fn from_report(report: &BugReport) -> Query {
        Query::new(report.query_text())
    }
}

pub(crate) fn bm25_idf(n_docs: usize, df: usize) -> f64 {
    (1.0 + (n_docs as f64 - df as f64 + 0.5) / (df as f64 + 0.5)).ln()
}

pub(crate) fn bm25_term(tf: f64, doc_len: f64, avg_len: f64) -> f64 {
    tf * (BM25_K1 + 1.0) / (tf + BM25_K1 * (1.0 - BM25_B + BM25_B * doc_len / avg_len))
}

fn collect_top(index: &CodebaseIndex, scores: HashMap<usize, f64>, k: usize) -> RankedList {
    let scored: Vec<(String, f64)> = scores
        .into_iter()
        .filter(|(_, s)| *s > 0.0)
        .map(|(id, s)| (index.path(id).to_string(), s))
        .collect();
    RankedList::from_scored(scored).truncated(k)
}

/// Okapi BM25 over whole-file token streams. Query tokens count with
/// multiplicity: a term appearing twice in the report contributes twice.
pub fn bm25_rank(
    index: &CodebaseIndex,
    query: &Query,
    k: usize,
) -> Result<RankedList, RetrievalError> {
    assert!(k >= 1, "k must be at least 1");
    if index.is_empty() {
        return Err(RetrievalError::EmptyIndex);
    }
    let n = index.len();
    let avg = index.avg_doc_length();
    let mut scores: HashMap<usize, f64> = HashMap::new();
    for t in &query.tokens {
        let Some(postings) = index.postings(t) else { continue };
        let idf = bm25_idf(n, postings.len());
        for &(doc, tf) in postings {
            *scores.entry(doc).or_insert(0.0) +=
                idf * bm25_term(tf as f64, index.doc_length(doc) as f64, avg);
        }
    }
    Ok(collect_top(index, scores, k))
}

/// Length-boosted tf-idf cosine: weights (1 + ln tf) · ln(N/df) on both
/// sides, cosine similarity, multiplied by a logistic boost of the
/// min-max-normalized document length so that at equal cosine the longer
/// file wins. No bug-history term.
pub fn rvsm_rank(
    index: &CodebaseIndex,
    query: &Query,
    k: usize,
) -> Result<RankedList, RetrievalError> {
    assert!(k >= 1, "k must be at least 1");
    if index.is_empty() {
        return Err(RetrievalError::EmptyIndex);
    }
    let n = index.len();
    let nf = n as f64;
    let idf = |df: usize| (nf / df as f64).ln();

    // Term order is sorted before every float accumulation: map iteration
    // order is not stable across runs, and identically-weighted documents
    // must produce bit-identical scores for the path tie-break to apply.
    let mut q_tf: HashMap<&str, u32> = HashMap::new();
    for t in &query.tokens {
        *q_tf.entry(t.as_str()).or_insert(0) += 1;
    }
    let mut q_terms: Vec<(&str, u32)> = q_tf.into_iter().collect();
    q_terms.sort_by(|a, b| a.0.cmp(b.0));
    let mut q_weights: Vec<(&str, f64)> = Vec::new();
    let mut q_norm_sq = 0.0;
    for (t, tf) in q_terms {
        let df = index.df(t);
        if df == 0 {
            continue;
        }
        let w = (1.0 + (tf as f64).ln()) * idf(df);
        q_weights.push((t, w));
        q_norm_sq += w * w;
    }
    if q_norm_sq == 0.0 {
        return Ok(RankedList::default().truncated(k));
    }
    let q_norm = q_norm_sq.sqrt();

    let mut doc_norm = vec![0.0f64; n];
    for (id, norm) in doc_norm.iter_mut().enumerate() {
        let mut terms: Vec<(&str, u32)> =
            index.tokens_of(id).iter().map(|(t, &tf)| (t.as_str(), tf)).collect();
        terms.sort_by(|a, b| a.0.cmp(b.0));
        let mut sq = 0.0;
        for (tok, tf) in terms {
            let w = (1.0 + (tf as f64).ln()) * idf(index.df(tok));
            sq += w * w;
        }
        *norm = sq.sqrt();
    }

    let min_len = (0..n).map(|id| index.doc_length(id)).min().unwrap() as f64;
    let max_len = (0..n).map(|id| index.doc_length(id)).max().unwrap() as f64;
    let boost = |len: f64| {
        let norm = if max_len > min_len { (len - min_len) / (max_len - min_len) } else { 0.5 };
        1.0 / (1.0 + (-norm).exp())
    };

    let mut dots: HashMap<usize, f64> = HashMap::new();
    for (t, wq) in q_weights {
        let postings = index.postings(t).expect("df > 0 implies postings");
        let term_idf = idf(postings.len());
        for &(doc, tf) in postings {
            *dots.entry(doc).or_insert(0.0) += wq * (1.0 + (tf as f64).ln()) * term_idf;
        }
    }
    let scores: HashMap<usize, f64> = dots
        .into_iter()
        .filter(|(doc, _)| doc_norm[*doc] > 0.0)
        .map(|(doc, dot)| {
            let cos = dot / (q_norm * doc_norm[doc]);
            (doc, cos * boost(index.doc_length(doc) as f64))
        })
        .collect();
    Ok(collect_top(index, scores, k))
}

/// Per-field BM25 statistics for one entity field across the corpus.
struct FieldStats {
    doc_tfs: Vec<HashMap<String, u32>>,
    doc_lens: Vec<usize>,
    avg_len: f64,
    dfs: HashMap<String, usize>,
}

impl FieldStats {
    fn build(field_docs: Vec<Vec<String>>) -> FieldStats {
        let n = field_docs.len();
        let mut doc_tfs = Vec::with_capacity(n);
        let mut doc_lens = Vec::with_capacity(n);
        let mut dfs: HashMap<String, usize> = HashMap::new();
        for tokens in field_docs {
            let mut tfs: HashMap<String, u32> = HashMap::new();
            doc_lens.push(tokens.len());
            for t in tokens {
                *tfs.entry(t).or_insert(0) += 1;
            }
            for t in tfs.keys() {
                *dfs.entry(t.clone()).or_insert(0) += 1;
            }
            doc_tfs.push(tfs);
        }
        let avg_len = if n == 0 { 0.0 } else { doc_lens.iter().sum::<usize>() as f64 / n as f64 };
        FieldStats { doc_tfs, doc_lens, avg_len, dfs }
    }

    fn bm25(&self, query_tokens: &[String], doc: usize) -> f64 {
        if self.avg_len == 0.0 {
            return 0.0;
        }
        let n = self.doc_tfs.len();
        let mut score = 0.0;
        for t in query_tokens {
            let Some(&df) = self.dfs.get(t) else { continue };
            let Some(&tf) = self.doc_tfs[doc].get(t) else { continue };
            score +=
                bm25_idf(n, df) * bm25_term(tf as f64, self.doc_lens[doc] as f64, self.avg_len);
        }
        score
    }
}

/// The four document-side entity fields, precomputed once per index so a
/// task batch does not re-tokenize entities per query.
pub struct EntityFields {
    fields: [FieldStats; 4],
    n_docs: usize,
}

fn entity_field_tokens(e: &CodeEntities) -> [Vec<String>; 4] {
    let functions = tokenize(&e.function_names.join(" "));
    let mut structs_macros = e.struct_names.join(" ");
    structs_macros.push(' ');
    structs_macros.push_str(&e.macro_names.join(" "));
    let structs_macros = tokenize(&structs_macros);
    let identifiers = tokenize(&e.identifiers.join(" "));
    let comments = tokenize(&e.comments.join("\n"));
    [functions, structs_macros, identifiers, comments]
}

pub fn build_entity_fields(index: &CodebaseIndex) -> EntityFields {
    let n = index.len();
    let mut per_field: [Vec<Vec<String>>; 4] = Default::default();
    for id in 0..n {
        let field_tokens = entity_field_tokens(index.entities(id));
        for (f, tokens) in field_tokens.into_iter().enumerate() {
            per_field[f].push(tokens);
        }
    }
    let [f0, f1, f2, f3] = per_field;
    EntityFields {
        fields: [
            FieldStats::build(f0),
            FieldStats::build(f1),
            FieldStats::build(f2),
            FieldStats::build(f3),
        ],
        n_docs: n,
    }
}

/// Structured retrieval: a BM25 score for each of the 8 pairs of query
/// field {title, description} × entity field {functions, structs+macros,
/// identifiers, comments}, summed without weights.
pub fn bluir_rank(
    index: &CodebaseIndex,
    report: &BugReport,
    k: usize,
) -> Result<RankedList, RetrievalError> {
    let fields = build_entity_fields(index);
    bluir_rank_with(index, &fields, report, k)
}

/// [`bluir_rank`] against prebuilt field statistics.
pub fn bluir_rank_with(
    index: &CodebaseIndex,
    fields: &EntityFields,
    report: &BugReport,
    k: usize,
) -> Result<RankedList, RetrievalError> {
    assert!(k >= 1, "k must be at least 1");
    if index.is_empty() {
        return Err(RetrievalError::EmptyIndex);
    }
    assert_eq!(fields.n_docs, index.len(), "field statistics built from a different index");
    let query_fields = [tokenize(&report.title), tokenize(&report.description)];
    let mut scores: HashMap<usize, f64> = HashMap::new();
    for doc in 0..index.len() {
        let mut s = 0.0;
        for q in &query_fields {
            for f in &fields.fields {
                s += f.bm25(q, doc);
            }
        }
        if s > 0.0 {
            scores.insert(doc, s);
        }
    }
    Ok(collect_top(index, scores, k))
}

fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let mut dot = 0.0f64;
    let mut na = 0.0f64;
    let mut nb = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        dot += *x as f64 * *y as f64;
        na += (*x as f64).powi(2);
        nb += (*y as f64).powi(2);
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na.sqrt() * nb.sqrt())
}

/// Embedding cosine between the query text and each file's content
/// (truncated to the provider's input limit). Provider failures propagate;
/// non-positive similarities are suppressed like every other ranker.
pub fn embed_rank(
    provider: &dyn EmbeddingProvider,
    index: &CodebaseIndex,
    query: &Query,
    k: usize,
) -> Result<RankedList, RetrievalError> {
    assert!(k >= 1, "k must be at least 1");
    if index.is_empty() {
        return Err(RetrievalError::EmptyIndex);
    }
    let limit = provider.max_input_chars();
    let q = provider.embed(truncate_chars(&query.text, limit))?;
    let mut scored = Vec::new();
    for file in index.files() {
        let v = provider.embed(truncate_chars(&file.content, limit))?;
        let cos = cosine(&q, &v);
        if cos > 0.0 {
            scored.push((file.path.clone(), cos));
        }
    }
    Ok(RankedList::from_scored(scored).truncated(k))
}
