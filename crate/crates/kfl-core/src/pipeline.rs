//! The enhancement pipeline: expand an agent's initial file predictions
//! through three independent sources (directory neighborhood, direct cause
//! hypothesis, mail-augmented hypothesis), fuse them by reciprocal rank,
//! optionally let the model rerank the fused list, and descend to method
//! level over file skeletons.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::benchmark::{BugReport, FLTask};
use crate::corpus::{directory_files, extract_skeleton, CodebaseIndex};
use crate::llm::{
    build_directory_prompt, build_hypothesis_prompt, build_method_prompt, build_rerank_prompt,
    parse_element_list, parse_file_list, parse_hypotheses, HypothesisParse, LlmClient,
    ProviderError,
};
use crate::mailkb::{retrieve_mails, summarize_report, MailIndex};
use crate::retrieval::RankedList;

/// Method-level output never exceeds this many (file, element) pairs.
pub const MAX_METHOD_PAIRS: usize = 10;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration enables no expansion source")]
    NoSourceEnabled,
    #[error("mail expansion enabled but no mail index supplied")]
    MissingMailIndex,
    #[error("model call failed")]
    Provider(#[from] ProviderError),
}

/// An agent's ranked file prediction for one task. Duplicates are folded
/// at construction, keeping the first occurrence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentPrediction {
    pub task_id: String,
    pub files: Vec<String>,
}

impl AgentPrediction {
    pub fn new(task_id: impl Into<String>, files: Vec<String>) -> AgentPrediction {
        let mut unique: Vec<String> = Vec::with_capacity(files.len());
        for f in files {
            if !unique.contains(&f) {
                unique.push(f);
            }
        }
        AgentPrediction { task_id: task_id.into(), files: unique }
    }

    pub fn empty(task_id: impl Into<String>) -> AgentPrediction {
        AgentPrediction { task_id: task_id.into(), files: Vec::new() }
    }
}

/// The three per-source candidate lists feeding the merge.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct ExpansionResult {
    pub r_dir: RankedList,
    pub r_direct: RankedList,
    pub r_mail: RankedList,
}

/// Where a merged path came from: its 1-based rank in each source list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct SourceRanks {
    pub dir: Option<usize>,
    pub direct: Option<usize>,
    pub mail: Option<usize>,
}

impl SourceRanks {
    /// Reciprocal-rank sum, absent sources contributing zero. Summation
    /// order is fixed (dir, direct, mail) so equal rank multisets produce
    /// bit-identical scores for the lexicographic tie-break.
    pub fn score(&self) -> f64 {
        let mut s = 0.0;
        for r in [self.dir, self.direct, self.mail] {
            if let Some(r) = r {
                s += 1.0 / r as f64;
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct MergedCandidates {
    /// Descending by score, ties lexicographic by path.
    pub scored: Vec<(String, f64)>,
    pub provenance: BTreeMap<String, SourceRanks>,
}

impl MergedCandidates {
    pub fn paths(&self) -> Vec<String> {
        self.scored.iter().map(|(p, _)| p.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.scored.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scored.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub enable_dir: bool,
    pub enable_direct: bool,
    pub enable_mail: bool,
    pub enable_rerank: bool,
    pub k_dir: usize,
    pub k_mail: usize,
    pub k_final: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            enable_dir: true,
            enable_direct: true,
            enable_mail: true,
            enable_rerank: true,
            k_dir: 10,
            k_mail: 10,
            k_final: 10,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(self.enable_dir || self.enable_direct || self.enable_mail) {
            return Err(PipelineError::NoSourceEnabled);
        }
        Ok(())
    }
}

/// Asks the model to pick likely files from the directory neighborhood of
/// the initial prediction. No candidates means no provider call. Output is
/// model order, restricted to indexed paths, at most `k_dir` entries.
pub fn directory_expand(
    index: &CodebaseIndex,
    report: &BugReport,
    initial: &AgentPrediction,
    client: &LlmClient,
    k_dir: usize,
) -> Result<RankedList, ProviderError> {
    let candidates = directory_files(index, &initial.files);
    if candidates.is_empty() {
        return Ok(RankedList::default());
    }
    let req = build_directory_prompt(report, &candidates, client.budget());
    let Some(files) = client.complete_parsed(&req, parse_file_list)? else {
        return Ok(RankedList::default());
    };
    let valid: Vec<String> = files.into_iter().filter(|p| index.contains(p)).collect();
    Ok(RankedList::from_paths(valid).truncated(k_dir))
}

/// Files named by a hypothesis list, in cause order, first occurrence
/// wins, paths missing from the index discarded. Deliberately uncapped:
/// reciprocal-rank fusion discounts deep ranks on its own.
fn hypothesis_files(parse: HypothesisParse, index: &CodebaseIndex) -> RankedList {
    let valid: Vec<String> = parse
        .hypotheses
        .into_iter()
        .map(|h| h.code_file)
        .filter(|p| index.contains(p))
        .collect();
    RankedList::from_paths(valid)
}

/// Cause deduction from the report alone; sees nothing of the agent's
/// prediction.
pub fn direct_hypothesize(
    report: &BugReport,
    client: &LlmClient,
    index: &CodebaseIndex,
) -> Result<RankedList, ProviderError> {
    let req = build_hypothesis_prompt(report, None, client.budget());
    let parsed = client.complete_parsed(&req, parse_hypotheses)?;
    Ok(parsed.map(|p| hypothesis_files(p, index)).unwrap_or_default())
}

pub struct MailHypothesis {
    pub list: RankedList,
    /// message_ids of the mails shown to the model, retrieval order.
    pub retrieved: Vec<String>,
    /// True when retrieval found nothing and the prompt ran without a mail
    /// section, degrading to the direct-style prompt.
    pub fallback: bool,
}

/// Cause deduction with retrieved patch mails as extra evidence: the
/// report is condensed to the four-dimension query, mails predating the
/// report and touching the predicted files are retrieved, and the
/// hypothesis prompt runs with them attached.
pub fn mail_hypothesize(
    report: &BugReport,
    initial: &AgentPrediction,
    mail_index: &MailIndex,
    client: &LlmClient,
    index: &CodebaseIndex,
    k_mail: usize,
) -> Result<MailHypothesis, ProviderError> {
    let query = summarize_report(client, report)?;
    let mails = retrieve_mails(mail_index, &initial.files, &query, report.report_date, k_mail);
    let fallback = mails.is_empty();
    let req = if fallback {
        build_hypothesis_prompt(report, None, client.budget())
    } else {
        build_hypothesis_prompt(report, Some(&mails), client.budget())
    };
    let parsed = client.complete_parsed(&req, parse_hypotheses)?;
    Ok(MailHypothesis {
        list: parsed.map(|p| hypothesis_files(p, index)).unwrap_or_default(),
        retrieved: mails.into_iter().map(|m| m.message_id).collect(),
        fallback,
    })
}

/// Reciprocal-rank fusion of the three source lists: each source
/// contributes 1/rank for the paths it holds, absent sources contribute
/// nothing. Output is every path in the union, descending by score, ties
/// lexicographic.
pub fn merge_candidates(
    r_dir: &RankedList,
    r_direct: &RankedList,
    r_mail: &RankedList,
) -> MergedCandidates {
    let mut provenance: BTreeMap<String, SourceRanks> = BTreeMap::new();
    for (i, item) in r_dir.items().iter().enumerate() {
        provenance.entry(item.path.clone()).or_default().dir = Some(i + 1);
    }
    for (i, item) in r_direct.items().iter().enumerate() {
        provenance.entry(item.path.clone()).or_default().direct = Some(i + 1);
    }
    for (i, item) in r_mail.items().iter().enumerate() {
        provenance.entry(item.path.clone()).or_default().mail = Some(i + 1);
    }
    let mut scored: Vec<(String, f64)> =
        provenance.iter().map(|(path, ranks)| (path.clone(), ranks.score())).collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    MergedCandidates { scored, provenance }
}

/// Model reordering of the merged candidates. The model sees paths only;
/// paths it invents are dropped, paths it omits are appended in merged
/// order, and the result is cut to `k_final`. Unparseable output falls
/// back to the merged order rather than failing the task.
pub fn rerank(
    report: &BugReport,
    merged: &MergedCandidates,
    client: &LlmClient,
    k_final: usize,
) -> Result<RankedList, ProviderError> {
    assert!(!merged.is_empty(), "rerank needs at least one candidate");
    let paths = merged.paths();
    let req = build_rerank_prompt(report, &paths, client.budget());
    let parsed = client.complete_parsed(&req, parse_file_list)?;
    let ordered = match parsed {
        Some(model_order) => {
            let mut out: Vec<String> =
                model_order.into_iter().filter(|p| paths.contains(p)).collect();
            for p in &paths {
                if !out.contains(p) {
                    out.push(p.clone());
                }
            }
            out
        }
        None => paths,
    };
    Ok(RankedList::from_paths(ordered).truncated(k_final))
}

/// Read-only context one localization run needs.
pub struct PipelineDeps<'a> {
    pub index: &'a CodebaseIndex,
    pub mail_index: Option<&'a MailIndex>,
    pub client: &'a LlmClient,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalizeOutcome {
    pub final_list: RankedList,
    pub merged: MergedCandidates,
    pub expansions: ExpansionResult,
    /// Mail retrieval found nothing; the mail source ran direct-style.
    pub mail_fallback: bool,
    /// message_ids shown to the model by the mail source.
    pub retrieved_mails: Vec<String>,
    /// Sources whose provider calls failed; each contributed an empty
    /// list instead of aborting the task.
    pub failed_sources: Vec<&'static str>,
}

/// One task through the whole pipeline: enabled expansions in a fixed
/// order (dir, direct, mail, so transcripts are reproducible), merge,
/// optional rerank. A failing source degrades to an empty list and is
/// recorded; only configuration errors abort.
pub fn localize(
    task: &FLTask,
    initial: &AgentPrediction,
    config: &PipelineConfig,
    deps: &PipelineDeps,
) -> Result<LocalizeOutcome, PipelineError> {
    config.validate()?;
    if config.enable_mail && deps.mail_index.is_none() {
        return Err(PipelineError::MissingMailIndex);
    }
    let report = &task.report;
    let mut failed: Vec<&'static str> = Vec::new();

    let r_dir = if config.enable_dir {
        directory_expand(deps.index, report, initial, deps.client, config.k_dir)
            .unwrap_or_else(|e| {
                log::warn!("task {}: directory expansion failed: {e}", task.id);
                failed.push("dir");
                RankedList::default()
            })
    } else {
        RankedList::default()
    };

    let r_direct = if config.enable_direct {
        direct_hypothesize(report, deps.client, deps.index).unwrap_or_else(|e| {
            log::warn!("task {}: direct hypothesis failed: {e}", task.id);
            failed.push("direct");
            RankedList::default()
        })
    } else {
        RankedList::default()
    };

    let (r_mail, mail_fallback, retrieved_mails) = if config.enable_mail {
        let mail_index = deps.mail_index.expect("checked above");
        match mail_hypothesize(report, initial, mail_index, deps.client, deps.index, config.k_mail)
        {
            Ok(m) => (m.list, m.fallback, m.retrieved),
            Err(e) => {
                log::warn!("task {}: mail hypothesis failed: {e}", task.id);
                failed.push("mail");
                (RankedList::default(), false, Vec::new())
            }
        }
    } else {
        (RankedList::default(), false, Vec::new())
    };

    let expansions = ExpansionResult { r_dir, r_direct, r_mail };
    let merged = merge_candidates(&expansions.r_dir, &expansions.r_direct, &expansions.r_mail);

    let final_list = if merged.is_empty() {
        RankedList::default()
    } else if config.enable_rerank {
        rerank(report, &merged, deps.client, config.k_final).unwrap_or_else(|e| {
            log::warn!("task {}: rerank failed, keeping merged order: {e}", task.id);
            failed.push("rerank");
            RankedList::from_paths(merged.paths()).truncated(config.k_final)
        })
    } else {
        RankedList::from_paths(merged.paths()).truncated(config.k_final)
    };

    Ok(LocalizeOutcome {
        final_list,
        merged,
        expansions,
        mail_fallback,
        retrieved_mails,
        failed_sources: failed,
    })
}

/// Descends from ranked files to (file, element) pairs: skeletons of the
/// top files are included in rank order while the whole prompt stays under
/// the request budget (a file whose skeleton does not fit stops the
/// inclusion), the model picks elements, and pairs naming files not shown
/// or elements absent from their skeleton are dropped.
pub fn method_localize(
    report: &BugReport,
    files: &RankedList,
    index: &CodebaseIndex,
    client: &LlmClient,
) -> Result<Vec<(String, String)>, ProviderError> {
    assert!(!files.is_empty(), "method localization needs at least one file");
    let budget = client.budget();
    let mut skeletons: Vec<(String, String)> = Vec::new();
    let mut known: HashMap<String, HashSet<String>> = HashMap::new();
    for item in files.items() {
        let Some(id) = index.file_id(&item.path) else { continue };
        let file = index.file(id);
        let skel = extract_skeleton(file);
        let rendered = skel.render(&file.content);
        let mut trial = skeletons.clone();
        trial.push((item.path.clone(), rendered));
        if build_method_prompt(report, &trial, budget).char_len() > budget.request_chars {
            break;
        }
        known.insert(
            item.path.clone(),
            skel.elements.iter().map(|e| e.name.clone()).filter(|n| !n.is_empty()).collect(),
        );
        skeletons = trial;
    }
    if skeletons.is_empty() {
        return Ok(Vec::new());
    }
    let req = build_method_prompt(report, &skeletons, budget);
    let Some(pairs) = client.complete_parsed(&req, parse_element_list)? else {
        return Ok(Vec::new());
    };
    let mut out: Vec<(String, String)> = pairs
        .into_iter()
        .filter(|(path, element)| known.get(path).is_some_and(|els| els.contains(element)))
        .collect();
    out.truncate(MAX_METHOD_PAIRS);
    Ok(out)
}
