//! Patch-mail knowledge base: mbox/maildir ingestion behind the four
//! collection filters, a file-keyed index with BM25 statistics over
//! subject+body, temporal retrieval against a reformulated bug query, and
//! the four-dimension report summary that produces that query.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::benchmark::{parse_unified_diff, BugReport};
use crate::corpus::tokenize;
use crate::llm::{
    build_summary_prompt, parse_labeled_sections, LlmClient, ParseFailure, ProviderError,
    SUMMARY_LABELS,
};
use crate::retrieval::{bm25_idf, bm25_term};

/// Patches touching more files than this are rejected at ingestion.
pub const MAX_PATCH_FILES: usize = 10;

/// Header line of the persisted knowledge base.
pub const MAIL_MAGIC: &str = "KFLMAIL1";

#[derive(Debug, Error)]
pub enum MailError {
    #[error("reading {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed mail at byte {offset}: {reason}")]
    MboxParse { offset: usize, reason: String },
    #[error("bad archive header, expected {expected:?}")]
    BadHeader { expected: &'static str },
    #[error("archive line {line}: {msg}")]
    ArchiveParse { line: usize, msg: String },
    #[error("stored email {message_id} fails the {filter} filter")]
    FilterViolation { message_id: String, filter: &'static str },
}

/// One accepted patch email. Construction goes through the collection
/// filters, so instances satisfy: diff_text parses to at least one hunk,
/// 1..=10 modified files, body free of http(s) URLs and of "bugzilla".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchEmail {
    pub message_id: String,
    pub date: DateTime<Utc>,
    pub subject: String,
    /// Full body, diff included; `diff_text` is the patch-bearing tail.
    pub body: String,
    pub diff_text: String,
    pub modified_files: Vec<String>,
}

/// Per-filter rejection tally from one ingestion run. A mail failing
/// several filters counts only under the first, in filter order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RejectionCounts {
    pub no_patch: usize,
    pub file_count: usize,
    pub url: usize,
    pub keyword: usize,
    pub duplicate: usize,
}

impl RejectionCounts {
    pub fn total(&self) -> usize {
        self.no_patch + self.file_count + self.url + self.keyword + self.duplicate
    }
}

enum RejectReason {
    NoPatch,
    FileCount,
    Url,
    Keyword,
}

/// Finds the patch-bearing tail of a body: the earliest line that can open
/// a diff and from which the parser recovers at least one hunk. Prose
/// before the diff that merely looks diff-like only widens the tail, which
/// the parser skips over anyway.
fn extract_diff_text(body: &str) -> Option<String> {
    let mut offset = 0;
    for line in body.split_inclusive('\n') {
        let start = offset;
        offset += line.len();
        let l = line.trim_end();
        let opens = l.starts_with("diff ")
            || l.starts_with("--- ")
            || l.starts_with("@@ ")
            || l.starts_with("Index: ");
        if opens && parse_unified_diff(&body[start..]).hunk_count() >= 1 {
            return Some(body[start..].to_string());
        }
    }
    None
}

/// The four collection filters, in rejection-count order.
fn classify(body: &str) -> Result<(String, Vec<String>), RejectReason> {
    let Some(diff_text) = extract_diff_text(body) else {
        return Err(RejectReason::NoPatch);
    };
    let modified = parse_unified_diff(&diff_text).modified_paths();
    if modified.is_empty() || modified.len() > MAX_PATCH_FILES {
        return Err(RejectReason::FileCount);
    }
    let lower = body.to_lowercase();
    if lower.contains("http://") || lower.contains("https://") {
        return Err(RejectReason::Url);
    }
    if lower.contains("bugzilla") {
        return Err(RejectReason::Keyword);
    }
    Ok((diff_text, modified))
}

struct RawMail {
    message_id: String,
    date: DateTime<Utc>,
    subject: String,
    body: String,
}

/// Parses one message: headers (unfolded, names case-insensitive) up to
/// the first blank line, body after it. `offset` is the message's byte
/// position in its archive, used for errors and synthesized ids.
fn parse_message(text: &str, offset: usize) -> Result<RawMail, MailError> {
    let mut headers: Vec<(String, String)> = Vec::new();
    let mut lines = text.lines().peekable();
    if lines.peek().is_some_and(|l| l.starts_with("From ")) {
        lines.next();
    }
    let mut body_lines: Vec<&str> = Vec::new();
    let mut in_body = false;
    for line in lines {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if in_body {
            body_lines.push(line);
            continue;
        }
        if line.is_empty() {
            in_body = true;
            continue;
        }
        if (line.starts_with(' ') || line.starts_with('\t')) && !headers.is_empty() {
            let last = headers.last_mut().unwrap();
            last.1.push(' ');
            last.1.push_str(line.trim());
            continue;
        }
        match line.split_once(':') {
            Some((name, value)) => {
                headers.push((name.trim().to_lowercase(), value.trim().to_string()))
            }
            None => {
                return Err(MailError::MboxParse {
                    offset,
                    reason: format!("header line without colon: {line:?}"),
                })
            }
        }
    }
    let header = |name: &str| {
        headers.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_str())
    };

    let date_raw = header("date").ok_or_else(|| MailError::MboxParse {
        offset,
        reason: "missing Date header".to_string(),
    })?;
    let date = DateTime::parse_from_rfc2822(date_raw)
        .map_err(|e| MailError::MboxParse {
            offset,
            reason: format!("unparseable Date {date_raw:?}: {e}"),
        })?
        .with_timezone(&Utc);

    let message_id = match header("message-id") {
        Some(id) if !id.is_empty() => id.to_string(),
        _ => format!("<synthetic-{offset}@mbox>"),
    };
    let subject = header("subject").unwrap_or("").to_string();

    // mboxrd unquoting: one ">" comes off quoted From_ lines.
    let mut body = String::new();
    for line in body_lines {
        let stripped = line.trim_start_matches('>');
        if stripped.starts_with("From ") && line.starts_with('>') {
            body.push_str(&line[1..]);
        } else {
            body.push_str(line);
        }
        body.push('\n');
    }
    let trimmed = body.trim_end_matches(['\n', '\r']).len();
    body.truncate(trimmed);

    Ok(RawMail { message_id, date, subject, body })
}

fn parse_mbox(text: &str) -> Result<Vec<RawMail>, MailError> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    if !text.starts_with("From ") {
        return Err(MailError::MboxParse {
            offset: 0,
            reason: "not an mbox: first line does not start with \"From \"".to_string(),
        });
    }
    // Message boundaries: unquoted From_ lines at line starts.
    let mut starts: Vec<usize> = Vec::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        if line.starts_with("From ") {
            starts.push(offset);
        }
        offset += line.len();
    }
    let mut out = Vec::with_capacity(starts.len());
    for (i, &start) in starts.iter().enumerate() {
        let end = starts.get(i + 1).copied().unwrap_or(text.len());
        out.push(parse_message(&text[start..end], start)?);
    }
    Ok(out)
}

fn filter_mails(raws: Vec<RawMail>) -> (Vec<PatchEmail>, RejectionCounts) {
    let mut accepted = Vec::new();
    let mut counts = RejectionCounts::default();
    let mut seen: HashSet<String> = HashSet::new();
    for raw in raws {
        match classify(&raw.body) {
            Err(RejectReason::NoPatch) => counts.no_patch += 1,
            Err(RejectReason::FileCount) => counts.file_count += 1,
            Err(RejectReason::Url) => counts.url += 1,
            Err(RejectReason::Keyword) => counts.keyword += 1,
            Ok((diff_text, modified_files)) => {
                if !seen.insert(raw.message_id.clone()) {
                    counts.duplicate += 1;
                    continue;
                }
                accepted.push(PatchEmail {
                    message_id: raw.message_id,
                    date: raw.date,
                    subject: raw.subject,
                    body: raw.body,
                    diff_text,
                    modified_files,
                });
            }
        }
    }
    (accepted, counts)
}

/// Runs the collection filters over an archive: an mbox file, or a maildir
/// directory (cur/ and new/, falling back to top-level files).
pub fn ingest_mbox(path: &Path) -> Result<(Vec<PatchEmail>, RejectionCounts), MailError> {
    let io_err = |p: &Path| {
        let path = p.to_path_buf();
        move |source| MailError::Io { path, source }
    };
    if path.is_dir() {
        let mut files: Vec<PathBuf> = Vec::new();
        let mut subdir_seen = false;
        for sub in ["cur", "new"] {
            let dir = path.join(sub);
            if dir.is_dir() {
                subdir_seen = true;
                for entry in fs::read_dir(&dir).map_err(io_err(&dir))? {
                    let entry = entry.map_err(io_err(&dir))?;
                    if entry.path().is_file() {
                        files.push(entry.path());
                    }
                }
            }
        }
        if !subdir_seen {
            for entry in fs::read_dir(path).map_err(io_err(path))? {
                let entry = entry.map_err(io_err(path))?;
                if entry.path().is_file() {
                    files.push(entry.path());
                }
            }
        }
        files.sort();
        let mut raws = Vec::with_capacity(files.len());
        for f in &files {
            let text = fs::read_to_string(f).map_err(io_err(f))?;
            raws.push(parse_message(&text, 0)?);
        }
        Ok(filter_mails(raws))
    } else {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        ingest_mbox_text(&text)
    }
}

/// [`ingest_mbox`] over in-memory mbox text.
pub fn ingest_mbox_text(text: &str) -> Result<(Vec<PatchEmail>, RejectionCounts), MailError> {
    Ok(filter_mails(parse_mbox(text)?))
}

/// Writes emails back out as mbox, quoting body From_ lines (mboxrd).
/// Reading the result back yields the same emails, which is also how the
/// filter fixed point is checked.
pub fn write_mbox<W: Write>(emails: &[PatchEmail], mut out: W) -> std::io::Result<()> {
    for e in emails {
        writeln!(out, "From - {}", e.date.format("%a %b %e %H:%M:%S %Y"))?;
        writeln!(out, "Message-ID: {}", e.message_id)?;
        writeln!(out, "Date: {}", e.date.to_rfc2822())?;
        writeln!(out, "Subject: {}", e.subject)?;
        writeln!(out)?;
        for line in e.body.lines() {
            if line.trim_start_matches('>').starts_with("From ") {
                out.write_all(b">")?;
            }
            writeln!(out, "{line}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Immutable retrieval structure over accepted emails: a path-keyed
/// inverted map plus BM25 statistics over tokenize(subject + body).
#[derive(Debug, Default)]
pub struct MailIndex {
    emails: Vec<PatchEmail>,
    by_file: BTreeMap<String, Vec<String>>,
    id_to_pos: HashMap<String, usize>,
    doc_tokens: Vec<HashMap<String, u32>>,
    doc_lens: Vec<usize>,
    avg_len: f64,
    dfs: HashMap<String, usize>,
}

pub fn build_mail_index(emails: Vec<PatchEmail>) -> MailIndex {
    let n = emails.len();
    let mut by_file: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut id_to_pos = HashMap::with_capacity(n);
    let mut doc_tokens = Vec::with_capacity(n);
    let mut doc_lens = Vec::with_capacity(n);
    let mut dfs: HashMap<String, usize> = HashMap::new();
    for (pos, e) in emails.iter().enumerate() {
        id_to_pos.insert(e.message_id.clone(), pos);
        for f in &e.modified_files {
            by_file.entry(f.clone()).or_default().push(e.message_id.clone());
        }
        let toks = tokenize(&format!("{}\n{}", e.subject, e.body));
        doc_lens.push(toks.len());
        let mut counts: HashMap<String, u32> = HashMap::new();
        for t in toks {
            *counts.entry(t).or_insert(0) += 1;
        }
        for t in counts.keys() {
            *dfs.entry(t.clone()).or_insert(0) += 1;
        }
        doc_tokens.push(counts);
    }
    let avg_len = if n == 0 { 0.0 } else { doc_lens.iter().sum::<usize>() as f64 / n as f64 };
    MailIndex { emails, by_file, id_to_pos, doc_tokens, doc_lens, avg_len, dfs }
}

impl MailIndex {
    pub fn emails(&self) -> &[PatchEmail] {
        &self.emails
    }

    pub fn len(&self) -> usize {
        self.emails.len()
    }

    pub fn is_empty(&self) -> bool {
        self.emails.is_empty()
    }

    pub fn by_file(&self) -> &BTreeMap<String, Vec<String>> {
        &self.by_file
    }

    pub fn email(&self, message_id: &str) -> Option<&PatchEmail> {
        self.id_to_pos.get(message_id).map(|&p| &self.emails[p])
    }

    /// Writes the archive: a `KFLMAIL1` header line and one JSON record per
    /// email. Statistics are rebuilt on load.
    pub fn save<W: Write>(&self, mut out: W) -> Result<(), MailError> {
        let io_err =
            |source| MailError::Io { path: PathBuf::from("<archive>"), source };
        writeln!(out, "{MAIL_MAGIC}").map_err(io_err)?;
        for e in &self.emails {
            serde_json::to_writer(&mut out, e)
                .map_err(|e| io_err(std::io::Error::other(e)))?;
            out.write_all(b"\n").map_err(io_err)?;
        }
        Ok(())
    }

    /// Loads an archive, re-running the collection filters on every stored
    /// email so a tampered or stale archive fails loudly.
    pub fn load<R: BufRead>(input: R) -> Result<MailIndex, MailError> {
        let io_err =
            |source| MailError::Io { path: PathBuf::from("<archive>"), source };
        let mut lines = input.lines().enumerate();
        match lines.next() {
            Some((_, Ok(first))) if first == MAIL_MAGIC => {}
            Some((_, Err(e))) => return Err(io_err(e)),
            _ => return Err(MailError::BadHeader { expected: MAIL_MAGIC }),
        }
        let mut emails: Vec<PatchEmail> = Vec::new();
        let mut seen: HashSet<String> = HashSet::new();
        for (i, line) in lines {
            let line = line.map_err(io_err)?;
            if line.trim().is_empty() {
                continue;
            }
            let email: PatchEmail = serde_json::from_str(&line).map_err(|e| {
                MailError::ArchiveParse { line: i + 1, msg: e.to_string() }
            })?;
            validate_stored(&email)?;
            if !seen.insert(email.message_id.clone()) {
                return Err(MailError::FilterViolation {
                    message_id: email.message_id,
                    filter: "duplicate",
                });
            }
            emails.push(email);
        }
        Ok(build_mail_index(emails))
    }

    pub fn save_to_path(&self, path: &Path) -> Result<(), MailError> {
        let mut buf = Vec::new();
        self.save(&mut buf)?;
        fs::write(path, buf).map_err(|source| MailError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load_from_path(path: &Path) -> Result<MailIndex, MailError> {
        let file = fs::File::open(path).map_err(|source| MailError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        MailIndex::load(BufReader::new(file))
    }
}

fn validate_stored(e: &PatchEmail) -> Result<(), MailError> {
    let viol = |filter: &'static str| MailError::FilterViolation {
        message_id: e.message_id.clone(),
        filter,
    };
    if e.message_id.trim().is_empty() {
        return Err(viol("message_id"));
    }
    let parsed = parse_unified_diff(&e.diff_text);
    if parsed.hunk_count() == 0 {
        return Err(viol("no_patch"));
    }
    let modified = parsed.modified_paths();
    if modified.is_empty() || modified.len() > MAX_PATCH_FILES {
        return Err(viol("file_count"));
    }
    if modified != e.modified_files {
        return Err(viol("modified_files"));
    }
    let lower = e.body.to_lowercase();
    if lower.contains("http://") || lower.contains("https://") {
        return Err(viol("url"));
    }
    if lower.contains("bugzilla") {
        return Err(viol("keyword"));
    }
    Ok(())
}

/// A bug report condensed along the four dimensions the mail query uses.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ReformulatedQuery {
    pub bug_behavior: String,
    pub potential_causes: String,
    pub expected_behavior: String,
    pub possible_solutions: String,
}

impl ReformulatedQuery {
    /// The retrieval query: non-empty dimensions joined by newlines.
    pub fn concatenated(&self) -> String {
        [
            &self.bug_behavior,
            &self.potential_causes,
            &self.expected_behavior,
            &self.possible_solutions,
        ]
        .iter()
        .filter(|s| !s.is_empty())
        .map(|s| s.as_str())
        .collect::<Vec<_>>()
        .join("\n")
    }

    pub fn is_empty(&self) -> bool {
        self.concatenated().is_empty()
    }
}

/// Top-k emails for a reformulated query. Candidates are the emails whose
/// modified files intersect `predicted_files` and whose date precedes
/// `before`; with no predicted files the whole temporal slice is eligible.
/// BM25 uses statistics over the full index, candidates with zero score
/// stay in (the file and date restrictions already establish relevance),
/// ties break on message_id.
pub fn retrieve_mails(
    index: &MailIndex,
    predicted_files: &[String],
    query: &ReformulatedQuery,
    before: DateTime<Utc>,
    k: usize,
) -> Vec<PatchEmail> {
    assert!(k >= 1, "k must be at least 1");
    let mut candidates: Vec<usize> = Vec::new();
    if predicted_files.is_empty() {
        candidates.extend((0..index.emails.len()).filter(|&i| index.emails[i].date < before));
    } else {
        let mut seen: HashSet<usize> = HashSet::new();
        for path in predicted_files {
            let Some(ids) = index.by_file.get(path) else { continue };
            for id in ids {
                let pos = index.id_to_pos[id];
                if index.emails[pos].date < before && seen.insert(pos) {
                    candidates.push(pos);
                }
            }
        }
    }
    let q_tokens = tokenize(&query.concatenated());
    let n = index.emails.len();
    let mut scored: Vec<(usize, f64)> = candidates
        .into_iter()
        .map(|i| {
            let mut s = 0.0;
            if index.avg_len > 0.0 {
                for t in &q_tokens {
                    let Some(&df) = index.dfs.get(t) else { continue };
                    let Some(&tf) = index.doc_tokens[i].get(t) else { continue };
                    s += bm25_idf(n, df)
                        * bm25_term(tf as f64, index.doc_lens[i] as f64, index.avg_len);
                }
            }
            (i, s)
        })
        .collect();
    scored.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then_with(|| index.emails[a.0].message_id.cmp(&index.emails[b.0].message_id))
    });
    scored.truncate(k);
    scored.into_iter().map(|(i, _)| index.emails[i].clone()).collect()
}

/// Asks the model to compress the report into the four query dimensions.
/// Unparseable output (after the client's one strict-format retry) falls
/// back to the raw title+description as bug_behavior, so the returned
/// query is never empty for a well-formed report.
pub fn summarize_report(
    client: &LlmClient,
    report: &BugReport,
) -> Result<ReformulatedQuery, ProviderError> {
    let req = build_summary_prompt(report, client.budget());
    let parsed = client.complete_parsed(&req, |text| {
        let sections = parse_labeled_sections(text, &SUMMARY_LABELS);
        if sections.iter().all(|s| s.is_empty()) {
            return Err(ParseFailure("no labeled summary section found".to_string()));
        }
        let mut it = sections.into_iter();
        Ok(ReformulatedQuery {
            bug_behavior: it.next().unwrap(),
            potential_causes: it.next().unwrap(),
            expected_behavior: it.next().unwrap(),
            possible_solutions: it.next().unwrap(),
        })
    })?;
    Ok(parsed.unwrap_or_else(|| ReformulatedQuery {
        bug_behavior: report.query_text(),
        ..Default::default()
    }))
}
