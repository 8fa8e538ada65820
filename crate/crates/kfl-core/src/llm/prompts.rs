//! Prompt templates and the tolerant parsers for model replies.
//!
//! Parsers accept single or double quotes, code fences, surrounding prose,
//! unescaped quotes inside values, and truncated trailing entries. They
//! fail only when the expected structure is absent entirely; the caller
//! then retries once with a strict-format reminder.

use crate::benchmark::BugReport;
use crate::corpus::validate_path;
use crate::mailkb::PatchEmail;

use super::{CompletionRequest, Hypothesis, ParseFailure, PromptBudget};

const DIRECTORY_TEMPLATE: &str = "Please look through the following Linux kernel bug report and candidate files, and select a list of files that one would need to edit to fix the bug.

Here is the information about the bug:

### Linux kernel bug report ###

{bug information}

###

Based on the bug provided above, I will present a list of candidate files that may be relevant to the bug.

### Candidate files ###

{candidate files}

###

Please select files that are most likely to need modification to fix this bug.

Your response should be in the format of a list of file paths, and should be ordered by relevance in descending order.
Please return at most 10 files.

### output example ###

['net/ipv6/proc.c', 'net/ipv6/netfilter/ip6_tables.c']

###

Please format your response strictly according to the format provided above without commentary.";

const HYPOTHESIS_HEAD: &str = "Please review the following Linux kernel bug report, and then deduce the possible causes of the bug and provide corresponding code files and a potential fix. The bug is known to be related to the kernel code, and the fix should involve modifications to kernel code files.

Here is the information about the bug:

### Linux kernel bug report ###

{bug information}

###
";

const HYPOTHESIS_MAIL_SECTION: &str = "
To assist in your analysis, here are some emails retrieved using BM25 that may be relevant to the bug. Use them to inspire and identify additional possible causes:

### Mails ###

{mail content}

###
";

const HYPOTHESIS_TAIL: &str = "
Based on the bug provided above, please output the possible causes, relevant code files, and solutions. Your response should follow the format below.

### Output example ###

[
    {
        'cause': 'A description of the potential cause of the bug.',
        'code_file': 'Path of the code file that is most likely related to the bug.',
        'fix_solution': 'A short description of the fix solution to apply in the code file.'
    },
    ...
]

###

Please ensure the following:

- List as many causes as possible, ordered by relevance in descending order, with the most likely cause first.

- For each cause, list all relevant code files and their corresponding fixes, but only provide one code file and one fix per entry.

- The relevant code file is not necessarily the one causing the bug but should be a file where the bug can be fixed.

- The code file should be in the format of \"net/ipv6/proc.c\".

- Format your response strictly according to the format provided above without commentary.";

const RERANK_TEMPLATE: &str = "Please look through the following Linux kernel bug report and candidate files, and re-rank the candidate files by how likely each one is to need modification to fix the bug.

Here is the information about the bug:

### Linux kernel bug report ###

{bug information}

###

The candidate files are listed below in their current order.

### Candidate files ###

{candidate files}

###

Your response should be in the format of a list of file paths, and should be ordered by relevance in descending order. Only include files from the candidate list above.

### output example ###

['net/ipv6/proc.c', 'net/ipv6/netfilter/ip6_tables.c']

###

Please format your response strictly according to the format provided above without commentary.";

const METHOD_TEMPLATE: &str = "Please look through the following Linux kernel bug report and code file skeletons, and identify the code elements (functions or structures) that one would need to edit to fix the bug.

Here is the information about the bug:

### Linux kernel bug report ###

{bug information}

###

### Code file skeletons ###

{skeletons}

###

Your response should be in the format of a list of \"path::element\" strings, and should be ordered by relevance in descending order.
Please return at most 10 elements.

### output example ###

['net/ipv6/proc.c::snmp6_seq_show', 'net/ipv6/route.c::rt6_fill_node']

###

Please format your response strictly according to the format provided above without commentary.";

const SUMMARY_TEMPLATE: &str = "Please review the following Linux kernel bug report and summarize it along four dimensions.

### Linux kernel bug report ###

{bug information}

###

Your response should contain exactly these four labeled sections:

Bug behavior: <a short summary of the observed faulty behavior>
Potential causes: <the most likely root causes>
Expected behavior: <what should happen instead>
Possible solutions: <plausible directions for a fix>

Please format your response strictly according to the format provided above without commentary.";

/// Labels of the four summary sections, in prompt order.
pub const SUMMARY_LABELS: [&str; 4] =
    ["Bug behavior", "Potential causes", "Expected behavior", "Possible solutions"];

/// Truncates to `max_chars` characters, appending a marker when anything
/// was cut.
pub fn truncate_marked(text: &str, max_chars: usize) -> String {
    if text.chars().count() <= max_chars {
        return text.to_string();
    }
    let cut: String = text.chars().take(max_chars).collect();
    format!("{cut}\n[... truncated ...]")
}

/// The `{bug information}` block: title, the metadata fields that are
/// present, and the budget-truncated description.
pub fn render_bug_info(report: &BugReport, budget: &PromptBudget) -> String {
    let mut s = format!("Title: {}\n", report.title);
    let fields = [
        ("Product", &report.product),
        ("Component", &report.component),
        ("Hardware", &report.hardware),
        ("Kernel version", &report.kernel_version),
    ];
    for (label, value) in fields {
        if !value.is_empty() {
            s.push_str(&format!("{label}: {value}\n"));
        }
    }
    s.push_str(&format!("Reported: {}\n", report.report_date.format("%Y-%m-%d")));
    s.push_str("Description:\n");
    s.push_str(&truncate_marked(&report.description, budget.description_chars));
    s
}

fn render_candidates(paths: &[String]) -> String {
    paths.join("\n")
}

fn render_mails(mails: &[PatchEmail], budget: &PromptBudget) -> String {
    let mut out = String::new();
    for (i, m) in mails.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&format!(
            "[Mail {}]\nSubject: {}\nDate: {}\nBody:\n{}\n",
            i + 1,
            m.subject,
            m.date.to_rfc3339(),
            truncate_marked(&m.body, budget.mail_chars),
        ));
    }
    out
}

/// Candidate re-selection over the directory-expanded file set.
pub fn build_directory_prompt(
    report: &BugReport,
    candidates: &[String],
    budget: &PromptBudget,
) -> CompletionRequest {
    let text = DIRECTORY_TEMPLATE
        .replace("{bug information}", &render_bug_info(report, budget))
        .replace("{candidate files}", &render_candidates(candidates));
    CompletionRequest::new(text)
}

/// Cause deduction; with `mails` the retrieved-email section is included,
/// without it the prompt runs on the report alone.
pub fn build_hypothesis_prompt(
    report: &BugReport,
    mails: Option<&[PatchEmail]>,
    budget: &PromptBudget,
) -> CompletionRequest {
    let mut text = HYPOTHESIS_HEAD.replace("{bug information}", &render_bug_info(report, budget));
    if let Some(mails) = mails {
        text.push_str(&HYPOTHESIS_MAIL_SECTION.replace("{mail content}", &render_mails(mails, budget)));
    }
    text.push_str(HYPOTHESIS_TAIL);
    CompletionRequest::new(text)
}

/// Reorder merged candidates; the model sees paths only, in merged order.
pub fn build_rerank_prompt(
    report: &BugReport,
    merged_paths: &[String],
    budget: &PromptBudget,
) -> CompletionRequest {
    let text = RERANK_TEMPLATE
        .replace("{bug information}", &render_bug_info(report, budget))
        .replace("{candidate files}", &render_candidates(merged_paths));
    CompletionRequest::new(text)
}

/// Element selection over rendered file skeletons, `(path, skeleton text)`
/// pairs in rank order.
pub fn build_method_prompt(
    report: &BugReport,
    skeletons: &[(String, String)],
    budget: &PromptBudget,
) -> CompletionRequest {
    let mut blocks = String::new();
    for (i, (path, text)) in skeletons.iter().enumerate() {
        if i > 0 {
            blocks.push('\n');
        }
        blocks.push_str(&format!("--- {path} ---\n{text}"));
        if !text.ends_with('\n') {
            blocks.push('\n');
        }
    }
    let text = METHOD_TEMPLATE
        .replace("{bug information}", &render_bug_info(report, budget))
        .replace("{skeletons}", &blocks);
    CompletionRequest::new(text)
}

/// Four-dimension report summary used to reformulate the mail query.
pub fn build_summary_prompt(report: &BugReport, budget: &PromptBudget) -> CompletionRequest {
    let text = SUMMARY_TEMPLATE.replace("{bug information}", &render_bug_info(report, budget));
    CompletionRequest::new(text)
}

fn skip_ws(chars: &[char], mut i: usize) -> usize {
    while i < chars.len() && chars[i].is_whitespace() {
        i += 1;
    }
    i
}

/// Reads a quoted string starting at the opening quote. A closing quote
/// counts only when followed by a structural delimiter, so unescaped
/// apostrophes inside single-quoted prose stay part of the value.
fn scan_quoted(chars: &[char], start: usize) -> Option<(String, usize)> {
    let quote = chars[start];
    let mut out = String::new();
    let mut i = start + 1;
    while i < chars.len() {
        let c = chars[i];
        if c == '\\' && i + 1 < chars.len() {
            let next = chars[i + 1];
            out.push(match next {
                'n' => '\n',
                't' => '\t',
                other => other,
            });
            i += 2;
            continue;
        }
        if c == quote {
            let j = skip_ws(chars, i + 1);
            match chars.get(j) {
                None | Some(',') | Some(']') | Some('}') | Some(':') => return Some((out, i + 1)),
                _ => {
                    out.push(c);
                    i += 1;
                }
            }
        } else {
            out.push(c);
            i += 1;
        }
    }
    None
}

fn list_at(chars: &[char], open: usize) -> Option<Vec<String>> {
    let mut i = skip_ws(chars, open + 1);
    let mut items = Vec::new();
    if chars.get(i) == Some(&']') {
        return Some(items);
    }
    loop {
        match chars.get(i) {
            Some('\'') | Some('"') => {
                let (s, next) = scan_quoted(chars, i)?;
                items.push(s);
                i = skip_ws(chars, next);
            }
            _ => return None,
        }
        match chars.get(i) {
            Some(',') => {
                i = skip_ws(chars, i + 1);
                if chars.get(i) == Some(&']') {
                    return Some(items);
                }
            }
            Some(']') => return Some(items),
            _ => return None,
        }
    }
}

/// Extracts the first bracketed list of quoted strings. Prose and code
/// fences around it are fine; duplicates keep their first position. A
/// literal `[]` is an empty result, no list at all is a failure.
pub fn parse_file_list(text: &str) -> Result<Vec<String>, ParseFailure> {
    let chars: Vec<char> = text.chars().collect();
    let mut from = 0;
    while let Some(off) = chars[from..].iter().position(|&c| c == '[') {
        let open = from + off;
        if let Some(items) = list_at(&chars, open) {
            let mut out: Vec<String> = Vec::new();
            for item in items {
                let item = item.trim().to_string();
                if !item.is_empty() && !out.contains(&item) {
                    out.push(item);
                }
            }
            return Ok(out);
        }
        from = open + 1;
    }
    Err(ParseFailure("no bracketed list of quoted paths found".to_string()))
}

/// `path::element` pairs from a bracketed list; entries without the
/// separator are dropped.
pub fn parse_element_list(text: &str) -> Result<Vec<(String, String)>, ParseFailure> {
    let items = parse_file_list(text)?;
    Ok(items
        .into_iter()
        .filter_map(|s| {
            s.split_once("::").map(|(f, e)| (f.trim().to_string(), e.trim().to_string()))
        })
        .filter(|(f, e)| !f.is_empty() && !e.is_empty())
        .collect())
}

/// Index just past the matching `}` of the object opening at `open`.
fn scan_object_end(chars: &[char], open: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut i = open;
    while i < chars.len() {
        match chars[i] {
            '{' => {
                depth += 1;
                i += 1;
            }
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i + 1);
                }
                i += 1;
            }
            '\'' | '"' => match scan_quoted(chars, i) {
                Some((_, next)) => i = next,
                None => return None,
            },
            _ => i += 1,
        }
    }
    None
}

/// Finds `"key" :` (either quote style) inside the span and returns the
/// quoted value after the colon.
fn field_value(chars: &[char], span: (usize, usize), key: &str) -> Option<String> {
    let key_chars: Vec<char> = key.chars().collect();
    let (start, end) = span;
    let mut i = start;
    while i + key_chars.len() + 2 <= end {
        let q = chars[i];
        if (q == '\'' || q == '"')
            && chars[i + 1..i + 1 + key_chars.len()] == key_chars[..]
            && chars.get(i + 1 + key_chars.len()) == Some(&q)
        {
            let mut j = skip_ws(chars, i + key_chars.len() + 2);
            if chars.get(j) == Some(&':') {
                j = skip_ws(chars, j + 1);
                match chars.get(j) {
                    Some('\'') | Some('"') => {
                        return scan_quoted(chars, j).map(|(v, _)| v.trim().to_string())
                    }
                    _ => return None,
                }
            }
        }
        i += 1;
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HypothesisParse {
    pub hypotheses: Vec<Hypothesis>,
    /// Entries discarded for missing/empty fields or an invalid path.
    pub dropped: usize,
}

/// Extracts the first array of `{cause, code_file, fix_solution}` objects.
/// Single- and double-quoted forms parse identically; objects violating
/// the field contract are dropped and counted; a truncated final object is
/// ignored. Fails only when no such array exists.
pub fn parse_hypotheses(text: &str) -> Result<HypothesisParse, ParseFailure> {
    let chars: Vec<char> = text.chars().collect();
    let mut from = 0;
    while let Some(off) = chars[from..].iter().position(|&c| c == '[') {
        let open = from + off;
        let mut spans = Vec::new();
        let mut i = open + 1;
        while i < chars.len() {
            match chars[i] {
                ']' => break,
                '{' => match scan_object_end(&chars, i) {
                    Some(end) => {
                        spans.push((i, end));
                        i = end;
                    }
                    None => break,
                },
                '\'' | '"' => match scan_quoted(&chars, i) {
                    Some((_, next)) => i = next,
                    None => break,
                },
                _ => i += 1,
            }
        }
        if !spans.is_empty() {
            let mut hypotheses = Vec::new();
            let mut dropped = 0;
            for span in spans {
                let get = |key| field_value(&chars, span, key).filter(|v| !v.is_empty());
                match (get("cause"), get("code_file"), get("fix_solution")) {
                    (Some(cause), Some(code_file), Some(fix_solution))
                        if validate_path(&code_file).is_ok() =>
                    {
                        hypotheses.push(Hypothesis { cause, code_file, fix_solution });
                    }
                    _ => dropped += 1,
                }
            }
            return Ok(HypothesisParse { hypotheses, dropped });
        }
        from = open + 1;
    }
    Err(ParseFailure("no array of cause objects found".to_string()))
}

/// Splits text into sections introduced by `Label:` lines (case-insensitive,
/// leading whitespace and markdown emphasis tolerated). Returns one string
/// per label, empty when the label never occurs.
pub fn parse_labeled_sections(text: &str, labels: &[&str]) -> Vec<String> {
    let mut out = vec![String::new(); labels.len()];
    let mut current: Option<usize> = None;
    for line in text.lines() {
        let plain = line.trim_start().trim_start_matches(['#', '*', '-', ' ']);
        let lower = plain.to_lowercase();
        let mut matched = false;
        for (i, label) in labels.iter().enumerate() {
            let prefix = format!("{}:", label.to_lowercase());
            if lower.starts_with(&prefix) {
                current = Some(i);
                let rest = plain[prefix.len()..].trim();
                if !rest.is_empty() {
                    out[i].push_str(rest);
                }
                matched = true;
                break;
            }
        }
        if matched {
            continue;
        }
        if let Some(i) = current {
            if !line.trim().is_empty() {
                if !out[i].is_empty() {
                    out[i].push('\n');
                }
                out[i].push_str(line.trim());
            }
        }
    }
    out
}
