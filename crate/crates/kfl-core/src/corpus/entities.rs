//! Heuristic extraction of code entities and file skeletons.
//!
//! Everything here works on a token stream over the comment- and
//! literal-blanked view of the file. There is no preprocessor and no grammar;
//! definitions are recognized by shape (identifier before `(` at brace depth
//! zero with a following block, `struct tag {`, `typedef ... alias;`).
//! Malformed input degrades to fewer recognized entities, never to a failure.

use serde::{Deserialize, Serialize};

use super::lexer::{self, Region, RegionKind};
use super::tokenizer::is_c_keyword;
use super::SourceFile;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeEntities {
    pub function_names: Vec<String>,
    pub struct_names: Vec<String>,
    pub macro_names: Vec<String>,
    /// Every identifier occurrence in code (keywords and preprocessor
    /// directive words excluded), in source order, duplicates kept so field
    /// term frequencies stay meaningful.
    pub identifiers: Vec<String>,
    pub comments: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    Function,
    Struct,
    OtherBlock,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkeletonElement {
    pub kind: ElementKind,
    pub name: String,
    /// Declaration head with internal whitespace collapsed to single spaces.
    pub signature: String,
    pub leading_comment: Option<String>,
    /// 1-based inclusive line span within the file.
    pub span: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skeleton {
    pub path: String,
    pub elements: Vec<SkeletonElement>,
}

impl Skeleton {
    /// Renders the skeleton the way it is shown to a model: comments and
    /// signatures for functions/structs, original text for leftover blocks.
    /// Bodies are elided, which is the whole point.
    pub fn render(&self, content: &str) -> String {
        let lines: Vec<&str> = content.lines().collect();
        let mut out = String::new();
        for el in &self.elements {
            if !out.is_empty() {
                out.push('\n');
            }
            if let Some(comment) = &el.leading_comment {
                for line in comment.lines() {
                    out.push_str("// ");
                    out.push_str(line);
                    out.push('\n');
                }
            }
            match el.kind {
                ElementKind::Function => {
                    out.push_str(&el.signature);
                    out.push_str(";\n");
                }
                ElementKind::Struct => {
                    out.push_str(&el.signature);
                    out.push_str(" { ... };\n");
                }
                ElementKind::OtherBlock => {
                    let (start, end) = el.span;
                    for line in lines.iter().take(end).skip(start - 1) {
                        out.push_str(line);
                        out.push('\n');
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TokKind {
    Ident,
    Num,
    Punct(u8),
}

#[derive(Debug, Clone, Copy)]
struct Tok {
    kind: TokKind,
    start: usize,
    end: usize,
    line: usize,
    /// Token lies on a preprocessor directive line (including continuations).
    directive: bool,
}

fn lex_code(code: &str) -> Vec<Tok> {
    let bytes = code.as_bytes();
    let mut toks = Vec::new();
    let mut line = 1usize;
    let mut i = 0usize;
    // A `#` directive claims the rest of its logical line, across trailing
    // `\` continuations. Needed so braces in macro bodies cannot disturb
    // depth tracking later.
    let mut directive_until_line = 0usize;
    let mut line_start = true;
    while i < bytes.len() {
        let c = bytes[i];
        if c == b'\n' {
            line += 1;
            line_start = true;
            i += 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'#' && line_start && line > directive_until_line {
            let mut l = line;
            let mut j = i;
            loop {
                while j < bytes.len() && bytes[j] != b'\n' {
                    j += 1;
                }
                let text_line = &code[..j];
                let continued = text_line
                    .rfind('\n')
                    .map(|p| &text_line[p + 1..])
                    .unwrap_or(text_line)
                    .trim_end()
                    .ends_with('\\');
                if continued && j < bytes.len() {
                    l += 1;
                    j += 1;
                } else {
                    break;
                }
            }
            directive_until_line = l;
        }
        line_start = false;
        let in_directive = line <= directive_until_line;
        if c == b'_' || c.is_ascii_alphabetic() {
            let start = i;
            while i < bytes.len() && (bytes[i] == b'_' || bytes[i].is_ascii_alphanumeric()) {
                i += 1;
            }
            toks.push(Tok { kind: TokKind::Ident, start, end: i, line, directive: in_directive });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len()
                && (bytes[i] == b'.' || bytes[i] == b'_' || bytes[i].is_ascii_alphanumeric())
            {
                i += 1;
            }
            toks.push(Tok { kind: TokKind::Num, start, end: i, line, directive: in_directive });
            continue;
        }
        toks.push(Tok { kind: TokKind::Punct(c), start: i, end: i + 1, line, directive: in_directive });
        i += 1;
    }
    toks
}

const DIRECTIVE_WORDS: &[&str] = &[
    "define", "include", "if", "ifdef", "ifndef", "elif", "else", "endif",
    "undef", "pragma", "error", "warning", "line", "defined",
];

fn is_punct(tok: Option<&Tok>, c: u8) -> bool {
    matches!(tok, Some(t) if t.kind == TokKind::Punct(c))
}

fn ident<'a>(code: &'a str, tok: &Tok) -> &'a str {
    &code[tok.start..tok.end]
}

/// Index of the matching closer for the opener at `open`, or None.
fn matching(toks: &[Tok], open: usize, open_c: u8, close_c: u8) -> Option<usize> {
    let mut depth = 0usize;
    for (j, t) in toks.iter().enumerate().skip(open) {
        match t.kind {
            TokKind::Punct(c) if c == open_c => depth += 1,
            TokKind::Punct(c) if c == close_c => {
                depth -= 1;
                if depth == 0 {
                    return Some(j);
                }
            }
            _ => {}
        }
    }
    None
}

#[derive(Debug)]
struct FnDef {
    name: String,
    signature: String,
    start_line: usize,
    end_line: usize,
}

#[derive(Debug)]
struct StructDef {
    name: Option<String>,
    signature: String,
    start_line: usize,
    end_line: usize,
}

#[derive(Debug, Default)]
struct Defs {
    functions: Vec<FnDef>,
    structs: Vec<StructDef>,
    typedef_aliases: Vec<String>,
}

fn collapse_ws(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Walks back from token `at` over type/qualifier tokens to the start of the
/// declaration. Stops at any punctuation other than `*`.
fn decl_start(toks: &[Tok], at: usize) -> usize {
    let mut p = at;
    while p > 0 {
        let prev = &toks[p - 1];
        if prev.directive {
            break;
        }
        match prev.kind {
            TokKind::Ident | TokKind::Punct(b'*') => p -= 1,
            _ => break,
        }
    }
    p
}

fn scan_defs(code: &str, toks: &[Tok]) -> Defs {
    // Directive-line tokens are invisible here: macro bodies must not affect
    // brace depth or be mistaken for definitions.
    let toks: Vec<Tok> = toks.iter().filter(|t| !t.directive).copied().collect();
    let mut defs = Defs::default();
    let mut depth = 0usize;
    let mut i = 0usize;
    while i < toks.len() {
        let t = &toks[i];
        match t.kind {
            TokKind::Punct(b'{') => depth += 1,
            TokKind::Punct(b'}') => depth = depth.saturating_sub(1),
            TokKind::Ident if depth == 0 => {
                let word = ident(code, t);
                if word == "typedef" {
                    if let Some(next) = scan_typedef(code, &toks, i, &mut defs) {
                        i = next;
                        continue;
                    }
                } else if matches!(word, "struct" | "union" | "enum") {
                    if let Some(next) = scan_struct(code, &toks, i, None, &mut defs) {
                        i = next;
                        continue;
                    }
                } else if !is_c_keyword(word) && is_punct(toks.get(i + 1), b'(') {
                    if let Some(next) = scan_function(code, &toks, i, &mut defs) {
                        i = next;
                        continue;
                    }
                }
            }
            _ => {}
        }
        i += 1;
    }
    defs
}

/// `name ( params ) [attributes] {` at depth 0. Returns the index to resume
/// from (just past the opening brace) when a definition is recognized.
fn scan_function(code: &str, toks: &[Tok], name_at: usize, defs: &mut Defs) -> Option<usize> {
    let close = matching(toks, name_at + 1, b'(', b')')?;
    let mut k = close + 1;
    // Skip kernel-style attribute suffixes: `__acquires(lock)`, `__init`, ...
    while k < toks.len() {
        match toks[k].kind {
            TokKind::Ident => {
                k += 1;
                if is_punct(toks.get(k), b'(') {
                    k = matching(toks, k, b'(', b')')? + 1;
                }
            }
            _ => break,
        }
    }
    if !is_punct(toks.get(k), b'{') {
        return None;
    }
    let body_close = matching(toks, k, b'{', b'}').unwrap_or(toks.len() - 1);
    let start = decl_start(toks, name_at);
    defs.functions.push(FnDef {
        name: ident(code, &toks[name_at]).to_string(),
        signature: collapse_ws(&code[toks[start].start..toks[close].end]),
        start_line: toks[start].line,
        end_line: toks[body_close].line,
    });
    // Resume past the body: anything inside (for_each macros with trailing
    // blocks, local definitions) must not look like a top-level definition.
    Some(body_close + 1)
}

/// `struct|union|enum [tag] { ... } ... ;` at depth 0. `alias_from_typedef`
/// carries the typedef tail alias when called from scan_typedef.
fn scan_struct(
    code: &str,
    toks: &[Tok],
    kw_at: usize,
    alias: Option<String>,
    defs: &mut Defs,
) -> Option<usize> {
    let mut j = kw_at + 1;
    let mut tag = None;
    if let Some(t) = toks.get(j) {
        if t.kind == TokKind::Ident && !is_c_keyword(ident(code, t)) {
            tag = Some(ident(code, t).to_string());
            j += 1;
        }
    }
    if !is_punct(toks.get(j), b'{') {
        return None;
    }
    let body_close = matching(toks, j, b'{', b'}').unwrap_or(toks.len() - 1);
    // The span runs to the terminating `;` when one directly follows the
    // closing brace (possibly after an alias or instance name).
    let mut end = body_close;
    let mut k = body_close + 1;
    while k < toks.len() {
        match toks[k].kind {
            TokKind::Ident | TokKind::Punct(b'*') => k += 1,
            TokKind::Punct(b';') => {
                end = k;
                break;
            }
            _ => break,
        }
    }
    let start = decl_start(toks, kw_at);
    defs.structs.push(StructDef {
        name: tag.or(alias),
        signature: collapse_ws(&code[toks[start].start..toks[j - 1].end]),
        start_line: toks[start].line,
        end_line: toks[end].line,
    });
    Some(end + 1)
}

/// `typedef ... ;` at depth 0. Records the alias; delegates to scan_struct
/// when the typedef carries a struct/union/enum body.
fn scan_typedef(code: &str, toks: &[Tok], kw_at: usize, defs: &mut Defs) -> Option<usize> {
    // Find the terminating `;` at relative brace depth 0.
    let mut depth = 0usize;
    let mut semi = None;
    for (j, t) in toks.iter().enumerate().skip(kw_at + 1) {
        match t.kind {
            TokKind::Punct(b'{') => depth += 1,
            TokKind::Punct(b'}') => depth = depth.saturating_sub(1),
            TokKind::Punct(b';') if depth == 0 => {
                semi = Some(j);
                break;
            }
            _ => {}
        }
    }
    let semi = semi?;
    let stmt = &toks[kw_at..=semi];
    // Function-pointer typedefs keep the alias inside `( * alias )`.
    let mut alias = None;
    for w in 0..stmt.len().saturating_sub(3) {
        if is_punct(stmt.get(w), b'(')
            && is_punct(stmt.get(w + 1), b'*')
            && stmt[w + 2].kind == TokKind::Ident
            && is_punct(stmt.get(w + 3), b')')
        {
            alias = Some(ident(code, &stmt[w + 2]).to_string());
            break;
        }
    }
    if alias.is_none() {
        // Otherwise the alias is the last identifier before `;`, skipping an
        // array suffix.
        let mut j = semi;
        while j > kw_at {
            j -= 1;
            match toks[j].kind {
                TokKind::Punct(b']') => {
                    while j > kw_at && toks[j].kind != TokKind::Punct(b'[') {
                        j -= 1;
                    }
                }
                TokKind::Ident => {
                    let w = ident(code, &toks[j]);
                    if !is_c_keyword(w) {
                        alias = Some(w.to_string());
                    }
                    break;
                }
                _ => break,
            }
        }
    }
    if let Some(a) = &alias {
        defs.typedef_aliases.push(a.clone());
    }
    // A body-carrying typedef is also a struct definition.
    for (j, t) in stmt.iter().enumerate() {
        if t.kind == TokKind::Ident && matches!(ident(code, t), "struct" | "union" | "enum") {
            scan_struct(code, toks, kw_at + j, alias, defs);
            break;
        }
    }
    Some(semi + 1)
}

fn dedup_keep_order(names: Vec<String>) -> Vec<String> {
    let mut seen = std::collections::HashSet::new();
    names.into_iter().filter(|n| seen.insert(n.clone())).collect()
}

/// Extracts named entities and comment text from one file. Total: any input
/// yields a (possibly sparse) result.
pub fn extract_entities(file: &SourceFile) -> CodeEntities {
    let regions = lexer::scan_regions(&file.content);
    let code = lexer::code_view(&file.content, &regions);
    let toks = lex_code(&code);

    let mut identifiers = Vec::new();
    let mut macros = Vec::new();
    let mut i = 0usize;
    while i < toks.len() {
        let t = &toks[i];
        if t.kind == TokKind::Ident {
            let word = ident(&code, t);
            let after_hash = i > 0 && is_punct(toks.get(i - 1), b'#');
            if after_hash && DIRECTIVE_WORDS.contains(&word) {
                if word == "define" {
                    if let Some(n) = toks.get(i + 1) {
                        if n.kind == TokKind::Ident {
                            macros.push(ident(&code, n).to_string());
                        }
                    }
                }
            } else if !is_c_keyword(word) {
                identifiers.push(word.to_string());
            }
        }
        i += 1;
    }

    let defs = scan_defs(&code, &toks);
    let comments = regions
        .iter()
        .filter(|r| matches!(r.kind, RegionKind::LineComment | RegionKind::BlockComment))
        .map(|r| lexer::comment_text(&file.content, r))
        .filter(|s| !s.is_empty())
        .collect();

    let mut struct_names: Vec<String> =
        defs.structs.iter().filter_map(|s| s.name.clone()).collect();
    struct_names.extend(defs.typedef_aliases.iter().cloned());

    CodeEntities {
        function_names: dedup_keep_order(defs.functions.iter().map(|f| f.name.clone()).collect()),
        struct_names: dedup_keep_order(struct_names),
        macro_names: dedup_keep_order(macros),
        identifiers,
        comments,
    }
}

/// A comment block: one or more comment regions on consecutive lines, each
/// starting at the first non-whitespace column of its line.
struct CommentBlock {
    start_line: usize,
    end_line: usize,
    text: String,
}

fn standalone(content: &str, lines: &[&str], line_starts: &[usize], r: &Region) -> bool {
    let line_text = lines.get(r.start_line - 1).copied().unwrap_or("");
    let line_start = line_starts.get(r.start_line - 1).copied().unwrap_or(0);
    let offset_in_line = r.start.saturating_sub(line_start);
    content.is_char_boundary(r.start)
        && line_text
            .get(..offset_in_line.min(line_text.len()))
            .map(|prefix| prefix.trim().is_empty())
            .unwrap_or(false)
}

fn comment_blocks(content: &str, lines: &[&str], regions: &[Region]) -> Vec<CommentBlock> {
    let mut line_starts = Vec::with_capacity(lines.len());
    let mut pos = 0usize;
    for l in lines {
        line_starts.push(pos);
        pos += l.len() + 1;
    }
    let mut blocks: Vec<CommentBlock> = Vec::new();
    for r in regions {
        if !matches!(r.kind, RegionKind::LineComment | RegionKind::BlockComment) {
            continue;
        }
        if !standalone(content, lines, &line_starts, r) {
            continue;
        }
        let text = lexer::comment_text(content, r);
        match blocks.last_mut() {
            Some(b) if r.start_line == b.end_line + 1 => {
                b.end_line = r.end_line;
                b.text.push('\n');
                b.text.push_str(&text);
            }
            _ => blocks.push(CommentBlock { start_line: r.start_line, end_line: r.end_line, text }),
        }
    }
    blocks
}

/// Reduces a file to signatures of functions and struct definitions, each
/// with the comment block ending directly above it, plus `other_block`
/// elements covering leftover top-level lines (contiguous non-blank runs).
pub fn extract_skeleton(file: &SourceFile) -> Skeleton {
    let regions = lexer::scan_regions(&file.content);
    let code = lexer::code_view(&file.content, &regions);
    let toks = lex_code(&code);
    let defs = scan_defs(&code, &toks);
    let lines: Vec<&str> = file.content.lines().collect();
    let n_lines = lines.len();

    let mut elements: Vec<SkeletonElement> = Vec::new();
    for f in &defs.functions {
        elements.push(SkeletonElement {
            kind: ElementKind::Function,
            name: f.name.clone(),
            signature: f.signature.clone(),
            leading_comment: None,
            span: (f.start_line, f.end_line.min(n_lines.max(1))),
        });
    }
    for s in &defs.structs {
        elements.push(SkeletonElement {
            kind: ElementKind::Struct,
            name: s.name.clone().unwrap_or_else(|| format!("struct@{}", s.start_line)),
            signature: s.signature.clone(),
            leading_comment: None,
            span: (s.start_line, s.end_line.min(n_lines.max(1))),
        });
    }
    elements.sort_by_key(|e| e.span);
    // Drop anything overlapping an earlier span; the scanners only emit
    // depth-0 definitions, so this fires on pathological input only.
    let mut kept: Vec<SkeletonElement> = Vec::new();
    for el in elements {
        if kept.last().map(|p| el.span.0 > p.span.1).unwrap_or(true) {
            kept.push(el);
        }
    }

    let mut covered = vec![false; n_lines + 1];
    for el in &kept {
        for l in el.span.0..=el.span.1.min(n_lines) {
            covered[l] = true;
        }
    }

    let blocks = comment_blocks(&file.content, &lines, &regions);
    for el in &mut kept {
        if let Some(b) = blocks.iter().find(|b| b.end_line + 1 == el.span.0) {
            if !b.text.is_empty() {
                el.leading_comment = Some(b.text.clone());
            }
            for l in b.start_line..=b.end_line.min(n_lines) {
                covered[l] = true;
            }
        }
    }

    let mut all = kept;
    let mut run_start: Option<usize> = None;
    for l in 1..=n_lines + 1 {
        let in_run = l <= n_lines && !covered[l] && !lines[l - 1].trim().is_empty();
        match (run_start, in_run) {
            (None, true) => run_start = Some(l),
            (Some(s), false) => {
                all.push(SkeletonElement {
                    kind: ElementKind::OtherBlock,
                    name: format!("block@{s}"),
                    signature: collapse_ws(lines[s - 1]),
                    leading_comment: None,
                    span: (s, l - 1),
                });
                run_start = None;
            }
            _ => {}
        }
    }
    all.sort_by_key(|e| e.span);

    Skeleton { path: file.path.clone(), elements: all }
}
