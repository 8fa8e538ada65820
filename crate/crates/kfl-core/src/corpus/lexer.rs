//! Minimal C lexing support: comment and string-literal region detection.
//!
//! No preprocessor evaluation and no grammar. The scanner only needs to be
//! right about where comments and literals begin and end so that brace
//! counting and identifier extraction never look inside them; kernel sources
//! full of macros defeat anything stricter.

/// A contiguous byte span of the original text, 1-based inclusive line range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    pub kind: RegionKind,
    pub start: usize,
    pub end: usize,
    pub start_line: usize,
    pub end_line: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionKind {
    Code,
    LineComment,
    BlockComment,
    StringLit,
    CharLit,
}

/// Splits `text` into an ordered, non-overlapping, exhaustive list of
/// regions. Unterminated comments or literals extend to end of input.
pub fn scan_regions(text: &str) -> Vec<Region> {
    let bytes = text.as_bytes();
    let mut regions = Vec::new();
    let mut state = RegionKind::Code;
    let mut start = 0usize;
    let mut start_line = 1usize;
    let mut line = 1usize;
    let mut i = 0usize;

    let push = |regions: &mut Vec<Region>,
                    kind: RegionKind,
                    start: usize,
                    end: usize,
                    start_line: usize,
                    end_line: usize| {
        if end > start {
            regions.push(Region { kind, start, end, start_line, end_line });
        }
    };

    while i < bytes.len() {
        let c = bytes[i];
        match state {
            RegionKind::Code => {
                if c == b'/' && i + 1 < bytes.len() && bytes[i + 1] == b'*' {
                    push(&mut regions, RegionKind::Code, start, i, start_line, line);
                    state = RegionKind::BlockComment;
                    start = i;
                    start_line = line;
                    i += 2;
                    continue;
                }
                if c == b'/' && i + 1 < bytes.len() && bytes[i + 1] == b'/' {
                    push(&mut regions, RegionKind::Code, start, i, start_line, line);
                    state = RegionKind::LineComment;
                    start = i;
                    start_line = line;
                    i += 2;
                    continue;
                }
                if c == b'"' || c == b'\'' {
                    push(&mut regions, RegionKind::Code, start, i, start_line, line);
                    state = if c == b'"' { RegionKind::StringLit } else { RegionKind::CharLit };
                    start = i;
                    start_line = line;
                    i += 1;
                    continue;
                }
            }
            RegionKind::BlockComment => {
                if c == b'*' && i + 1 < bytes.len() && bytes[i + 1] == b'/' {
                    i += 2;
                    push(&mut regions, RegionKind::BlockComment, start, i, start_line, line);
                    state = RegionKind::Code;
                    start = i;
                    start_line = line;
                    continue;
                }
            }
            RegionKind::LineComment => {
                if c == b'\n' {
                    push(&mut regions, RegionKind::LineComment, start, i, start_line, line);
                    state = RegionKind::Code;
                    start = i;
                    start_line = line;
                }
            }
            RegionKind::StringLit | RegionKind::CharLit => {
                if c == b'\\' {
                    i += 2;
                    continue;
                }
                let close = if state == RegionKind::StringLit { b'"' } else { b'\'' };
                if c == close {
                    i += 1;
                    push(&mut regions, state, start, i, start_line, line);
                    state = RegionKind::Code;
                    start = i;
                    start_line = line;
                    continue;
                }
                // Literals do not really span lines; bail out at a newline so
                // a stray quote cannot swallow the rest of the file.
                if c == b'\n' {
                    push(&mut regions, state, start, i, start_line, line);
                    state = RegionKind::Code;
                    start = i;
                    start_line = line;
                }
            }
        }
        if c == b'\n' {
            line += 1;
        }
        i += 1;
    }
    push(&mut regions, state, start, bytes.len(), start_line, line);
    regions
}

/// Returns `text` with every non-code region blanked by spaces (newlines
/// kept), so byte offsets and line numbers still line up with the original.
pub fn code_view(text: &str, regions: &[Region]) -> String {
    let mut out: Vec<u8> = text.as_bytes().to_vec();
    for r in regions {
        if r.kind == RegionKind::Code {
            continue;
        }
        for b in &mut out[r.start..r.end] {
            if *b != b'\n' {
                *b = b' ';
            }
        }
    }
    // Input was valid UTF-8 and we only overwrite non-newline bytes of
    // non-code regions with ASCII spaces, wiping whole multibyte sequences.
    String::from_utf8(out).unwrap_or_else(|e| {
        String::from_utf8_lossy(e.as_bytes()).into_owned()
    })
}

/// The text of one comment region without its delimiters, trimmed.
pub fn comment_text(text: &str, region: &Region) -> String {
    let raw = &text[region.start..region.end];
    let inner = match region.kind {
        RegionKind::LineComment => raw.strip_prefix("//").unwrap_or(raw),
        RegionKind::BlockComment => {
            let s = raw.strip_prefix("/*").unwrap_or(raw);
            s.strip_suffix("*/").unwrap_or(s)
        }
        _ => raw,
    };
    inner.trim().to_string()
}
