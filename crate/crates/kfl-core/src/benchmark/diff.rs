//! Unified diff parsing and ground-truth extraction from fix patches.
//!
//! The parser is deliberately forgiving: mail bodies wrap diffs in prose,
//! signatures, and trailers, so anything that is not a recognizable file
//! header or hunk is skipped. Hunk bodies are consumed by line count, which
//! keeps `---` sequences inside removed lines from being mistaken for
//! file headers.

use std::collections::HashMap;

use once_cell::sync::Lazy;
use regex::Regex;

use super::BenchmarkError;
use crate::corpus::{is_c_keyword, CodebaseIndex, ElementKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hunk {
    pub old_start: usize,
    pub old_len: usize,
    pub new_start: usize,
    pub new_len: usize,
    /// Trailing text of the `@@` header, usually the enclosing signature.
    pub context: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DiffFile {
    /// Pre-image path, already stripped of `a/`; None for file creation.
    pub old_path: Option<String>,
    /// Post-image path, stripped of `b/`; None for file deletion.
    pub new_path: Option<String>,
    pub hunks: Vec<Hunk>,
    pub renamed: bool,
}

impl DiffFile {
    /// The path a fix for this entry lands in: post-image, except for
    /// deletions where only the pre-image exists.
    pub fn effective_path(&self) -> Option<&str> {
        self.new_path.as_deref().or(self.old_path.as_deref())
    }

    fn is_empty(&self) -> bool {
        self.old_path.is_none() && self.new_path.is_none() && self.hunks.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ParsedDiff {
    pub files: Vec<DiffFile>,
}

impl ParsedDiff {
    pub fn hunk_count(&self) -> usize {
        self.files.iter().map(|f| f.hunks.len()).sum()
    }

    /// Files the patch modifies, post-image paths, first-seen order.
    pub fn modified_paths(&self) -> Vec<String> {
        let mut out = Vec::new();
        for f in &self.files {
            if f.hunks.is_empty() && !f.renamed {
                continue;
            }
            if let Some(p) = f.effective_path() {
                if !out.iter().any(|q| q == p) {
                    out.push(p.to_string());
                }
            }
        }
        out
    }
}

static HUNK_RE: Lazy<Regex> = Lazy::new(|| {
    Regex::new(r"^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@(?: (.*))?$").unwrap()
});

/// Strips git's `a/` / `b/` prefix and any tab-separated timestamp;
/// `/dev/null` becomes None.
fn clean_path(raw: &str) -> Option<String> {
    let raw = raw.split('\t').next().unwrap_or(raw).trim();
    if raw.is_empty() || raw == "/dev/null" {
        return None;
    }
    let stripped = raw.strip_prefix("a/").or_else(|| raw.strip_prefix("b/")).unwrap_or(raw);
    Some(stripped.to_string())
}

/// Parses every file entry and hunk out of `text`, ignoring unrelated
/// surrounding lines. Never fails; an unrecognizable input simply yields
/// zero files.
pub fn parse_unified_diff(text: &str) -> ParsedDiff {
    let mut files: Vec<DiffFile> = Vec::new();
    let mut current = DiffFile::default();
    // Unconsumed body lines of the hunk being read.
    let mut body_old = 0usize;
    let mut body_new = 0usize;

    let mut flush = |current: &mut DiffFile| {
        if !current.is_empty() {
            files.push(std::mem::take(current));
        } else {
            *current = DiffFile::default();
        }
    };

    for line in text.lines() {
        if body_old > 0 || body_new > 0 {
            match line.as_bytes().first() {
                Some(b' ') => {
                    body_old = body_old.saturating_sub(1);
                    body_new = body_new.saturating_sub(1);
                }
                Some(b'-') => body_old = body_old.saturating_sub(1),
                Some(b'+') => body_new = body_new.saturating_sub(1),
                Some(b'\\') => {} // "\ No newline at end of file"
                _ => {
                    // Truncated hunk; drop the remainder and fall through
                    // so this line is interpreted normally.
                    body_old = 0;
                    body_new = 0;
                }
            }
            if line.as_bytes().first().map(|b| matches!(b, b' ' | b'-' | b'+' | b'\\')) == Some(true)
            {
                continue;
            }
        }

        if let Some(rest) = line.strip_prefix("diff --git ") {
            flush(&mut current);
            let mut parts = rest.split_whitespace();
            current.old_path = parts.next().and_then(clean_path);
            current.new_path = parts.next().and_then(clean_path);
        } else if let Some(rest) = line.strip_prefix("--- ") {
            // A new pre-image header outside a git entry starts a new file.
            if !current.hunks.is_empty() {
                flush(&mut current);
            }
            current.old_path = clean_path(rest);
        } else if let Some(rest) = line.strip_prefix("+++ ") {
            current.new_path = clean_path(rest);
        } else if let Some(rest) = line.strip_prefix("rename from ") {
            current.old_path = clean_path(rest);
            current.renamed = true;
        } else if let Some(rest) = line.strip_prefix("rename to ") {
            current.new_path = clean_path(rest);
            current.renamed = true;
        } else if let Some(caps) = HUNK_RE.captures(line) {
            // A hunk with no file header belongs to nothing; skip it.
            if current.old_path.is_none() && current.new_path.is_none() {
                continue;
            }
            let num = |i: usize, default: usize| {
                caps.get(i).map_or(default, |m| m.as_str().parse().unwrap_or(default))
            };
            let hunk = Hunk {
                old_start: num(1, 0),
                old_len: num(2, 1),
                new_start: num(3, 0),
                new_len: num(4, 1),
                context: caps.get(5).map(|m| m.as_str().trim().to_string()).unwrap_or_default(),
            };
            body_old = hunk.old_len;
            body_new = hunk.new_len;
            current.hunks.push(hunk);
        }
    }
    flush(&mut current);
    ParsedDiff { files }
}

fn is_code_path(path: &str) -> bool {
    path.ends_with(".c") || path.ends_with(".h")
}

/// Pulls an element name out of a hunk context line: the identifier just
/// before the first `(`, or the last identifier otherwise. C keywords are
/// never element names.
fn element_from_context(ctx: &str) -> Option<String> {
    static IDENT_RE: Lazy<Regex> = Lazy::new(|| Regex::new(r"[A-Za-z_][A-Za-z0-9_]*").unwrap());
    let idents: Vec<(usize, &str)> =
        IDENT_RE.find_iter(ctx).map(|m| (m.end(), m.as_str())).collect();
    if idents.is_empty() {
        return None;
    }
    let name = match ctx.find('(') {
        Some(p) => idents.iter().rev().find(|(end, _)| *end <= p).map(|(_, s)| *s)?,
        None => idents.iter().rev().map(|(_, s)| *s).find(|s| !is_c_keyword(s))?,
    };
    if is_c_keyword(name) {
        return None;
    }
    Some(name.to_string())
}

fn collect_ground_truth(
    diff: &ParsedDiff,
    mut fallback: Option<&mut dyn FnMut(&DiffFile, &Hunk) -> Option<String>>,
) -> (Vec<String>, Vec<(String, String)>) {
    let mut files = Vec::new();
    let mut methods: Vec<(String, String)> = Vec::new();
    for f in &diff.files {
        if f.hunks.is_empty() && !f.renamed {
            continue;
        }
        let Some(path) = f.effective_path() else { continue };
        if !is_code_path(path) {
            continue;
        }
        if !files.iter().any(|q| q == path) {
            files.push(path.to_string());
        }
        for h in &f.hunks {
            let name = element_from_context(&h.context)
                .or_else(|| fallback.as_mut().and_then(|lookup| lookup(f, h)));
            if let Some(name) = name {
                let pair = (path.to_string(), name);
                if !methods.contains(&pair) {
                    methods.push(pair);
                }
            }
        }
    }
    (files, methods)
}

/// Extracts (modified code files, modified elements) from a fix patch.
/// Non-code files are dropped; a diff with no hunk at all is an error.
pub fn ground_truth_from_patch(
    diff_text: &str,
) -> Result<(Vec<String>, Vec<(String, String)>), BenchmarkError> {
    let diff = parse_unified_diff(diff_text);
    if diff.hunk_count() == 0 {
        return Err(BenchmarkError::DiffParse("no hunk header recognized".to_string()));
    }
    Ok(collect_ground_truth(&diff, None))
}

/// Like [`ground_truth_from_patch`], but hunks whose context line names no
/// element are resolved against the pre-fix tree: the element whose span
/// covers the hunk's pre-image lines.
pub fn ground_truth_from_patch_in(
    diff_text: &str,
    index: &CodebaseIndex,
) -> Result<(Vec<String>, Vec<(String, String)>), BenchmarkError> {
    let diff = parse_unified_diff(diff_text);
    if diff.hunk_count() == 0 {
        return Err(BenchmarkError::DiffParse("no hunk header recognized".to_string()));
    }
    let mut skeletons: HashMap<String, Option<crate::corpus::Skeleton>> = HashMap::new();
    let mut lookup = |f: &DiffFile, h: &Hunk| -> Option<String> {
        // The index holds the pre-image, so prefer the pre-image path and
        // its line numbers.
        let path = f.old_path.as_deref().or(f.new_path.as_deref())?;
        let skel = skeletons
            .entry(path.to_string())
            .or_insert_with(|| {
                index
                    .file_id(path)
                    .map(|id| crate::corpus::extract_skeleton(index.file(id)))
            })
            .as_ref()?;
        let lo = h.old_start.max(1);
        let hi = h.old_start + h.old_len.max(1) - 1;
        skel.elements
            .iter()
            .find(|e| {
                matches!(e.kind, ElementKind::Function | ElementKind::Struct)
                    && e.span.0 <= hi
                    && lo <= e.span.1
            })
            .map(|e| e.name.clone())
    };
    Ok(collect_ground_truth(&diff, Some(&mut lookup)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn git_header_single_hunk() {
        let d = "\
diff --git a/drivers/acpi/ec.c b/drivers/acpi/ec.c
index 1111111..2222222 100644
--- a/drivers/acpi/ec.c
+++ b/drivers/acpi/ec.c
@@ -100,7 +100,8 @@ static int ec_poll(struct acpi_ec *ec)
 \tunsigned long delay;
-\tint repeat = 2;
+\tint repeat = 5;
+\t/* allow slower embedded controllers to settle */
 \tint ret;
";
        let (files, methods) = ground_truth_from_patch(d).unwrap();
        assert_eq!(files, vec!["drivers/acpi/ec.c"]);
        assert_eq!(methods, vec![("drivers/acpi/ec.c".to_string(), "ec_poll".to_string())]);
    }

    #[test]
    fn plain_headers_without_git_prefix() {
        let d = "\
--- drivers/net/e1000.c\t2023-01-01 10:00:00
+++ drivers/net/e1000.c\t2023-01-02 10:00:00
@@ -5,6 +5,7 @@ int e1000_up(struct e1000_adapter *adapter)
 line
+new line
 line
 line
 line
 line
";
        let (files, methods) = ground_truth_from_patch(d).unwrap();
        assert_eq!(files, vec!["drivers/net/e1000.c"]);
        assert_eq!(methods[0].1, "e1000_up");
    }

    #[test]
    fn rename_uses_post_image_path() {
        let d = "\
diff --git a/fs/old_name.c b/fs/new_name.c
similarity index 92%
rename from fs/old_name.c
rename to fs/new_name.c
--- a/fs/old_name.c
+++ b/fs/new_name.c
@@ -1,3 +1,3 @@ void helper(void)
-a
+b
 c
 d
";
        let (files, _) = ground_truth_from_patch(d).unwrap();
        assert_eq!(files, vec!["fs/new_name.c"]);
    }

    #[test]
    fn non_code_files_are_dropped() {
        let d = "\
--- a/Makefile
+++ b/Makefile
@@ -1,2 +1,2 @@
-VERSION = 1
+VERSION = 2
 NAME = x
";
        let (files, methods) = ground_truth_from_patch(d).unwrap();
        assert!(files.is_empty());
        assert!(methods.is_empty());
    }

    #[test]
    fn deletion_keeps_pre_image_path() {
        let d = "\
diff --git a/drivers/stale.c b/drivers/stale.c
deleted file mode 100644
--- a/drivers/stale.c
+++ /dev/null
@@ -1,3 +0,0 @@
-int gone(void)
-{
-}
";
        let (files, _) = ground_truth_from_patch(d).unwrap();
        assert_eq!(files, vec!["drivers/stale.c"]);
    }

    #[test]
    fn repeated_context_dedupes_methods() {
        let d = "\
--- a/kernel/sched.c
+++ b/kernel/sched.c
@@ -10,2 +10,2 @@ static void update_rq(struct rq *rq)
-a
+b
 c
@@ -40,2 +40,2 @@ static void update_rq(struct rq *rq)
-d
+e
 f
@@ -90,2 +90,2 @@ int sched_init(void)
-g
+h
 i
";
        let (files, methods) = ground_truth_from_patch(d).unwrap();
        assert_eq!(files.len(), 1);
        let names: Vec<&str> = methods.iter().map(|(_, m)| m.as_str()).collect();
        assert_eq!(names, vec!["update_rq", "sched_init"]);
    }

    #[test]
    fn struct_context_without_parens() {
        assert_eq!(element_from_context("struct acpi_battery {"), Some("acpi_battery".into()));
        assert_eq!(element_from_context("static int ec_poll(struct acpi_ec *ec)"), Some("ec_poll".into()));
        assert_eq!(element_from_context(""), None);
        assert_eq!(element_from_context("if (x) {"), None);
        assert_eq!(element_from_context("} while (0)"), None);
    }

    #[test]
    fn removed_dashes_do_not_open_a_file() {
        // A removed line of dashes looks like a `---` header unless hunk
        // bodies are consumed by count.
        let d = "\
--- a/lib/fmt.c
+++ b/lib/fmt.c
@@ -1,3 +1,2 @@ void print_rule(void)
--- separator ----
-x
 y
";
        let parsed = parse_unified_diff(d);
        assert_eq!(parsed.files.len(), 1);
        assert_eq!(parsed.files[0].hunks.len(), 1);
    }

    #[test]
    fn prose_around_the_diff_is_ignored() {
        let d = "\
Hi all,

this fixes the probe failure reported on Tuesday.

--- a/sound/core/init.c
+++ b/sound/core/init.c
@@ -7,2 +7,3 @@ int snd_card_init(struct snd_card *card)
 a
+b
 c

Thanks,
  someone
";
        let (files, methods) = ground_truth_from_patch(d).unwrap();
        assert_eq!(files, vec!["sound/core/init.c"]);
        assert_eq!(methods[0].1, "snd_card_init");
    }

    #[test]
    fn no_hunks_is_an_error() {
        assert!(matches!(
            ground_truth_from_patch("just an email body, no patch"),
            Err(BenchmarkError::DiffParse(_))
        ));
        assert!(ground_truth_from_patch("--- a/x.c\n+++ b/x.c\nno hunks here\n").is_err());
    }

    #[test]
    fn empty_context_falls_back_to_skeleton_lookup() {
        use crate::corpus::{CodebaseIndex, SourceFile};
        let content = "\
/* probe the device */
static int widget_probe(struct device *dev)
{
\tint a;
\tint b;
\tint c;
\treturn 0;
}
";
        let index = CodebaseIndex::from_files(vec![SourceFile::new(
            "drivers/widget.c".to_string(),
            content.to_string(),
        )])
        .unwrap();
        let d = "\
--- a/drivers/widget.c
+++ b/drivers/widget.c
@@ -4,2 +4,2 @@
-\tint a;
+\tlong a;
 \tint b;
";
        let (_, methods_plain) = ground_truth_from_patch(d).unwrap();
        assert!(methods_plain.is_empty());
        let (files, methods) = ground_truth_from_patch_in(d, &index).unwrap();
        assert_eq!(files, vec!["drivers/widget.c"]);
        assert_eq!(methods, vec![("drivers/widget.c".to_string(), "widget_probe".to_string())]);
    }

    #[test]
    fn multi_file_mixed_extensions() {
        let d = "\
diff --git a/net/core/dev.c b/net/core/dev.c
--- a/net/core/dev.c
+++ b/net/core/dev.c
@@ -1,2 +1,2 @@ int netif_rx(struct sk_buff *skb)
-a
+b
 c
diff --git a/Documentation/net.rst b/Documentation/net.rst
--- a/Documentation/net.rst
+++ b/Documentation/net.rst
@@ -1,1 +1,1 @@
-old doc
+new doc
diff --git a/include/linux/netdevice.h b/include/linux/netdevice.h
--- a/include/linux/netdevice.h
+++ b/include/linux/netdevice.h
@@ -9,2 +9,3 @@ struct net_device {
 a
+b
 c
";
        let (files, methods) = ground_truth_from_patch(d).unwrap();
        assert_eq!(files, vec!["net/core/dev.c", "include/linux/netdevice.h"]);
        assert_eq!(
            methods,
            vec![
                ("net/core/dev.c".to_string(), "netif_rx".to_string()),
                ("include/linux/netdevice.h".to_string(), "net_device".to_string()),
            ]
        );
    }

    #[test]
    fn new_file_uses_post_image() {
        let d = "\
diff --git a/include/linux/newdev.h b/include/linux/newdev.h
new file mode 100644
--- /dev/null
+++ b/include/linux/newdev.h
@@ -0,0 +1,3 @@
+#ifndef NEWDEV_H
+#define NEWDEV_H
+#endif
";
        let (files, methods) = ground_truth_from_patch(d).unwrap();
        assert_eq!(files, vec!["include/linux/newdev.h"]);
        assert!(methods.is_empty());
    }
}
