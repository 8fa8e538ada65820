//! Indexing of a C source tree.
//!
//! The index is the shared substrate of the crate: a deterministic,
//! immutable, token- and entity-annotated view of every `.c`/`.h` file under
//! a root. Building may fan out per file; once built, everything here is
//! read-only and freely shareable across threads.

mod entities;
mod lexer;
mod tokenizer;

pub use entities::{
    extract_entities, extract_skeleton, CodeEntities, ElementKind, Skeleton, SkeletonElement,
};
pub use tokenizer::tokenize;
pub(crate) use tokenizer::is_c_keyword;

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use walkdir::WalkDir;

pub const INDEX_MAGIC: &str = "KFLIDX1";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("root directory not found: {0}")]
    RootNotFound(PathBuf),
    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid file path {path:?}: {reason}")]
    InvalidPath { path: String, reason: String },
    #[error("not a codebase index archive (expected {INDEX_MAGIC} header)")]
    BadHeader,
    #[error("corrupt index archive at line {line}: {msg}")]
    Corrupt { line: usize, msg: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceFile {
    /// Repo-relative, `/`-separated, unique within one index.
    pub path: String,
    pub content: String,
    pub line_count: usize,
}

impl SourceFile {
    pub fn new(path: String, content: String) -> Self {
        let line_count = content.lines().count();
        SourceFile { path, content, line_count }
    }
}

pub(crate) fn validate_path(path: &str) -> Result<(), CorpusError> {
    let reject = |reason: &str| {
        Err(CorpusError::InvalidPath { path: path.to_string(), reason: reason.to_string() })
    };
    if path.is_empty() {
        return reject("empty");
    }
    if path.starts_with('/') {
        return reject("absolute path");
    }
    if path.contains('\\') {
        return reject("backslash separator");
    }
    if path.split('/').any(|seg| seg == "..") {
        return reject("parent-directory segment");
    }
    Ok(())
}

/// Tokenized, entity-annotated inverted index over one source tree.
#[derive(Debug, Clone, PartialEq)]
pub struct CodebaseIndex {
    files: Vec<SourceFile>,
    path_ids: HashMap<String, usize>,
    tokens_by_file: Vec<HashMap<String, u32>>,
    inverted: HashMap<String, Vec<(usize, u32)>>,
    doc_lengths: Vec<usize>,
    avg_doc_length: f64,
    entities: Vec<CodeEntities>,
}

impl CodebaseIndex {
    /// Builds an index from already-loaded files. Files are sorted by path;
    /// duplicates and malformed paths are rejected.
    pub fn from_files(mut files: Vec<SourceFile>) -> Result<Self, CorpusError> {
        files.sort_by(|a, b| a.path.cmp(&b.path));
        for w in files.windows(2) {
            if w[0].path == w[1].path {
                return Err(CorpusError::InvalidPath {
                    path: w[0].path.clone(),
                    reason: "duplicate path".to_string(),
                });
            }
        }
        for f in &files {
            validate_path(&f.path)?;
        }

        let per_file: Vec<(HashMap<String, u32>, usize, CodeEntities)> = files
            .par_iter()
            .map(|f| {
                let toks = tokenize(&f.content);
                let len = toks.len();
                let mut counts: HashMap<String, u32> = HashMap::new();
                for t in toks {
                    *counts.entry(t).or_insert(0) += 1;
                }
                (counts, len, extract_entities(f))
            })
            .collect();

        let mut tokens_by_file = Vec::with_capacity(files.len());
        let mut doc_lengths = Vec::with_capacity(files.len());
        let mut entities = Vec::with_capacity(files.len());
        let mut inverted: HashMap<String, Vec<(usize, u32)>> = HashMap::new();
        for (id, (counts, len, ents)) in per_file.into_iter().enumerate() {
            for (tok, tf) in &counts {
                inverted.entry(tok.clone()).or_default().push((id, *tf));
            }
            tokens_by_file.push(counts);
            doc_lengths.push(len);
            entities.push(ents);
        }
        for postings in inverted.values_mut() {
            postings.sort_by_key(|(id, _)| *id);
        }
        let total: usize = doc_lengths.iter().sum();
        let avg_doc_length =
            if files.is_empty() { 0.0 } else { total as f64 / files.len() as f64 };
        let path_ids = files.iter().enumerate().map(|(i, f)| (f.path.clone(), i)).collect();

        Ok(CodebaseIndex {
            files,
            path_ids,
            tokens_by_file,
            inverted,
            doc_lengths,
            avg_doc_length,
            entities,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    /// Files in lexicographic path order; ids are positions in this slice.
    pub fn files(&self) -> &[SourceFile] {
        &self.files
    }

    pub fn file_id(&self, path: &str) -> Option<usize> {
        self.path_ids.get(path).copied()
    }

    pub fn contains(&self, path: &str) -> bool {
        self.path_ids.contains_key(path)
    }

    pub fn path(&self, id: usize) -> &str {
        &self.files[id].path
    }

    pub fn file(&self, id: usize) -> &SourceFile {
        &self.files[id]
    }

    pub fn doc_length(&self, id: usize) -> usize {
        self.doc_lengths[id]
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn postings(&self, token: &str) -> Option<&[(usize, u32)]> {
        self.inverted.get(token).map(|v| v.as_slice())
    }

    /// Document frequency: number of files containing `token` at least once.
    pub fn df(&self, token: &str) -> usize {
        self.postings(token).map(|p| p.len()).unwrap_or(0)
    }

    pub fn tf(&self, token: &str, id: usize) -> u32 {
        self.tokens_by_file[id].get(token).copied().unwrap_or(0)
    }

    pub fn tokens_of(&self, id: usize) -> &HashMap<String, u32> {
        &self.tokens_by_file[id]
    }

    pub fn entities(&self, id: usize) -> &CodeEntities {
        &self.entities[id]
    }

    /// Writes the archive: a `KFLIDX1` header line followed by one JSON
    /// record per file. Derived state is rebuilt on load, which is lossless
    /// because construction is deterministic.
    pub fn save<W: Write>(&self, out: W) -> Result<(), CorpusError> {
        let io_err = |source| CorpusError::Io { path: PathBuf::from("<archive>"), source };
        let mut w = BufWriter::new(out);
        writeln!(w, "{INDEX_MAGIC}").map_err(io_err)?;
        for f in &self.files {
            let line = serde_json::to_string(f).map_err(|e| CorpusError::Corrupt {
                line: 0,
                msg: format!("serialize {}: {e}", f.path),
            })?;
            writeln!(w, "{line}").map_err(io_err)?;
        }
        w.flush().map_err(io_err)?;
        Ok(())
    }

    pub fn save_to_path(&self, path: &Path) -> Result<(), CorpusError> {
        let f = std::fs::File::create(path)
            .map_err(|source| CorpusError::Io { path: path.to_path_buf(), source })?;
        self.save(f)
    }

    pub fn load<R: std::io::Read>(input: R) -> Result<Self, CorpusError> {
        let reader = BufReader::new(input);
        let mut lines = reader.lines().enumerate();
        let header = match lines.next() {
            Some((_, Ok(l))) => l,
            Some((_, Err(source))) => {
                return Err(CorpusError::Io { path: PathBuf::from("<archive>"), source })
            }
            None => return Err(CorpusError::BadHeader),
        };
        if header.trim_end() != INDEX_MAGIC {
            return Err(CorpusError::BadHeader);
        }
        let mut files = Vec::new();
        for (n, line) in lines {
            let line =
                line.map_err(|source| CorpusError::Io { path: PathBuf::from("<archive>"), source })?;
            if line.trim().is_empty() {
                continue;
            }
            let f: SourceFile = serde_json::from_str(&line)
                .map_err(|e| CorpusError::Corrupt { line: n + 1, msg: e.to_string() })?;
            if f.line_count != f.content.lines().count() {
                return Err(CorpusError::Corrupt {
                    line: n + 1,
                    msg: format!("line_count mismatch for {}", f.path),
                });
            }
            files.push(f);
        }
        Self::from_files(files)
    }

    pub fn load_from_path(path: &Path) -> Result<Self, CorpusError> {
        let f = std::fs::File::open(path)
            .map_err(|source| CorpusError::Io { path: path.to_path_buf(), source })?;
        Self::load(f)
    }
}

fn is_indexed_extension(path: &Path) -> bool {
    matches!(path.extension().and_then(|e| e.to_str()), Some("c") | Some("h"))
}

/// Indexes every `.c`/`.h` file under `root`. Other file types are skipped.
/// Files that are not valid UTF-8 are decoded lossily and logged, never
/// dropped: silently shrinking the corpus would bias every ranker.
pub fn index_codebase(root: &Path) -> Result<CodebaseIndex, CorpusError> {
    if !root.is_dir() {
        return Err(CorpusError::RootNotFound(root.to_path_buf()));
    }
    let mut paths: Vec<PathBuf> = Vec::new();
    for entry in WalkDir::new(root).follow_links(false) {
        let entry = entry.map_err(|e| {
            let path = e.path().map(|p| p.to_path_buf()).unwrap_or_else(|| root.to_path_buf());
            match e.into_io_error() {
                Some(source) => CorpusError::Io { path, source },
                None => CorpusError::RootNotFound(path),
            }
        })?;
        if entry.file_type().is_file() && is_indexed_extension(entry.path()) {
            paths.push(entry.path().to_path_buf());
        }
    }
    let mut files = Vec::with_capacity(paths.len());
    for abs in paths {
        let bytes = std::fs::read(&abs)
            .map_err(|source| CorpusError::Io { path: abs.clone(), source })?;
        let content = match String::from_utf8(bytes) {
            Ok(s) => s,
            Err(e) => {
                log::warn!("lossy decode of non-UTF-8 file {}", abs.display());
                String::from_utf8_lossy(e.as_bytes()).into_owned()
            }
        };
        let rel = abs
            .strip_prefix(root)
            .map_err(|_| CorpusError::InvalidPath {
                path: abs.display().to_string(),
                reason: "not under root".to_string(),
            })?
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        files.push(SourceFile::new(rel, content));
    }
    CodebaseIndex::from_files(files)
}

fn parent_dir(path: &str) -> &str {
    match path.rfind('/') {
        Some(pos) => &path[..pos],
        None => "",
    }
}

/// All indexed files sharing a directory with any of `file_paths`. Inputs
/// need not exist in the index; a directory counts as soon as the index holds
/// any file in it. Output is deduplicated and lexicographically ordered.
pub fn directory_files(index: &CodebaseIndex, file_paths: &[String]) -> Vec<String> {
    let dirs: BTreeSet<&str> = file_paths.iter().map(|p| parent_dir(p)).collect();
    index
        .files
        .iter()
        .filter(|f| dirs.contains(parent_dir(&f.path)))
        .map(|f| f.path.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn build(files: &[(&str, &str)]) -> CodebaseIndex {
        CodebaseIndex::from_files(
            files
                .iter()
                .map(|(p, c)| SourceFile::new(p.to_string(), c.to_string()))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn indexes_only_c_and_h() {
        let dir = tempfile::tempdir().unwrap();
        for (name, content) in
            [("a.c", "int alpha;"), ("b.h", "int beta;"), ("README", "docs"), ("Makefile", "all:")]
        {
            std::fs::write(dir.path().join(name), content).unwrap();
        }
        let idx = index_codebase(dir.path()).unwrap();
        let paths: Vec<&str> = idx.files().iter().map(|f| f.path.as_str()).collect();
        assert_eq!(paths, vec!["a.c", "b.h"]);
    }

    #[test]
    fn empty_directory_is_a_valid_index() {
        let dir = tempfile::tempdir().unwrap();
        let idx = index_codebase(dir.path()).unwrap();
        assert_eq!(idx.len(), 0);
        assert_eq!(idx.avg_doc_length(), 0.0);
    }

    #[test]
    fn missing_root_is_an_error() {
        let err = index_codebase(Path::new("/nonexistent/kfl-test")).unwrap_err();
        assert!(matches!(err, CorpusError::RootNotFound(_)));
    }

    #[test]
    fn nested_paths_are_slash_separated_and_sorted() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir_all(dir.path().join("drivers/acpi")).unwrap();
        std::fs::write(dir.path().join("drivers/acpi/ec.c"), "int ec;").unwrap();
        std::fs::write(dir.path().join("zlib.c"), "int z;").unwrap();
        let idx = index_codebase(dir.path()).unwrap();
        let paths: Vec<&str> = idx.files().iter().map(|f| f.path.as_str()).collect();
        assert_eq!(paths, vec!["drivers/acpi/ec.c", "zlib.c"]);
    }

    #[test]
    fn lossy_decode_keeps_file() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("latin.c"), b"int caf\xe9_count;\n").unwrap();
        let idx = index_codebase(dir.path()).unwrap();
        assert_eq!(idx.len(), 1);
        assert!(idx.file(0).content.contains('\u{FFFD}'));
    }

    #[test]
    fn doc_lengths_follow_tokenizer() {
        // "alpha beta" -> 2 tokens; "alpha beta gamma delta" -> 4.
        let idx = build(&[("a.c", "alpha beta"), ("b.c", "alpha beta gamma delta")]);
        assert_eq!(idx.doc_length(0), 2);
        assert_eq!(idx.doc_length(1), 4);
        assert_eq!(idx.avg_doc_length(), 3.0);
    }

    #[test]
    fn inverted_postings_reconstruct_token_multisets() {
        let idx = build(&[
            ("a.c", "alpha beta alpha"),
            ("b.c", "beta gamma"),
            ("c.h", "gamma gamma gamma delta"),
        ]);
        for id in 0..idx.len() {
            let mut reconstructed: HashMap<String, u32> = HashMap::new();
            for (tok, postings) in &idx.inverted {
                for (f, tf) in postings {
                    if *f == id {
                        reconstructed.insert(tok.clone(), *tf);
                    }
                }
            }
            assert_eq!(&reconstructed, idx.tokens_of(id), "file {}", idx.path(id));
        }
    }

    #[test]
    fn postings_tf_sums_to_doc_length() {
        let idx = build(&[("a.c", "alpha beta alpha gamma"), ("b.c", "beta beta")]);
        for id in 0..idx.len() {
            let total: u32 = idx.tokens_of(id).values().sum();
            assert_eq!(total as usize, idx.doc_length(id));
        }
    }

    #[test]
    fn rejects_duplicate_and_bad_paths() {
        let dup = CodebaseIndex::from_files(vec![
            SourceFile::new("a.c".into(), "x".into()),
            SourceFile::new("a.c".into(), "y".into()),
        ]);
        assert!(dup.is_err());
        for bad in ["/abs.c", "a/../b.c", ""] {
            let r = CodebaseIndex::from_files(vec![SourceFile::new(bad.into(), "x".into())]);
            assert!(r.is_err(), "{bad:?} accepted");
        }
    }

    #[test]
    fn archive_round_trip() {
        let idx = build(&[
            ("drivers/acpi/ec.c", "static int ec_poll(void) { return 0; }\n"),
            ("net/core/dev.c", "int netif_rx(struct sk_buff *skb) { return 1; }\n"),
        ]);
        let mut buf = Vec::new();
        idx.save(&mut buf).unwrap();
        assert!(buf.starts_with(INDEX_MAGIC.as_bytes()));
        let loaded = CodebaseIndex::load(buf.as_slice()).unwrap();
        assert_eq!(idx, loaded);
    }

    #[test]
    fn load_rejects_foreign_files() {
        assert!(matches!(
            CodebaseIndex::load("not an index\n".as_bytes()),
            Err(CorpusError::BadHeader)
        ));
        let garbled = format!("{INDEX_MAGIC}\nnot json\n");
        assert!(matches!(
            CodebaseIndex::load(garbled.as_bytes()),
            Err(CorpusError::Corrupt { line: 2, .. })
        ));
    }

    #[test]
    fn directory_files_same_dir() {
        let idx = build(&[
            ("drivers/acpi/battery.c", "a"),
            ("drivers/acpi/ec.c", "b"),
            ("drivers/acpi/scan.c", "c"),
            ("net/ipv6/proc.c", "d"),
        ]);
        let got = directory_files(&idx, &["drivers/acpi/battery.c".to_string()]);
        assert_eq!(got, vec!["drivers/acpi/battery.c", "drivers/acpi/ec.c", "drivers/acpi/scan.c"]);
    }

    #[test]
    fn directory_files_empty_input() {
        let idx = build(&[("a.c", "x")]);
        assert!(directory_files(&idx, &[]).is_empty());
    }

    #[test]
    fn directory_files_dedupes_shared_directory() {
        let idx = build(&[("d/a.c", "x"), ("d/b.c", "y"), ("e/c.c", "z")]);
        let got = directory_files(&idx, &["d/a.c".to_string(), "d/b.c".to_string()]);
        assert_eq!(got, vec!["d/a.c", "d/b.c"]);
    }

    #[test]
    fn directory_files_unknown_file_known_directory() {
        let idx = build(&[("d/a.c", "x"), ("d/b.c", "y")]);
        let got = directory_files(&idx, &["d/ghost.c".to_string()]);
        assert_eq!(got, vec!["d/a.c", "d/b.c"]);
        assert!(directory_files(&idx, &["ghost/only.c".to_string()]).is_empty());
    }

    #[test]
    fn directory_files_output_subset_of_index() {
        let idx = build(&[("d/a.c", "x"), ("top.c", "y")]);
        for input in [vec!["top.c".to_string()], vec!["d/a.c".to_string(), "top.c".to_string()]] {
            for p in directory_files(&idx, &input) {
                assert!(idx.contains(&p));
            }
        }
    }
}
