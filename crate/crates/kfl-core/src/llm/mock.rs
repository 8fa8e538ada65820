//! Deterministic providers for offline runs: a scripted text model and two
//! embedding stand-ins.

use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::Deserialize;
use thiserror::Error;

use super::{Completion, CompletionRequest, EmbeddingProvider, ProviderError, TextModelProvider};
use crate::corpus::tokenize;

#[derive(Debug, Error)]
pub enum ScriptError {
    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("script line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// How a script entry decides whether it answers a request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MockRule {
    /// Matches the n-th request of the run (0-based).
    Position(usize),
    /// Matches when every substring occurs in the request text.
    Contains(Vec<String>),
}

impl MockRule {
    fn matches(&self, call_index: usize, req: &CompletionRequest) -> bool {
        match self {
            MockRule::Position(p) => *p == call_index,
            MockRule::Contains(subs) => subs.iter().all(|s| req.user_text.contains(s.as_str())),
        }
    }
}

/// One JSON object per line, either
/// `{"position": 0, "response": "..."}` or
/// `{"contains": ["a", "b"], "response": "..."}`.
#[derive(Debug, Deserialize)]
struct RawEntry {
    #[serde(default)]
    position: Option<usize>,
    #[serde(default)]
    contains: Option<Vec<String>>,
    response: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MockScript {
    rules: Vec<(MockRule, String)>,
}

impl MockScript {
    pub fn new(rules: Vec<(MockRule, String)>) -> Self {
        MockScript { rules }
    }

    pub fn from_jsonl(text: &str) -> Result<Self, ScriptError> {
        let mut rules = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let parse_err = |msg: String| ScriptError::Parse { line: n + 1, msg };
            let raw: RawEntry =
                serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))?;
            let rule = match (raw.position, raw.contains) {
                (Some(p), None) => MockRule::Position(p),
                (None, Some(subs)) if !subs.is_empty() => MockRule::Contains(subs),
                (None, Some(_)) => {
                    return Err(parse_err("\"contains\" must list at least one substring".into()))
                }
                (Some(_), Some(_)) => {
                    return Err(parse_err("entry sets both \"position\" and \"contains\"".into()))
                }
                (None, None) => {
                    return Err(parse_err("entry needs \"position\" or \"contains\"".into()))
                }
            };
            rules.push((rule, raw.response));
        }
        Ok(MockScript { rules })
    }

    pub fn from_path(path: &Path) -> Result<Self, ScriptError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ScriptError::Io { path: path.to_path_buf(), source })?;
        Self::from_jsonl(&text)
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

/// Scripted text model: the first rule matching a request supplies the
/// response; an unmatched request is a transport failure, which surfaces
/// scripting gaps instead of hiding them. Token counts are estimated at
/// four characters per token.
pub struct MockProvider {
    script: MockScript,
    calls: Mutex<usize>,
}

impl MockProvider {
    pub fn new(script: MockScript) -> Self {
        MockProvider { script, calls: Mutex::new(0) }
    }

    pub fn calls(&self) -> usize {
        *self.calls.lock().unwrap()
    }
}

fn estimate_tokens(text: &str) -> u64 {
    (text.chars().count() / 4) as u64
}

impl TextModelProvider for MockProvider {
    fn name(&self) -> &str {
        "mock"
    }

    fn complete(&self, req: &CompletionRequest) -> Result<Completion, ProviderError> {
        let index = {
            let mut calls = self.calls.lock().unwrap();
            let i = *calls;
            *calls += 1;
            i
        };
        for (rule, response) in &self.script.rules {
            if rule.matches(index, req) {
                return Ok(Completion {
                    text: response.clone(),
                    prompt_tokens: estimate_tokens(&req.user_text),
                    completion_tokens: estimate_tokens(response),
                });
            }
        }
        let head: String = req.user_text.chars().take(120).collect();
        Err(ProviderError::Transport(format!(
            "no mock rule matched request {index} starting {head:?}"
        )))
    }
}

/// Embedding stand-in for tests: first rule whose substring occurs in the
/// input supplies the vector; otherwise the zero vector.
pub struct MockEmbedder {
    rules: Vec<(String, Vec<f32>)>,
    dims: usize,
}

impl MockEmbedder {
    pub fn new(rules: Vec<(String, Vec<f32>)>, dims: usize) -> Self {
        MockEmbedder { rules, dims }
    }
}

impl EmbeddingProvider for MockEmbedder {
    fn name(&self) -> &str {
        "mock-embed"
    }

    fn embed(&self, text: &str) -> Result<Vec<f32>, ProviderError> {
        for (needle, vector) in &self.rules {
            if text.contains(needle.as_str()) {
                return Ok(vector.clone());
            }
        }
        Ok(vec![0.0; self.dims])
    }

    fn max_input_chars(&self) -> usize {
        8_192
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a, fixed forever; the std hasher is not stable across releases
/// and reruns must be byte-identical.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Signed feature hashing over the shared tokenizer: each token adds ±1 to
/// a hashed dimension, the result is L2-normalized. A real, fully offline
/// lexical embedding, not a test double.
pub struct HashedEmbedder {
    dims: usize,
}

impl HashedEmbedder {
    pub fn new(dims: usize) -> Self {
        assert!(dims > 0, "embedding needs at least one dimension");
        HashedEmbedder { dims }
    }
}

impl Default for HashedEmbedder {
    fn default() -> Self {
        HashedEmbedder::new(512)
    }
}

impl EmbeddingProvider for HashedEmbedder {
    fn name(&self) -> &str {
        "hashed-bow"
    }

    fn embed(&self, text: &str) -> Result<Vec<f32>, ProviderError> {
        let mut v = vec![0.0f32; self.dims];
        for token in tokenize(text) {
            let h = fnv1a(token.as_bytes());
            let slot = (h % self.dims as u64) as usize;
            let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
            v[slot] += sign;
        }
        let norm = v.iter().map(|x| (*x as f64) * (*x as f64)).sum::<f64>().sqrt();
        if norm > 0.0 {
            for x in &mut v {
                *x = (*x as f64 / norm) as f32;
            }
        }
        Ok(v)
    }

    fn max_input_chars(&self) -> usize {
        1_000_000
    }
}
