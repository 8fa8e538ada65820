//! Model provider abstraction: a text-completion trait with mock and HTTP
//! implementations, a client wrapper that enforces character budgets and
//! records a transcript, and the prompt/parse catalog in [`prompts`].
//!
//! Everything is synchronous. Providers must tolerate concurrent calls,
//! the client serializes transcript appends behind a mutex.

mod http;
mod mock;
mod prompts;

pub use http::{HttpProvider, HttpProviderConfig};
pub use mock::{HashedEmbedder, MockEmbedder, MockProvider, MockRule, MockScript, ScriptError};
pub use prompts::{
    build_directory_prompt, build_hypothesis_prompt, build_method_prompt, build_rerank_prompt,
    build_summary_prompt, parse_element_list, parse_file_list, parse_hypotheses,
    parse_labeled_sections, render_bug_info, truncate_marked, HypothesisParse, SUMMARY_LABELS,
};

use std::io::Write;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("rate limited: {0}")]
    RateLimit(String),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("prompt too long: {0}")]
    OverlongPrompt(String),
}

/// Model output that could not be coerced into the requested shape.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("unparseable model output: {0}")]
pub struct ParseFailure(pub String);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub system_text: Option<String>,
    pub user_text: String,
    pub temperature: f64,
    pub max_output: Option<u32>,
}

impl CompletionRequest {
    /// No system text, temperature 0: the reproducibility default.
    pub fn new(user_text: String) -> Self {
        CompletionRequest { system_text: None, user_text, temperature: 0.0, max_output: None }
    }

    pub fn char_len(&self) -> usize {
        self.user_text.chars().count()
            + self.system_text.as_deref().map_or(0, |s| s.chars().count())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub text: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

pub trait TextModelProvider: Send + Sync {
    fn name(&self) -> &str;
    fn complete(&self, req: &CompletionRequest) -> Result<Completion, ProviderError>;
}

pub trait EmbeddingProvider: Send + Sync {
    fn name(&self) -> &str;
    fn embed(&self, text: &str) -> Result<Vec<f32>, ProviderError>;
    /// Inputs longer than this are truncated by callers before embedding.
    fn max_input_chars(&self) -> usize;
}

/// Character budgets applied before a request leaves the process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PromptBudget {
    pub description_chars: usize,
    pub mail_chars: usize,
    pub request_chars: usize,
}

impl Default for PromptBudget {
    fn default() -> Self {
        PromptBudget { description_chars: 8_000, mail_chars: 4_000, request_chars: 100_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub provider: String,
    pub prompt: String,
    pub response: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub latency_ms: u64,
}

const TRANSPORT_RETRIES: usize = 2;
const BACKOFF_BASE_MS: u64 = 250;

const RETRY_REMINDER: &str = "\n\nYour previous response could not be parsed. \
Please format your response strictly according to the format provided above without commentary.";

/// Budget enforcement, transport retry, and transcript capture around a
/// provider. Offline mode records zero latency and skips retry backoff:
/// a deterministic provider will not succeed on the second try.
pub struct LlmClient {
    provider: Arc<dyn TextModelProvider>,
    budget: PromptBudget,
    offline: bool,
    transcript: Mutex<Vec<TranscriptEntry>>,
}

impl LlmClient {
    pub fn new(provider: Arc<dyn TextModelProvider>, budget: PromptBudget, offline: bool) -> Self {
        LlmClient { provider, budget, offline, transcript: Mutex::new(Vec::new()) }
    }

    pub fn budget(&self) -> &PromptBudget {
        &self.budget
    }

    pub fn provider_name(&self) -> String {
        self.provider.name().to_string()
    }

    /// Sends one request. Prompts over the request budget are rejected
    /// before any provider call and leave no transcript entry. Transport
    /// failures are retried up to 2 times with exponential backoff.
    pub fn complete(&self, req: &CompletionRequest) -> Result<String, ProviderError> {
        let chars = req.char_len();
        if chars > self.budget.request_chars {
            return Err(ProviderError::OverlongPrompt(format!(
                "{chars} chars exceeds the {}-char request budget",
                self.budget.request_chars
            )));
        }
        let retries = if self.offline { 0 } else { TRANSPORT_RETRIES };
        let mut last = None;
        for attempt in 0..=retries {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(BACKOFF_BASE_MS << (attempt - 1)));
            }
            let start = Instant::now();
            match self.provider.complete(req) {
                Ok(c) => {
                    let latency_ms =
                        if self.offline { 0 } else { start.elapsed().as_millis() as u64 };
                    self.transcript.lock().unwrap().push(TranscriptEntry {
                        provider: self.provider.name().to_string(),
                        prompt: req.user_text.clone(),
                        response: c.text.clone(),
                        prompt_tokens: c.prompt_tokens,
                        completion_tokens: c.completion_tokens,
                        latency_ms,
                    });
                    return Ok(c.text);
                }
                Err(e @ ProviderError::Transport(_)) => last = Some(e),
                Err(e) => return Err(e),
            }
        }
        Err(last.expect("at least one attempt ran"))
    }

    /// Completes and parses; one retry with a strict-format reminder on
    /// parse failure, then None. Provider errors still propagate.
    pub fn complete_parsed<T>(
        &self,
        req: &CompletionRequest,
        parse: impl Fn(&str) -> Result<T, ParseFailure>,
    ) -> Result<Option<T>, ProviderError> {
        let text = self.complete(req)?;
        if let Ok(v) = parse(&text) {
            return Ok(Some(v));
        }
        log::warn!("unparseable response from {}, retrying once", self.provider.name());
        let mut retry = req.clone();
        retry.user_text.push_str(RETRY_REMINDER);
        let text = self.complete(&retry)?;
        Ok(parse(&text).ok())
    }

    pub fn transcript(&self) -> Vec<TranscriptEntry> {
        self.transcript.lock().unwrap().clone()
    }

    pub fn transcript_len(&self) -> usize {
        self.transcript.lock().unwrap().len()
    }

    /// (prompt tokens, completion tokens) summed over the transcript.
    pub fn token_totals(&self) -> (u64, u64) {
        let t = self.transcript.lock().unwrap();
        t.iter().fold((0, 0), |(p, c), e| (p + e.prompt_tokens, c + e.completion_tokens))
    }

    /// One JSON record per line, append-friendly audit format.
    pub fn export_transcript<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for entry in self.transcript.lock().unwrap().iter() {
            serde_json::to_writer(&mut out, entry)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// A potential bug cause tied to the one file a fix would land in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub cause: String,
    pub code_file: String,
    pub fix_solution: String,
}

/// Truncates on a char boundary; no marker. For marker-bearing prompt
/// truncation see [`truncate_marked`].
pub(crate) fn truncate_chars(text: &str, max_chars: usize) -> &str {
    match text.char_indices().nth(max_chars) {
        Some((i, _)) => &text[..i],
        None => text,
    }
}
