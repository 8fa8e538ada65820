//! OpenAI-compatible HTTP provider: chat completions for text, the
//! embeddings endpoint when an embedding model is configured.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{Completion, CompletionRequest, EmbeddingProvider, ProviderError, TextModelProvider};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HttpProviderConfig {
    /// Base URL up to but not including `/chat/completions`.
    pub endpoint: String,
    pub model: String,
    #[serde(default)]
    pub embedding_model: Option<String>,
    /// Name of the environment variable holding the bearer token.
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    /// 0 disables client-side throttling.
    #[serde(default)]
    pub requests_per_minute: u32,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_embed_chars")]
    pub max_embed_chars: usize,
}

fn default_key_env() -> String {
    "KFL_API_KEY".to_string()
}

fn default_timeout() -> u64 {
    120
}

fn default_embed_chars() -> usize {
    16_000
}

impl Default for HttpProviderConfig {
    fn default() -> Self {
        HttpProviderConfig {
            endpoint: "https://api.openai.com/v1".to_string(),
            model: "gpt-4o".to_string(),
            embedding_model: None,
            api_key_env: default_key_env(),
            requests_per_minute: 0,
            timeout_secs: default_timeout(),
            max_embed_chars: default_embed_chars(),
        }
    }
}

pub struct HttpProvider {
    cfg: HttpProviderConfig,
    api_key: String,
    client: reqwest::blocking::Client,
    last_request: Mutex<Option<Instant>>,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: Option<String>,
}

#[derive(Deserialize, Default)]
struct Usage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingDatum>,
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    embedding: Vec<f32>,
}

impl HttpProvider {
    /// Reads the credential from the configured environment variable;
    /// a missing variable is an authentication error up front.
    pub fn from_config(cfg: HttpProviderConfig) -> Result<Self, ProviderError> {
        let api_key = std::env::var(&cfg.api_key_env).map_err(|_| {
            ProviderError::Auth(format!("environment variable {} is not set", cfg.api_key_env))
        })?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(cfg.timeout_secs))
            .build()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        Ok(HttpProvider { cfg, api_key, client, last_request: Mutex::new(None) })
    }

    /// Spaces requests at least 60s/rpm apart across threads.
    fn throttle(&self) {
        if self.cfg.requests_per_minute == 0 {
            return;
        }
        let min_gap = Duration::from_secs_f64(60.0 / self.cfg.requests_per_minute as f64);
        let mut last = self.last_request.lock().unwrap();
        if let Some(prev) = *last {
            let elapsed = prev.elapsed();
            if elapsed < min_gap {
                std::thread::sleep(min_gap - elapsed);
            }
        }
        *last = Some(Instant::now());
    }

    fn post(&self, path: &str, body: serde_json::Value) -> Result<String, ProviderError> {
        self.throttle();
        let url = format!("{}/{}", self.cfg.endpoint.trim_end_matches('/'), path);
        let resp = self
            .client
            .post(&url)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| ProviderError::Transport(e.to_string()))?;
        if status.is_success() {
            return Ok(text);
        }
        let summary = format!("{status}: {}", text.chars().take(300).collect::<String>());
        match status.as_u16() {
            401 | 403 => Err(ProviderError::Auth(summary)),
            429 => Err(ProviderError::RateLimit(summary)),
            400 if text.contains("context") || text.contains("too long") => {
                Err(ProviderError::OverlongPrompt(summary))
            }
            _ => Err(ProviderError::Transport(summary)),
        }
    }
}

impl TextModelProvider for HttpProvider {
    fn name(&self) -> &str {
        &self.cfg.model
    }

    fn complete(&self, req: &CompletionRequest) -> Result<Completion, ProviderError> {
        let mut messages = Vec::new();
        if let Some(system) = &req.system_text {
            messages.push(json!({"role": "system", "content": system}));
        }
        messages.push(json!({"role": "user", "content": req.user_text}));
        let mut body = json!({
            "model": self.cfg.model,
            "messages": messages,
            "temperature": req.temperature,
        });
        if let Some(max) = req.max_output {
            body["max_tokens"] = json!(max);
        }
        let text = self.post("chat/completions", body)?;
        let parsed: ChatResponse = serde_json::from_str(&text)
            .map_err(|e| ProviderError::Transport(format!("malformed response body: {e}")))?;
        let content = parsed
            .choices
            .first()
            .and_then(|c| c.message.content.clone())
            .ok_or_else(|| ProviderError::Transport("response carries no choices".to_string()))?;
        let usage = parsed.usage.unwrap_or_default();
        Ok(Completion {
            text: content,
            prompt_tokens: usage.prompt_tokens,
            completion_tokens: usage.completion_tokens,
        })
    }
}

impl EmbeddingProvider for HttpProvider {
    fn name(&self) -> &str {
        self.cfg.embedding_model.as_deref().unwrap_or("unconfigured-embedding")
    }

    fn embed(&self, text: &str) -> Result<Vec<f32>, ProviderError> {
        let model = self.cfg.embedding_model.as_deref().ok_or_else(|| {
            ProviderError::Transport("no embedding model configured".to_string())
        })?;
        let body = json!({"model": model, "input": text});
        let raw = self.post("embeddings", body)?;
        let parsed: EmbeddingResponse = serde_json::from_str(&raw)
            .map_err(|e| ProviderError::Transport(format!("malformed response body: {e}")))?;
        parsed
            .data
            .into_iter()
            .next()
            .map(|d| d.embedding)
            .ok_or_else(|| ProviderError::Transport("response carries no embedding".to_string()))
    }

    fn max_input_chars(&self) -> usize {
        self.cfg.max_embed_chars
    }
}
