//! Client for a chat-completion-style HTTP endpoint.
//!
//! Two uses: prompt-path triple classification (the reply is normalized to
//! True/False/Unparseable, never silently coerced) and raw ontology-
//! extraction generations. Responses are cached on disk keyed by the SHA-256
//! of the full request, so a warm cache replays byte-identically with no
//! network traffic; a counting semaphore bounds in-flight requests.

use std::path::PathBuf;
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::hash::{sha256, to_hex};
use crate::verbalizer::PromptBundle;

/// Connection settings for one endpoint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub max_concurrent: usize,
    pub temperature: f64,
    pub cache_dir: PathBuf,
    /// Dot-path into the response JSON for the completion text.
    pub response_text_path: String,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        EndpointConfig {
            base_url: "http://127.0.0.1:8080/v1/chat/completions".to_owned(),
            model: "default".to_owned(),
            api_key_env: "KGC_API_KEY".to_owned(),
            timeout_secs: 60,
            max_retries: 2,
            max_concurrent: 4,
            temperature: 0.0,
            cache_dir: PathBuf::from("cache"),
            response_text_path: "choices.0.message.content".to_owned(),
        }
    }
}

impl EndpointConfig {
    pub fn validate(&self) -> Result<()> {
        if self.timeout_secs == 0 {
            return Err(Error::Config("timeout must be positive".into()));
        }
        if self.max_concurrent == 0 {
            return Err(Error::Config("max_concurrent must be at least 1".into()));
        }
        Ok(())
    }
}

/// Normalized classification label extracted from a reply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LlmLabel {
    True,
    False,
    /// Neither token found; surfaced to the caller, scored as incorrect by
    /// the evaluation harness rather than defaulted to a label.
    Unparseable,
}

/// A classification reply with provenance.
#[derive(Debug, Clone)]
pub struct LlmAnswer {
    pub label: LlmLabel,
    pub raw: String,
    pub latency: Duration,
    pub cache_hit: bool,
}

/// First case-insensitive `true`/`false` token wins; punctuation around a
/// token is ignored.
pub fn normalize_reply(raw: &str) -> LlmLabel {
    for token in raw.split_whitespace() {
        let stripped = token.trim_matches(|c: char| !c.is_ascii_alphanumeric());
        if stripped.eq_ignore_ascii_case("true") {
            return LlmLabel::True;
        }
        if stripped.eq_ignore_ascii_case("false") {
            return LlmLabel::False;
        }
    }
    LlmLabel::Unparseable
}

/// Counting semaphore; bounds in-flight network requests.
struct Semaphore {
    permits: Mutex<usize>,
    available: Condvar,
}

impl Semaphore {
    fn new(permits: usize) -> Self {
        Semaphore {
            permits: Mutex::new(permits),
            available: Condvar::new(),
        }
    }

    fn acquire(&self) -> SemaphoreGuard<'_> {
        let mut permits = self.permits.lock().unwrap();
        while *permits == 0 {
            permits = self.available.wait(permits).unwrap();
        }
        *permits -= 1;
        SemaphoreGuard { semaphore: self }
    }
}

struct SemaphoreGuard<'a> {
    semaphore: &'a Semaphore,
}

impl Drop for SemaphoreGuard<'_> {
    fn drop(&mut self) {
        let mut permits = self.semaphore.permits.lock().unwrap();
        *permits += 1;
        self.semaphore.available.notify_one();
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheEntry {
    request: serde_json::Value,
    raw_response: String,
    extracted: String,
}

/// Shared client; safe for concurrent callers.
pub struct LlmClient {
    config: EndpointConfig,
    agent: ureq::Agent,
    semaphore: Semaphore,
}

impl LlmClient {
    pub fn new(config: EndpointConfig) -> Result<Self> {
        config.validate()?;
        let agent = ureq::Agent::new_with_config(
            ureq::Agent::config_builder()
                .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
                .http_status_as_error(false)
                .build(),
        );
        let semaphore = Semaphore::new(config.max_concurrent);
        Ok(LlmClient {
            config,
            agent,
            semaphore,
        })
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.config
    }

    fn request_body(&self, user_message: &str) -> serde_json::Value {
        serde_json::json!({
            "model": self.config.model,
            "temperature": self.config.temperature,
            "messages": [{ "role": "user", "content": user_message }],
        })
    }

    fn cache_path(&self, key: &str) -> PathBuf {
        self.config.cache_dir.join(&key[..2]).join(format!("{key}.json"))
    }

    fn cache_lookup(&self, key: &str) -> Option<CacheEntry> {
        let text = std::fs::read_to_string(self.cache_path(key)).ok()?;
        serde_json::from_str(&text).ok()
    }

    fn cache_store(&self, key: &str, entry: &CacheEntry) -> Result<()> {
        let path = self.cache_path(key);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        // Write-then-rename keeps concurrent readers off half-written files.
        let tmp = path.with_extension(format!("tmp.{}", std::process::id()));
        std::fs::write(&tmp, serde_json::to_vec_pretty(entry)?)?;
        std::fs::rename(&tmp, &path)?;
        Ok(())
    }

    fn extract_text(&self, response: &serde_json::Value) -> Result<String> {
        let mut node = response;
        for part in self.config.response_text_path.split('.') {
            node = match part.parse::<usize>() {
                Ok(idx) => node.get(idx),
                Err(_) => node.get(part),
            }
            .ok_or_else(|| {
                Error::Gateway(format!(
                    "response is missing `{}` (at `{part}`)",
                    self.config.response_text_path
                ))
            })?;
        }
        node.as_str()
            .map(str::to_owned)
            .ok_or_else(|| Error::Gateway("completion text is not a string".into()))
    }

    fn api_key(&self) -> Result<String> {
        std::env::var(&self.config.api_key_env).map_err(|_| {
            Error::Config(format!(
                "API key environment variable `{}` is not set",
                self.config.api_key_env
            ))
        })
    }

    /// Sends the request unless the cache already holds the reply.
    /// Returns the extracted completion text and whether it was a cache hit.
    fn complete(&self, user_message: &str) -> Result<(String, bool)> {
        let body = self.request_body(user_message);
        let key_material = serde_json::json!({
            "url": self.config.base_url,
            "body": body,
        });
        let key = to_hex(&sha256(serde_json::to_string(&key_material)?.as_bytes()));
        if let Some(entry) = self.cache_lookup(&key) {
            return Ok((entry.extracted, true));
        }

        let api_key = self.api_key()?;
        let _permit = self.semaphore.acquire();
        let mut last_error = String::new();
        for attempt in 0..=self.config.max_retries {
            if attempt > 0 {
                let backoff = Duration::from_millis(100 * (1 << attempt.min(5)));
                std::thread::sleep(backoff);
            }
            let payload = serde_json::to_string(&body)?;
            let sent = self
                .agent
                .post(&self.config.base_url)
                .header("authorization", &format!("Bearer {api_key}"))
                .header("content-type", "application/json")
                .send(payload.as_str());
            match sent {
                Ok(mut response) => {
                    let status = response.status();
                    let text = response
                        .body_mut()
                        .read_to_string()
                        .map_err(|e| Error::Gateway(format!("reading response body: {e}")))?;
                    if status.is_success() {
                        let parsed: serde_json::Value = serde_json::from_str(&text)
                            .map_err(|e| Error::Gateway(format!("invalid response JSON: {e}")))?;
                        let extracted = self.extract_text(&parsed)?;
                        self.cache_store(
                            &key,
                            &CacheEntry {
                                request: body.clone(),
                                raw_response: text,
                                extracted: extracted.clone(),
                            },
                        )?;
                        return Ok((extracted, false));
                    }
                    last_error = format!("HTTP {status}: {text}");
                    // Client errors other than rate limiting will not
                    // succeed on retry.
                    if status.is_client_error() && status.as_u16() != 429 {
                        break;
                    }
                }
                Err(e) => {
                    last_error = format!("transport error: {e}");
                }
            }
        }
        Err(Error::Gateway(format!(
            "request failed after {} attempt(s): {last_error}",
            self.config.max_retries + 1
        )))
    }

    /// Sends a prompt bundle's sequence and normalizes the reply.
    pub fn classify_with_llm(&self, bundle: &PromptBundle) -> Result<LlmAnswer> {
        let start = Instant::now();
        let (raw, cache_hit) = self.complete(&bundle.sequence)?;
        Ok(LlmAnswer {
            label: normalize_reply(&raw),
            raw,
            latency: start.elapsed(),
            cache_hit,
        })
    }

    /// Requests a raw ontology-extraction generation.
    ///
    /// The template's `{summary}` slot receives the graph summary; a
    /// template without the slot gets the summary appended after a blank
    /// line. The completion is returned verbatim for the axiom scanner.
    pub fn generate_ontology_text(&self, kg_summary: &str, template: &str) -> Result<String> {
        if template.trim().is_empty() {
            return Err(Error::Config("ontology prompt template is empty".into()));
        }
        let prompt = if template.contains("{summary}") {
            template.replace("{summary}", kg_summary)
        } else {
            format!("{template}\n\n{kg_summary}")
        };
        let (raw, _) = self.complete(&prompt)?;
        Ok(raw)
    }
}

/// Removes every cached entry under the configured directory.
pub fn clear_cache(config: &EndpointConfig) -> Result<()> {
    if config.cache_dir.exists() {
        std::fs::remove_dir_all(&config.cache_dir)?;
    }
    Ok(())
}
