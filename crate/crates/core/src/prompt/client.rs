//! LLM client contract: offline fixtures first-class, HTTP optional.

use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use thiserror::Error;

/// Environment variable holding the API credential for the live client.
pub const API_KEY_ENV: &str = "FINEMOTION_API_KEY";

#[derive(Debug, Error, Clone)]
pub enum TransportError {
    #[error("no fixture for `{source_id}` attempt {attempt} under {dir}")]
    MissingFixture { source_id: String, attempt: u32, dir: String },
    #[error("http: {0}")]
    Http(String),
    #[error("missing credential: set ${0}")]
    MissingCredential(String),
    #[error("malformed response: {0}")]
    MalformedResponse(String),
}

/// Client configuration; the paper-scale run would point `endpoint` at a
/// hosted chat-completions API, desk runs use the fixture directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LlmClientConfig {
    pub endpoint: String,
    pub model: String,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub concurrency: usize,
    pub requests_per_minute: u32,
    pub offline_fixtures: Option<PathBuf>,
}

impl Default for LlmClientConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1".into(),
            model: "gpt-3.5-turbo-0301".into(),
            timeout_secs: 60,
            max_retries: 2,
            concurrency: 4,
            requests_per_minute: 60,
            offline_fixtures: None,
        }
    }
}

impl LlmClientConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.concurrency == 0 {
            return Err("concurrency must be at least 1".into());
        }
        if self.requests_per_minute == 0 {
            return Err("requests_per_minute must be positive".into());
        }
        Ok(())
    }
}

/// A submission context: which input and which attempt this request is.
#[derive(Debug, Clone)]
pub struct RequestCtx {
    pub source_id: String,
    pub attempt: u32,
}

pub trait LlmClient: Send + Sync {
    fn submit(&self, prompt: &str, ctx: &RequestCtx) -> Result<String, TransportError>;
}

/// Wall-clock abstraction so rate limiting is testable.
pub trait Clock: Send + Sync {
    fn now_millis(&self) -> u64;
    fn sleep_millis(&self, ms: u64);
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now_millis(&self) -> u64 {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0)
    }

    fn sleep_millis(&self, ms: u64) {
        std::thread::sleep(std::time::Duration::from_millis(ms));
    }
}

/// Deterministic test clock: sleeping advances time.
#[derive(Default)]
pub struct MockClock {
    now: Mutex<u64>,
}

impl Clock for MockClock {
    fn now_millis(&self) -> u64 {
        *self.now.lock().unwrap()
    }

    fn sleep_millis(&self, ms: u64) {
        *self.now.lock().unwrap() += ms;
    }
}

/// Offline client reading responses from a fixture directory:
/// `{source_id}.attempt{n}.txt` wins over `{source_id}.txt`.
pub struct FixtureDirClient {
    pub dir: PathBuf,
}

impl LlmClient for FixtureDirClient {
    fn submit(&self, _prompt: &str, ctx: &RequestCtx) -> Result<String, TransportError> {
        let per_attempt = self.dir.join(format!("{}.attempt{}.txt", ctx.source_id, ctx.attempt));
        if per_attempt.exists() {
            return std::fs::read_to_string(&per_attempt)
                .map_err(|e| TransportError::Http(e.to_string()));
        }
        let plain = self.dir.join(format!("{}.txt", ctx.source_id));
        if plain.exists() {
            return std::fs::read_to_string(&plain)
                .map_err(|e| TransportError::Http(e.to_string()));
        }
        Err(TransportError::MissingFixture {
            source_id: ctx.source_id.clone(),
            attempt: ctx.attempt,
            dir: self.dir.display().to_string(),
        })
    }
}

/// In-memory scripted client for unit tests; counts calls, tracks the
/// maximum number of concurrent in-flight submissions, and (when given a
/// clock) stamps every submission time.
#[derive(Default)]
pub struct QueueClient {
    responses: Mutex<VecDeque<Result<String, TransportError>>>,
    fallback: Option<String>,
    pub calls: AtomicUsize,
    in_flight: AtomicUsize,
    pub max_in_flight: AtomicUsize,
    pub submit_times: Mutex<Vec<u64>>,
    pub hold_millis: u64,
    pub clock: Option<std::sync::Arc<MockClock>>,
}

impl QueueClient {
    pub fn scripted(responses: Vec<Result<String, TransportError>>) -> Self {
        Self { responses: Mutex::new(responses.into()), ..Default::default() }
    }

    /// A client that answers every request with the same response.
    pub fn constant(response: &str) -> Self {
        Self { fallback: Some(response.to_string()), ..Default::default() }
    }
}

impl LlmClient for QueueClient {
    fn submit(&self, _prompt: &str, _ctx: &RequestCtx) -> Result<String, TransportError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        if let Some(clock) = &self.clock {
            self.submit_times.lock().unwrap().push(clock.now_millis());
        }
        let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        self.max_in_flight.fetch_max(now, Ordering::SeqCst);
        if self.hold_millis > 0 {
            std::thread::sleep(std::time::Duration::from_millis(self.hold_millis));
        }
        let out = {
            let mut q = self.responses.lock().unwrap();
            match q.pop_front() {
                Some(r) => r,
                None => match &self.fallback {
                    Some(f) => Ok(f.clone()),
                    None => Err(TransportError::Http("queue exhausted".into())),
                },
            }
        };
        self.in_flight.fetch_sub(1, Ordering::SeqCst);
        out
    }
}

/// Minimal chat-completions client. Never used by tests or CI; requires
/// the credential in [`API_KEY_ENV`].
pub struct HttpLlmClient {
    pub config: LlmClientConfig,
}

impl LlmClient for HttpLlmClient {
    fn submit(&self, prompt: &str, _ctx: &RequestCtx) -> Result<String, TransportError> {
        let key = std::env::var(API_KEY_ENV)
            .map_err(|_| TransportError::MissingCredential(API_KEY_ENV.into()))?;
        let url = format!("{}/chat/completions", self.config.endpoint.trim_end_matches('/'));
        let body = serde_json::json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
        });
        let response = ureq::post(&url)
            .set("Authorization", &format!("Bearer {key}"))
            .timeout(std::time::Duration::from_secs(self.config.timeout_secs))
            .send_json(body)
            .map_err(|e| TransportError::Http(e.to_string()))?;
        let json: serde_json::Value = response
            .into_json()
            .map_err(|e| TransportError::MalformedResponse(e.to_string()))?;
        json["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| TransportError::MalformedResponse("no choices[0].message.content".into()))
    }
}
