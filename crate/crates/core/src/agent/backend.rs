use std::collections::HashMap;
use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use base64::Engine as _;
use image::RgbImage;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use super::{AgentRole, ModelRequest, ModelResponse};

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("no scripted response for {role} at step {step}")]
    MissingFixture { role: AgentRole, step: usize },
    #[error("{path}:{line}: {message}")]
    Fixture { path: PathBuf, line: usize, message: String },
    #[error("backend configuration: {0}")]
    Config(String),
    #[error("http request failed: {0}")]
    Transport(String),
    #[error("unexpected response body: {0}")]
    Protocol(String),
}

/// A multimodal chat model. Implementations must tolerate concurrent calls
/// from independent runs.
pub trait Backend: Send + Sync {
    fn complete(&self, request: &ModelRequest) -> Result<ModelResponse, BackendError>;
}

impl<B: Backend + ?Sized> Backend for &B {
    fn complete(&self, request: &ModelRequest) -> Result<ModelResponse, BackendError> {
        (**self).complete(request)
    }
}

impl<B: Backend + ?Sized> Backend for Box<B> {
    fn complete(&self, request: &ModelRequest) -> Result<ModelResponse, BackendError> {
        (**self).complete(request)
    }
}

/// One line of a scripted fixture file.
///
/// Records sharing a `(role, step)` key answer successive attempts in file
/// order; the last one repeats. A record without `step` answers every step
/// that has no record of its own.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureRecord {
    pub role: AgentRole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<usize>,
    pub response: String,
}

/// Replays canned responses keyed by `(role, step, attempt)`. Stateless
/// apart from a call counter, so identical keys always give identical text.
#[derive(Debug, Default)]
pub struct ScriptedBackend {
    responses: HashMap<(AgentRole, Option<usize>), Vec<String>>,
    calls: AtomicUsize,
}

impl ScriptedBackend {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_records(records: impl IntoIterator<Item = FixtureRecord>) -> Self {
        let mut backend = Self::new();
        for r in records {
            backend.responses.entry((r.role, r.step)).or_default().push(r.response);
        }
        backend
    }

    /// Adds a response for `role` at `step`.
    pub fn with(mut self, role: AgentRole, step: usize, response: impl Into<String>) -> Self {
        self.responses.entry((role, Some(step))).or_default().push(response.into());
        self
    }

    /// Adds a response for `role` at every step without its own entry.
    pub fn with_default(mut self, role: AgentRole, response: impl Into<String>) -> Self {
        self.responses.entry((role, None)).or_default().push(response.into());
        self
    }

    /// Reads line-delimited [`FixtureRecord`]s. Blank lines are ignored.
    pub fn from_jsonl(path: &Path) -> Result<Self, BackendError> {
        let text = fs::read_to_string(path).map_err(|e| BackendError::Fixture {
            path: path.to_path_buf(),
            line: 0,
            message: e.to_string(),
        })?;
        let mut records = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: FixtureRecord = serde_json::from_str(line).map_err(|e| BackendError::Fixture {
                path: path.to_path_buf(),
                line: n + 1,
                message: e.to_string(),
            })?;
            records.push(record);
        }
        Ok(Self::from_records(records))
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    fn lookup(&self, role: AgentRole, step: usize, attempt: usize) -> Option<&str> {
        self.responses
            .get(&(role, Some(step)))
            .or_else(|| self.responses.get(&(role, None)))
            .and_then(|list| list.get(attempt).or_else(|| list.last()))
            .map(String::as_str)
    }
}

impl Backend for ScriptedBackend {
    fn complete(&self, request: &ModelRequest) -> Result<ModelResponse, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.lookup(request.role, request.step, request.attempt)
            .map(|text| ModelResponse { text: text.to_string() })
            .ok_or(BackendError::MissingFixture { role: request.role, step: request.step })
    }
}

pub const ENV_API_URL: &str = "VIDGUIDE_API_URL";
pub const ENV_API_KEY: &str = "VIDGUIDE_API_KEY";
pub const ENV_MODEL: &str = "VIDGUIDE_MODEL";

const DEFAULT_API_URL: &str = "https://api.openai.com/v1/chat/completions";
const DEFAULT_MODEL: &str = "gpt-4o";

#[derive(Debug, Clone, PartialEq)]
pub struct HttpConfig {
    pub url: String,
    pub api_key: String,
    pub model: String,
    pub seed: Option<u64>,
    pub timeout: Duration,
}

impl HttpConfig {
    /// Reads endpoint, key and model from the environment. The key is
    /// required.
    pub fn from_env() -> Result<Self, BackendError> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self, BackendError> {
        let api_key = get(ENV_API_KEY)
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| BackendError::Config(format!("{ENV_API_KEY} is not set")))?;
        Ok(Self {
            url: get(ENV_API_URL).unwrap_or_else(|| DEFAULT_API_URL.to_string()),
            api_key,
            model: get(ENV_MODEL).unwrap_or_else(|| DEFAULT_MODEL.to_string()),
            seed: None,
            timeout: Duration::from_secs(120),
        })
    }
}

pub fn encode_png_base64(image: &RgbImage) -> String {
    let mut buf = Cursor::new(Vec::new());
    image
        .write_to(&mut buf, image::ImageFormat::Png)
        .expect("in-memory PNG encoding");
    base64::engine::general_purpose::STANDARD.encode(buf.into_inner())
}

/// Chat-completions client; images travel inline as base64 PNG data URLs.
#[derive(Debug)]
pub struct HttpBackend {
    config: HttpConfig,
    agent: ureq::Agent,
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .build()
            .into();
        Self { config, agent }
    }

    pub fn config(&self) -> &HttpConfig {
        &self.config
    }

    pub fn request_body(&self, request: &ModelRequest) -> Value {
        let mut content = Vec::new();
        if !request.user.is_empty() {
            content.push(json!({ "type": "text", "text": request.user }));
        }
        for image in &request.images {
            content.push(json!({
                "type": "image_url",
                "image_url": { "url": format!("data:image/png;base64,{}", encode_png_base64(image)) }
            }));
        }
        let mut body = json!({
            "model": self.config.model,
            "messages": [
                { "role": "system", "content": request.system },
                { "role": "user", "content": content },
            ],
        });
        if let Some(seed) = self.config.seed {
            body["seed"] = json!(seed);
        }
        body
    }
}

impl Backend for HttpBackend {
    fn complete(&self, request: &ModelRequest) -> Result<ModelResponse, BackendError> {
        let body = self.request_body(request);
        let mut response = self
            .agent
            .post(&self.config.url)
            .header("Authorization", &format!("Bearer {}", self.config.api_key))
            .send_json(&body)
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        let value: Value = response
            .body_mut()
            .read_json()
            .map_err(|e| BackendError::Protocol(e.to_string()))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(|text| ModelResponse { text: text.to_string() })
            .ok_or_else(|| BackendError::Protocol(format!("no choices[0].message.content in {value}")))
    }
}
