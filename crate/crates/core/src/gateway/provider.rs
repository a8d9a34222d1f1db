//! Provider adapters: an OpenAI-style chat-completions client and a local mock.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::GatewayError;
use crate::gateway::parse::{PROBLEM_DELIMITER, SOLUTION_DELIMITER};
use crate::ids::content_id;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingParams {
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for SamplingParams {
    fn default() -> Self {
        SamplingParams {
            temperature: 0.7,
            max_tokens: 4096,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub backoff_base_ms: u64,
    pub backoff_max_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            backoff_base_ms: 500,
            backoff_max_ms: 30_000,
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `attempt` (1-based): `base * 2^(attempt-1)`, capped.
    pub fn backoff(&self, attempt: u32) -> Duration {
        let exp = attempt.saturating_sub(1).min(20);
        let ms = self.backoff_base_ms.saturating_mul(1u64 << exp);
        Duration::from_millis(ms.min(self.backoff_max_ms))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    #[default]
    Http,
    Mock,
}

/// Settings for the local mock provider.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MockSettings {
    /// JSON object mapping task id to canned reply text.
    pub responses: Option<PathBuf>,
    /// Reply with a well-formed sample built from the prompt's code block when
    /// no canned reply exists.
    pub echo_fallback: bool,
    /// Roughly one in `n` fallback replies is deliberately unparsable.
    pub unparsable_every: Option<u64>,
}

impl Default for MockSettings {
    fn default() -> Self {
        MockSettings {
            responses: None,
            echo_fallback: true,
            unparsable_every: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub name: String,
    #[serde(default)]
    pub kind: ProviderKind,
    #[serde(default)]
    pub endpoint: Option<String>,
    /// Model identifier sent in the request body; defaults to `name`.
    #[serde(default)]
    pub model: Option<String>,
    /// Name of the environment variable holding the API key.
    #[serde(default)]
    pub credential_env: Option<String>,
    #[serde(default = "default_max_concurrent")]
    pub max_concurrent: usize,
    #[serde(default)]
    pub retry: RetryPolicy,
    #[serde(default)]
    pub sampling: SamplingParams,
    #[serde(default)]
    pub timeout_secs: Option<u64>,
    #[serde(default)]
    pub mock: MockSettings,
}

fn default_max_concurrent() -> usize {
    4
}

impl ProviderConfig {
    pub fn mock(name: &str) -> Self {
        ProviderConfig {
            name: name.to_string(),
            kind: ProviderKind::Mock,
            endpoint: None,
            model: None,
            credential_env: None,
            max_concurrent: 1,
            retry: RetryPolicy::default(),
            sampling: SamplingParams::default(),
            timeout_secs: None,
            mock: MockSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        let bad = |msg: &str| GatewayError::Config(format!("provider `{}`: {msg}", self.name));
        if self.max_concurrent == 0 {
            return Err(bad("max_concurrent must be at least 1"));
        }
        if self.retry.max_attempts == 0 {
            return Err(bad("retry.max_attempts must be at least 1"));
        }
        if self.kind == ProviderKind::Http && self.endpoint.is_none() {
            return Err(bad("http providers need an endpoint"));
        }
        Ok(())
    }
}

/// Provider config file: `[[provider]]` tables.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProviderFile {
    #[serde(default, rename = "provider")]
    pub providers: Vec<ProviderConfig>,
}

#[derive(Debug, Clone, Copy)]
pub struct CompletionRequest<'a> {
    pub task_id: &'a str,
    pub prompt: &'a str,
    pub params: &'a SamplingParams,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProviderReply {
    pub text: String,
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProviderError {
    #[error("authentication rejected: {0}")]
    Auth(String),
    #[error("rate limited")]
    RateLimited { retry_after: Option<Duration> },
    #[error("provider returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("transport: {0}")]
    Transport(String),
    #[error("malformed provider response: {0}")]
    Malformed(String),
    #[error("no canned response for task {0}")]
    NoCannedResponse(String),
}

impl ProviderError {
    pub fn is_retryable(&self) -> bool {
        match self {
            ProviderError::RateLimited { .. } | ProviderError::Transport(_) => true,
            ProviderError::Status { status, .. } => *status >= 500,
            _ => false,
        }
    }
}

/// `(prompt, sampling params) -> completion text`.
pub trait Provider: Send + Sync {
    fn name(&self) -> &str;
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<ProviderReply, ProviderError>;
}

impl<P: Provider + ?Sized> Provider for Box<P> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn complete(&self, request: &CompletionRequest<'_>) -> Result<ProviderReply, ProviderError> {
        (**self).complete(request)
    }
}

/// Client for the common `POST /chat/completions` JSON shape.
pub struct HttpChatProvider {
    name: String,
    endpoint: String,
    model: String,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl HttpChatProvider {
    pub fn new(config: &ProviderConfig, api_key: Option<String>) -> Result<Self, GatewayError> {
        config.validate()?;
        let agent_config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(
                config.timeout_secs.unwrap_or(300),
            )))
            .build();
        Ok(HttpChatProvider {
            name: config.name.clone(),
            endpoint: config.endpoint.clone().expect("validated"),
            model: config.model.clone().unwrap_or_else(|| config.name.clone()),
            api_key,
            agent: ureq::Agent::new_with_config(agent_config),
        })
    }
}

impl Provider for HttpChatProvider {
    fn name(&self) -> &str {
        &self.name
    }

    fn complete(&self, request: &CompletionRequest<'_>) -> Result<ProviderReply, ProviderError> {
        let body = json!({
            "model": self.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.params.temperature,
            "max_tokens": request.params.max_tokens,
        });
        let mut req = self.agent.post(&self.endpoint);
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = req
            .send_json(&body)
            .map_err(|e| ProviderError::Transport(e.to_string()))?;

        let status = response.status().as_u16();
        if status == 429 {
            let retry_after = response
                .headers()
                .get("retry-after")
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.trim().parse::<u64>().ok())
                .map(Duration::from_secs);
            return Err(ProviderError::RateLimited { retry_after });
        }
        if !(200..300).contains(&status) {
            let text = response.body_mut().read_to_string().unwrap_or_default();
            let body: String = text.chars().take(512).collect();
            return Err(if status == 401 || status == 403 {
                ProviderError::Auth(body)
            } else {
                ProviderError::Status { status, body }
            });
        }
        let value: serde_json::Value = response
            .body_mut()
            .read_json()
            .map_err(|e| ProviderError::Malformed(e.to_string()))?;
        parse_chat_response(&value)
    }
}

pub(crate) fn parse_chat_response(
    value: &serde_json::Value,
) -> Result<ProviderReply, ProviderError> {
    let text = value
        .pointer("/choices/0/message/content")
        .and_then(|v| v.as_str())
        .ok_or_else(|| ProviderError::Malformed("missing choices[0].message.content".into()))?;
    Ok(ProviderReply {
        text: text.to_string(),
        prompt_tokens: value
            .pointer("/usage/prompt_tokens")
            .and_then(|v| v.as_u64()),
        completion_tokens: value
            .pointer("/usage/completion_tokens")
            .and_then(|v| v.as_u64()),
    })
}

/// Offline provider replaying canned replies keyed by task id.
pub struct MockProvider {
    name: String,
    responses: HashMap<String, String>,
    echo_fallback: bool,
    unparsable_every: Option<u64>,
    /// Remaining injected failures per task.
    faults: Mutex<HashMap<String, (u32, ProviderError)>>,
}

impl MockProvider {
    pub fn new(name: &str) -> Self {
        MockProvider {
            name: name.to_string(),
            responses: HashMap::new(),
            echo_fallback: false,
            unparsable_every: None,
            faults: Mutex::new(HashMap::new()),
        }
    }

    pub fn from_config(config: &ProviderConfig) -> Result<Self, GatewayError> {
        let mut mock = MockProvider::new(&config.name);
        mock.echo_fallback = config.mock.echo_fallback;
        mock.unparsable_every = config.mock.unparsable_every.filter(|n| *n > 0);
        if let Some(path) = &config.mock.responses {
            let text = std::fs::read_to_string(path)
                .map_err(|e| GatewayError::Config(format!("{}: {e}", path.display())))?;
            let map: BTreeMap<String, String> = serde_json::from_str(&text)
                .map_err(|e| GatewayError::Config(format!("{}: {e}", path.display())))?;
            mock.responses.extend(map);
        }
        Ok(mock)
    }

    pub fn with_response(mut self, task_id: &str, text: &str) -> Self {
        self.responses.insert(task_id.to_string(), text.to_string());
        self
    }

    pub fn with_echo_fallback(mut self) -> Self {
        self.echo_fallback = true;
        self
    }

    /// Fails the next `times` calls for `task_id` with `error`.
    pub fn with_fault(self, task_id: &str, times: u32, error: ProviderError) -> Self {
        self.faults
            .lock()
            .expect("fault table")
            .insert(task_id.to_string(), (times, error));
        self
    }

    fn fallback_reply(&self, request: &CompletionRequest<'_>) -> String {
        if let Some(n) = self.unparsable_every {
            let bucket =
                u64::from_str_radix(&content_id(&[request.task_id])[..8], 16).expect("hex digest");
            if bucket.is_multiple_of(n) {
                return "I'm sorry, I can't produce a sample for this snippet.".to_string();
            }
        }
        let code = first_code_block(request.prompt)
            .unwrap_or(request.prompt)
            .trim_end();
        format!(
            "{PROBLEM_DELIMITER}\nWrite a function inspired by the following code and explain how it could run in parallel.\n```\n{code}\n```\n\n{SOLUTION_DELIMITER}\nA reference implementation:\n```\n{code}\n```\n"
        )
    }
}

fn first_code_block(text: &str) -> Option<&str> {
    let open = text.find("```")?;
    let after = &text[open + 3..];
    let body_start = after.find('\n')? + 1;
    let body = &after[body_start..];
    let close = body.find("\n```")?;
    Some(&body[..close])
}

impl Provider for MockProvider {
    fn name(&self) -> &str {
        &self.name
    }

    fn complete(&self, request: &CompletionRequest<'_>) -> Result<ProviderReply, ProviderError> {
        {
            let mut faults = self.faults.lock().expect("fault table");
            if let Some((remaining, error)) = faults.get_mut(request.task_id) {
                if *remaining > 0 {
                    *remaining -= 1;
                    return Err(error.clone());
                }
            }
        }
        let text = match self.responses.get(request.task_id) {
            Some(text) => text.clone(),
            None if self.echo_fallback => self.fallback_reply(request),
            None => return Err(ProviderError::NoCannedResponse(request.task_id.to_string())),
        };
        Ok(ProviderReply {
            completion_tokens: Some(text.split_whitespace().count() as u64),
            prompt_tokens: Some(request.prompt.split_whitespace().count() as u64),
            text,
        })
    }
}

/// Looks up the credential of every provider in `names` before any request is made.
pub fn resolve_credentials<F>(
    configs: &[ProviderConfig],
    names: &BTreeSet<String>,
    lookup: F,
) -> Result<HashMap<String, Option<String>>, GatewayError>
where
    F: Fn(&str) -> Option<String>,
{
    let mut out = HashMap::new();
    for name in names {
        let config = configs
            .iter()
            .find(|c| &c.name == name)
            .ok_or_else(|| GatewayError::UnknownProvider(name.clone()))?;
        config.validate()?;
        let credential =
            match &config.credential_env {
                Some(var) => Some(lookup(var).filter(|v| !v.is_empty()).ok_or_else(|| {
                    GatewayError::Auth {
                        provider: name.clone(),
                        env_var: var.clone(),
                    }
                })?),
                None => None,
            };
        out.insert(name.clone(), credential);
    }
    Ok(out)
}

pub fn build_provider(
    config: &ProviderConfig,
    credential: Option<String>,
) -> Result<Box<dyn Provider>, GatewayError> {
    Ok(match config.kind {
        ProviderKind::Http => Box::new(HttpChatProvider::new(config, credential)?),
        ProviderKind::Mock => Box::new(MockProvider::from_config(config)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::parse::split_sections;

    #[test]
    fn backoff_doubles_and_caps() {
        let p = RetryPolicy {
            max_attempts: 5,
            backoff_base_ms: 100,
            backoff_max_ms: 350,
        };
        let ms: Vec<u128> = (1..=4).map(|a| p.backoff(a).as_millis()).collect();
        assert_eq!(ms, [100, 200, 350, 350]);
    }

    #[test]
    fn defaults() {
        let s = SamplingParams::default();
        assert_eq!((s.temperature, s.max_tokens), (0.7, 4096));
        assert_eq!(RetryPolicy::default().max_attempts, 3);
    }

    #[test]
    fn mock_echo_reply_is_parsable() {
        let mock = MockProvider::new("m").with_echo_fallback();
        let params = SamplingParams::default();
        let prompt = "Seed:\n```\n#include <mpi.h>\nMPI_Init(0, 0);\n```\nReply.";
        let reply = mock
            .complete(&CompletionRequest {
                task_id: "t",
                prompt,
                params: &params,
            })
            .unwrap();
        let (_, response) = split_sections(&reply.text).unwrap();
        assert!(response.contains("MPI_Init(0, 0);"));
    }

    #[test]
    fn mock_without_fallback_errors_on_unknown_task() {
        let mock = MockProvider::new("m");
        let params = SamplingParams::default();
        let err = mock
            .complete(&CompletionRequest {
                task_id: "nope",
                prompt: "x",
                params: &params,
            })
            .unwrap_err();
        assert!(!err.is_retryable());
    }

    #[test]
    fn missing_credential_is_auth_error() {
        let mut cfg = ProviderConfig::mock("gemini");
        cfg.credential_env = Some("PARAFORGE_TEST_MISSING_KEY".into());
        let names = BTreeSet::from(["gemini".to_string()]);
        let err = resolve_credentials(&[cfg.clone()], &names, |_| None).unwrap_err();
        assert!(matches!(err, GatewayError::Auth { .. }));
        let ok = resolve_credentials(&[cfg], &names, |_| Some("k".into())).unwrap();
        assert_eq!(ok["gemini"].as_deref(), Some("k"));
    }

    #[test]
    fn chat_response_shape() {
        let v = json!({
            "choices": [{"message": {"role": "assistant", "content": "hello"}}],
            "usage": {"prompt_tokens": 3, "completion_tokens": 1}
        });
        let r = parse_chat_response(&v).unwrap();
        assert_eq!(r.text, "hello");
        assert_eq!((r.prompt_tokens, r.completion_tokens), (Some(3), Some(1)));
        assert!(parse_chat_response(&json!({"choices": []})).is_err());
    }

    #[test]
    fn retryable_classification() {
        assert!(ProviderError::RateLimited { retry_after: None }.is_retryable());
        assert!(ProviderError::Status {
            status: 503,
            body: String::new()
        }
        .is_retryable());
        assert!(!ProviderError::Status {
            status: 400,
            body: String::new()
        }
        .is_retryable());
        assert!(!ProviderError::Auth(String::new()).is_retryable());
    }
}
