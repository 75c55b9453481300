//! Model backends: a chat-completion HTTP client and a rule-table mock.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use claimcheck_core::digest::tagged_digest;
use claimcheck_core::retry::{RetryPolicy, Retryable};
use claimcheck_core::Label;
use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("transient backend failure: {0}")]
    Transient(String),
    #[error("backend failure: {0}")]
    Fatal(String),
}

impl Retryable for BackendError {
    fn is_retryable(&self) -> bool {
        matches!(self, BackendError::Transient(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendConfigError {
    #[error("remote backend needs endpoint_url")]
    MissingEndpoint,
    #[error("mock backend must not set endpoint_url")]
    UnexpectedEndpoint,
    #[error("invalid backend setting: {0}")]
    Invalid(String),
    #[error("mock rule {index}: {reason}")]
    BadRule { index: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Remote,
    Mock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchKind {
    /// Case-insensitive substring.
    Keyword,
    Regex,
}

/// One row of the mock rule table. The first matching rule decides.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockRule {
    #[serde(rename = "match")]
    pub kind: MatchKind,
    pub pattern: String,
    pub label: Label,
    /// Raw text to answer with instead of the bare label.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub endpoint_url: Option<String>,
    pub model_name: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub request_timeout_secs: u64,
    pub max_retries: u32,
    pub max_in_flight: usize,
    pub requests_per_minute: usize,
    pub mock_rules: Vec<MockRule>,
    pub mock_default: Label,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            kind: BackendKind::Mock,
            endpoint_url: None,
            model_name: "mock".into(),
            temperature: 0.0,
            max_output_tokens: 8,
            request_timeout_secs: 60,
            max_retries: 3,
            max_in_flight: 4,
            requests_per_minute: 60,
            mock_rules: Vec::new(),
            mock_default: Label::No,
        }
    }
}

impl BackendConfig {
    pub fn validate(&self) -> Result<(), BackendConfigError> {
        match (self.kind, &self.endpoint_url) {
            (BackendKind::Remote, None) => return Err(BackendConfigError::MissingEndpoint),
            (BackendKind::Mock, Some(_)) => return Err(BackendConfigError::UnexpectedEndpoint),
            _ => {}
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(BackendConfigError::Invalid("temperature must be >= 0".into()));
        }
        if self.max_output_tokens == 0 || self.max_in_flight == 0 || self.requests_per_minute == 0 {
            return Err(BackendConfigError::Invalid(
                "max_output_tokens, max_in_flight and requests_per_minute must be positive".into(),
            ));
        }
        if self.model_name.is_empty() {
            return Err(BackendConfigError::Invalid("model_name is empty".into()));
        }
        for (index, rule) in self.mock_rules.iter().enumerate() {
            if rule.kind == MatchKind::Regex {
                Regex::new(&rule.pattern).map_err(|e| BackendConfigError::BadRule { index, reason: e.to_string() })?;
            }
        }
        Ok(())
    }

    /// Digest of everything that can change a response. Transport knobs
    /// (timeouts, concurrency, rate) are excluded.
    pub fn fingerprint(&self) -> String {
        let identity = json!({
            "kind": self.kind,
            "endpoint_url": self.endpoint_url,
            "model_name": self.model_name,
            "temperature": self.temperature,
            "max_output_tokens": self.max_output_tokens,
            "mock_rules": if self.kind == BackendKind::Mock { json!(self.mock_rules) } else { json!(null) },
            "mock_default": if self.kind == BackendKind::Mock { json!(self.mock_default) } else { json!(null) },
        });
        format!(
            "{}:{}",
            self.model_name,
            &tagged_digest("claimcheck/backend/v1", identity.to_string().as_bytes())[..16]
        )
    }

    pub fn retry_policy(&self) -> RetryPolicy {
        RetryPolicy { max_retries: self.max_retries, ..RetryPolicy::default() }
    }

    /// Builds the backend this configuration describes.
    pub fn build(&self, api_key: Option<String>) -> Result<Arc<dyn ChatBackend>, BackendConfigError> {
        self.validate()?;
        Ok(match self.kind {
            BackendKind::Mock => Arc::new(MockBackend::new(self)?),
            BackendKind::Remote => Arc::new(RemoteBackend::new(self, api_key)),
        })
    }
}

/// What a backend is asked. Remote backends only see `prompt`; the mock
/// decides on `instance_text`.
#[derive(Debug, Clone, Copy)]
pub struct CompletionRequest<'a> {
    pub prompt: &'a str,
    pub instance_text: &'a str,
}

pub trait ChatBackend: Send + Sync {
    fn fingerprint(&self) -> String;
    fn model_name(&self) -> &str;
    /// Whether calls count against `requests_per_minute`.
    fn rate_limited(&self) -> bool;
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, BackendError>;
}

// ---------------------------------------------------------------------------
// Mock
// ---------------------------------------------------------------------------

enum Matcher {
    Keyword(String),
    Regex(Regex),
}

pub struct MockBackend {
    fingerprint: String,
    model_name: String,
    rules: Vec<(Matcher, Label, Option<String>)>,
    default: Label,
    calls: AtomicU64,
}

impl MockBackend {
    pub fn new(config: &BackendConfig) -> Result<Self, BackendConfigError> {
        let mut rules = Vec::with_capacity(config.mock_rules.len());
        for (index, r) in config.mock_rules.iter().enumerate() {
            let m = match r.kind {
                MatchKind::Keyword => Matcher::Keyword(r.pattern.to_lowercase()),
                MatchKind::Regex => Matcher::Regex(
                    Regex::new(&r.pattern).map_err(|e| BackendConfigError::BadRule { index, reason: e.to_string() })?,
                ),
            };
            rules.push((m, r.label, r.response.clone()));
        }
        Ok(Self {
            fingerprint: config.fingerprint(),
            model_name: config.model_name.clone(),
            rules,
            default: config.mock_default,
            calls: AtomicU64::new(0),
        })
    }

    /// Number of `complete` calls served so far.
    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn decide(&self, text: &str) -> String {
        let lower = text.to_lowercase();
        for (m, label, response) in &self.rules {
            let hit = match m {
                Matcher::Keyword(k) => lower.contains(k.as_str()),
                Matcher::Regex(r) => r.is_match(text),
            };
            if hit {
                return response.clone().unwrap_or_else(|| label.to_string());
            }
        }
        self.default.to_string()
    }
}

impl ChatBackend for MockBackend {
    fn fingerprint(&self) -> String {
        self.fingerprint.clone()
    }

    fn model_name(&self) -> &str {
        &self.model_name
    }

    fn rate_limited(&self) -> bool {
        false
    }

    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        Ok(self.decide(request.instance_text))
    }
}

// ---------------------------------------------------------------------------
// Remote
// ---------------------------------------------------------------------------

/// Client for any chat-completion-compatible HTTP endpoint.
///
/// Request body: `{"model", "messages": [{"role": "user", "content"}],
/// "temperature", "max_tokens"}`; the answer is read from
/// `choices[0].message.content`. 429, 5xx and transport errors are
/// transient; other statuses are fatal.
pub struct RemoteBackend {
    agent: ureq::Agent,
    endpoint: String,
    api_key: Option<String>,
    model_name: String,
    temperature: f64,
    max_output_tokens: u32,
    fingerprint: String,
}

impl RemoteBackend {
    pub fn new(config: &BackendConfig, api_key: Option<String>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.request_timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            agent,
            endpoint: config.endpoint_url.clone().unwrap_or_default(),
            api_key,
            model_name: config.model_name.clone(),
            temperature: config.temperature,
            max_output_tokens: config.max_output_tokens,
            fingerprint: config.fingerprint(),
        }
    }

    pub fn request_body(&self, prompt: &str) -> serde_json::Value {
        json!({
            "model": self.model_name,
            "messages": [{ "role": "user", "content": prompt }],
            "temperature": self.temperature,
            "max_tokens": self.max_output_tokens,
        })
    }
}

impl ChatBackend for RemoteBackend {
    fn fingerprint(&self) -> String {
        self.fingerprint.clone()
    }

    fn model_name(&self) -> &str {
        &self.model_name
    }

    fn rate_limited(&self) -> bool {
        true
    }

    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, BackendError> {
        let mut req = self.agent.post(&self.endpoint);
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp =
            req.send_json(self.request_body(request.prompt)).map_err(|e| BackendError::Transient(e.to_string()))?;
        let status = resp.status().as_u16();
        let body = resp.body_mut().read_to_string().map_err(|e| BackendError::Transient(e.to_string()))?;
        match status {
            200..=299 => {}
            429 | 500..=599 => return Err(BackendError::Transient(format!("HTTP {status}: {body}"))),
            _ => return Err(BackendError::Fatal(format!("HTTP {status}: {body}"))),
        }
        let v: serde_json::Value =
            serde_json::from_str(&body).map_err(|e| BackendError::Fatal(format!("invalid JSON response: {e}")))?;
        v.pointer("/choices/0/message/content")
            .and_then(|c| c.as_str())
            .map(str::to_owned)
            .ok_or_else(|| BackendError::Fatal("response has no choices[0].message.content".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn digit_rule() -> BackendConfig {
        BackendConfig {
            mock_rules: vec![MockRule {
                kind: MatchKind::Regex,
                pattern: r"\d".into(),
                label: Label::Yes,
                response: None,
            }],
            ..BackendConfig::default()
        }
    }

    #[test]
    fn mock_digit_rule() {
        let m = MockBackend::new(&digit_rule()).unwrap();
        let ask = |t| m.complete(&CompletionRequest { prompt: "ignored", instance_text: t }).unwrap();
        assert_eq!(ask("In 2020 X rose"), "Yes");
        assert_eq!(ask("I love it"), "No");
        assert_eq!(m.calls(), 2);
    }

    #[test]
    fn first_rule_wins_and_keywords_ignore_case() {
        let cfg = BackendConfig {
            mock_rules: vec![
                MockRule {
                    kind: MatchKind::Keyword,
                    pattern: "Opinion".into(),
                    label: Label::No,
                    response: Some("No.".into()),
                },
                MockRule { kind: MatchKind::Keyword, pattern: "percent".into(), label: Label::Yes, response: None },
            ],
            mock_default: Label::Yes,
            ..BackendConfig::default()
        };
        let m = MockBackend::new(&cfg).unwrap();
        assert_eq!(m.decide("my OPINION on percent"), "No.");
        assert_eq!(m.decide("ten percent"), "Yes");
        assert_eq!(m.decide("other"), "Yes");
    }

    #[test]
    fn validation() {
        assert!(BackendConfig::default().validate().is_ok());
        let remote = BackendConfig { kind: BackendKind::Remote, ..BackendConfig::default() };
        assert_eq!(remote.validate(), Err(BackendConfigError::MissingEndpoint));
        let mock_with_url = BackendConfig { endpoint_url: Some("http://x".into()), ..BackendConfig::default() };
        assert_eq!(mock_with_url.validate(), Err(BackendConfigError::UnexpectedEndpoint));
        let bad_regex = BackendConfig {
            mock_rules: vec![MockRule {
                kind: MatchKind::Regex,
                pattern: "(".into(),
                label: Label::Yes,
                response: None,
            }],
            ..BackendConfig::default()
        };
        assert!(matches!(bad_regex.validate(), Err(BackendConfigError::BadRule { index: 0, .. })));
        let zero = BackendConfig { max_in_flight: 0, ..BackendConfig::default() };
        assert!(zero.validate().is_err());
    }

    #[test]
    fn fingerprint_ignores_transport_knobs() {
        let a = digit_rule();
        let b = BackendConfig { max_in_flight: 16, requests_per_minute: 5, ..digit_rule() };
        assert_eq!(a.fingerprint(), b.fingerprint());
        let c = BackendConfig { mock_default: Label::Yes, ..digit_rule() };
        assert_ne!(a.fingerprint(), c.fingerprint());
    }
}
