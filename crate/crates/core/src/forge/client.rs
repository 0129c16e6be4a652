use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use serde_json::json;
use thiserror::Error;

use super::meta::MetaPrompt;

/// Environment variable holding the bearer token for [`HttpTransport`].
pub const API_KEY_ENV: &str = "PAFT_API_KEY";

/// When set (to any value), every HTTP attempt panics. Used to prove offline runs stay offline.
pub const FORBID_NETWORK_ENV: &str = "PAFT_FORBID_NETWORK";

static NETWORK_ATTEMPTS: AtomicUsize = AtomicUsize::new(0);

/// HTTP attempts made by any [`HttpTransport`] in this process.
pub fn network_attempts() -> usize {
    NETWORK_ATTEMPTS.load(Ordering::SeqCst)
}

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("request timed out")]
    Timeout,
    #[error("endpoint returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("network error: {0}")]
    Network(String),
    #[error("environment variable {API_KEY_ENV} is not set")]
    MissingApiKey,
    #[error("unexpected response: {0}")]
    BadResponse(String),
    #[error("gave up after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: Box<ClientError> },
}

impl ClientError {
    /// Timeouts, transport failures, 429 and 5xx are worth another attempt.
    pub fn is_retryable(&self) -> bool {
        match self {
            ClientError::Timeout | ClientError::Network(_) => true,
            ClientError::Http { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

/// Anything that turns a meta-prompt into raw generated text.
pub trait GeneratorClient: Send + Sync {
    fn identity(&self) -> String;
    fn generate(&self, meta: &MetaPrompt) -> Result<String, ClientError>;
}

/// One request attempt against an endpoint, bounded by `timeout`.
pub trait Transport: Send + Sync {
    fn identity(&self) -> String;
    fn attempt(&self, meta: &MetaPrompt, timeout: Duration) -> Result<String, ClientError>;
}

/// Wraps a [`Transport`] with bounded retries.
///
/// At most `max_retries + 1` attempts are made and the whole call never runs
/// longer than `timeout * (max_retries + 1)`: each attempt gets the smaller of
/// `timeout` and the remaining budget, and there is no sleep between attempts.
#[derive(Debug, Clone)]
pub struct RetryingClient<T> {
    pub transport: T,
    pub timeout: Duration,
    pub max_retries: u32,
}

impl<T: Transport> RetryingClient<T> {
    pub fn new(transport: T, timeout: Duration, max_retries: u32) -> Self {
        Self { transport, timeout, max_retries }
    }
}

impl<T: Transport> GeneratorClient for RetryingClient<T> {
    fn identity(&self) -> String {
        self.transport.identity()
    }

    fn generate(&self, meta: &MetaPrompt) -> Result<String, ClientError> {
        let budget = self.timeout * (self.max_retries + 1);
        let start = Instant::now();
        let mut attempts = 0;
        loop {
            let remaining = budget.saturating_sub(start.elapsed());
            if remaining.is_zero() {
                return Err(ClientError::RetriesExhausted { attempts, last: Box::new(ClientError::Timeout) });
            }
            attempts += 1;
            match self.transport.attempt(meta, self.timeout.min(remaining)) {
                Ok(text) => return Ok(text),
                Err(e) if e.is_retryable() && attempts <= self.max_retries => continue,
                Err(e) if e.is_retryable() => {
                    return Err(ClientError::RetriesExhausted { attempts, last: Box::new(e) })
                }
                Err(e) => return Err(e),
            }
        }
    }
}

/// OpenAI-style chat-completions endpoint: `POST {url}` with `{model, messages}`.
pub struct HttpTransport {
    url: String,
    model: String,
    api_key: String,
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new(url: impl Into<String>, model: impl Into<String>, api_key: impl Into<String>) -> Result<Self, ClientError> {
        let client = reqwest::blocking::Client::builder()
            .build()
            .map_err(|e| ClientError::Network(e.to_string()))?;
        Ok(Self { url: url.into(), model: model.into(), api_key: api_key.into(), client })
    }

    /// Reads the API key from `PAFT_API_KEY`.
    pub fn from_env(url: impl Into<String>, model: impl Into<String>) -> Result<Self, ClientError> {
        let key = std::env::var(API_KEY_ENV).map_err(|_| ClientError::MissingApiKey)?;
        Self::new(url, model, key)
    }

    pub fn request_body(&self, meta: &MetaPrompt) -> serde_json::Value {
        request_body(&self.model, meta)
    }
}

pub(crate) fn request_body(model: &str, meta: &MetaPrompt) -> serde_json::Value {
    json!({
        "model": model,
        "messages": [{ "role": "user", "content": meta.text }],
    })
}

pub(crate) fn extract_content(v: &serde_json::Value) -> Result<String, ClientError> {
    v.pointer("/choices/0/message/content")
        .and_then(|c| c.as_str())
        .map(str::to_owned)
        .ok_or_else(|| ClientError::BadResponse("missing choices[0].message.content".into()))
}

impl Transport for HttpTransport {
    fn identity(&self) -> String {
        format!("{}@{}", self.model, self.url)
    }

    fn attempt(&self, meta: &MetaPrompt, timeout: Duration) -> Result<String, ClientError> {
        NETWORK_ATTEMPTS.fetch_add(1, Ordering::SeqCst);
        if std::env::var_os(FORBID_NETWORK_ENV).is_some() {
            panic!("network access attempted while {FORBID_NETWORK_ENV} is set");
        }
        let resp = self
            .client
            .post(&self.url)
            .bearer_auth(&self.api_key)
            .timeout(timeout)
            .json(&self.request_body(meta))
            .send()
            .map_err(|e| if e.is_timeout() { ClientError::Timeout } else { ClientError::Network(e.to_string()) })?;
        let status = resp.status();
        let text = resp.text().map_err(|e| {
            if e.is_timeout() {
                ClientError::Timeout
            } else {
                ClientError::Network(e.to_string())
            }
        })?;
        if !status.is_success() {
            return Err(ClientError::Http { status: status.as_u16(), body: text });
        }
        let v: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| ClientError::BadResponse(e.to_string()))?;
        extract_content(&v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forge::{compose_meta_prompt, MetaStrategy};
    use std::sync::atomic::AtomicU32;
    use std::sync::Mutex;

    struct Scripted {
        calls: AtomicU32,
        timeouts: Mutex<Vec<Duration>>,
        fail_first: u32,
        error: fn() -> ClientError,
    }

    impl Scripted {
        fn new(fail_first: u32, error: fn() -> ClientError) -> Self {
            Self { calls: AtomicU32::new(0), timeouts: Mutex::new(vec![]), fail_first, error }
        }
    }

    impl Transport for Scripted {
        fn identity(&self) -> String {
            "scripted".into()
        }
        fn attempt(&self, _meta: &MetaPrompt, timeout: Duration) -> Result<String, ClientError> {
            self.timeouts.lock().unwrap().push(timeout);
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            if n < self.fail_first {
                Err((self.error)())
            } else {
                Ok("1. Solve {q}".into())
            }
        }
    }

    fn meta() -> MetaPrompt {
        compose_meta_prompt("math problem", MetaStrategy::ZeroShot, 2, None).unwrap()
    }

    #[test]
    fn attempts_bounded_by_retries_plus_one() {
        for r in 0..5 {
            let c = RetryingClient::new(Scripted::new(u32::MAX, || ClientError::Timeout), Duration::from_secs(1), r);
            let err = c.generate(&meta()).unwrap_err();
            assert!(matches!(err, ClientError::RetriesExhausted { attempts, .. } if attempts == r + 1));
            assert_eq!(c.transport.calls.load(Ordering::SeqCst), r + 1);
        }
    }

    #[test]
    fn recovers_after_transient_failures() {
        let c = RetryingClient::new(
            Scripted::new(2, || ClientError::Http { status: 503, body: String::new() }),
            Duration::from_millis(500),
            3,
        );
        assert_eq!(c.generate(&meta()).unwrap(), "1. Solve {q}");
        assert_eq!(c.transport.calls.load(Ordering::SeqCst), 3);
        assert!(c.transport.timeouts.lock().unwrap().iter().all(|t| *t <= Duration::from_millis(500)));
    }

    #[test]
    fn client_errors_are_not_retried() {
        let c = RetryingClient::new(
            Scripted::new(u32::MAX, || ClientError::Http { status: 401, body: "nope".into() }),
            Duration::from_secs(1),
            4,
        );
        assert!(matches!(c.generate(&meta()), Err(ClientError::Http { status: 401, .. })));
        assert_eq!(c.transport.calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn wire_format() {
        let body = request_body("gpt-x", &meta());
        assert_eq!(body["model"], "gpt-x");
        assert_eq!(body["messages"][0]["role"], "user");
        assert!(body["messages"][0]["content"].as_str().unwrap().starts_with("Please write 2"));
        let resp = json!({"choices": [{"message": {"role": "assistant", "content": "1. a {q}"}}]});
        assert_eq!(extract_content(&resp).unwrap(), "1. a {q}");
        assert!(extract_content(&json!({"choices": []})).is_err());
    }

    #[test]
    fn unreachable_endpoint_fails_within_budget() {
        // Port 9 on localhost: connection refused, retried, then exhausted.
        let t = HttpTransport::new("http://127.0.0.1:9/v1/chat/completions", "m", "k").unwrap();
        let c = RetryingClient::new(t, Duration::from_millis(300), 1);
        let start = Instant::now();
        assert!(c.generate(&meta()).is_err());
        assert!(start.elapsed() < Duration::from_millis(600) + Duration::from_millis(200));
    }
}
