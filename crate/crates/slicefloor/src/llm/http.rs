//! Live chat-completions client: JSON over HTTP with bearer auth, bounded
//! exponential-backoff retries on transient failures, and no content
//! rewriting of any kind.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{
    all_samples, CompletionBatch, CompletionRequest, Endpoint, EndpointConfig, LlmError,
    API_KEY_VAR,
};

pub struct HttpEndpoint {
    config: EndpointConfig,
    api_key: String,
    client: reqwest::blocking::Client,
}

#[derive(Serialize)]
struct WireMessage<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: [WireMessage<'a>; 2],
    n: u32,
    temperature: f64,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireContent,
}

#[derive(Deserialize)]
struct WireContent {
    content: String,
}

impl HttpEndpoint {
    /// Builds a client with the credential from `SLICEFLOOR_API_KEY`.
    /// A missing or empty credential fails here, before any socket opens.
    pub fn from_env(config: EndpointConfig) -> Result<HttpEndpoint, LlmError> {
        match std::env::var(API_KEY_VAR) {
            Ok(key) if !key.trim().is_empty() => HttpEndpoint::with_api_key(config, key),
            _ => Err(LlmError::Auth {
                detail: format!("set {API_KEY_VAR} in the environment"),
                samples: Vec::new(),
            }),
        }
    }

    pub fn with_api_key(
        config: EndpointConfig,
        api_key: impl Into<String>,
    ) -> Result<HttpEndpoint, LlmError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .map_err(|e| LlmError::Transport {
                attempts: 0,
                detail: format!("cannot build HTTP client: {e}"),
                samples: Vec::new(),
            })?;
        Ok(HttpEndpoint {
            config,
            api_key: api_key.into(),
            client,
        })
    }

    fn attempt(&self, request: &CompletionRequest) -> Result<Vec<String>, AttemptError> {
        let body = WireRequest {
            model: &request.model,
            messages: [
                WireMessage {
                    role: "system",
                    content: &request.system,
                },
                WireMessage {
                    role: "user",
                    content: &request.user,
                },
            ],
            n: request.k,
            temperature: request.temperature,
            max_tokens: request.max_tokens,
        };
        let response = self
            .client
            .post(&self.config.endpoint_url)
            .bearer_auth(&self.api_key)
            .json(&body)
            .timeout(request.timeout)
            .send()
            .map_err(|e| AttemptError::Retryable(format!("request failed: {e}")))?;

        let status = response.status();
        if status.as_u16() == 401 || status.as_u16() == 403 {
            return Err(AttemptError::Auth(format!(
                "endpoint rejected credential ({status})"
            )));
        }
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(AttemptError::Retryable(format!("status {status}")));
        }
        if !status.is_success() {
            return Err(AttemptError::Protocol(format!(
                "unexpected status {status}"
            )));
        }
        let parsed: WireResponse = response
            .json()
            .map_err(|e| AttemptError::Protocol(format!("malformed response body: {e}")))?;
        Ok(parsed
            .choices
            .into_iter()
            .map(|c| c.message.content)
            .collect())
    }
}

enum AttemptError {
    Retryable(String),
    Auth(String),
    Protocol(String),
}

impl Endpoint for HttpEndpoint {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionBatch, LlmError> {
        let started = Instant::now();
        let attempts = self.config.max_retries + 1;
        let mut last_detail = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                let backoff = self
                    .config
                    .backoff_ms
                    .saturating_mul(1 << (attempt - 1).min(16));
                std::thread::sleep(Duration::from_millis(backoff.min(10_000)));
            }
            match self.attempt(request) {
                Ok(texts) => {
                    return Ok(CompletionBatch::from_texts(
                        texts,
                        request.k,
                        started.elapsed(),
                    ))
                }
                Err(AttemptError::Auth(detail)) => {
                    return Err(LlmError::Auth {
                        detail,
                        samples: all_samples(request.k),
                    })
                }
                Err(AttemptError::Protocol(detail)) => {
                    return Err(LlmError::Protocol {
                        detail,
                        samples: all_samples(request.k),
                    })
                }
                Err(AttemptError::Retryable(detail)) => last_detail = detail,
            }
        }
        Err(LlmError::Transport {
            attempts,
            detail: last_detail,
            samples: all_samples(request.k),
        })
    }
}
