//! Chat-completion plumbing: a live HTTP client, a deterministic replay
//! endpoint for offline runs, and a recorder that turns live sessions into
//! replay files. Completion text passes through every layer byte-exact;
//! parsing and scoring happen elsewhere.

mod http;
mod replay;

pub use http::HttpEndpoint;
pub use replay::{MissMode, RecordingEndpoint, ReplayEndpoint, ReplayLoadError};

use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Environment variable holding the API credential. Credentials never
/// appear in argv, config files, or logs.
pub const API_KEY_VAR: &str = "SLICEFLOOR_API_KEY";

/// One prompt asking for `k` sampled completions.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletionRequest {
    pub model: String,
    pub system: String,
    pub user: String,
    /// Samples per prompt; at least 1.
    pub k: u32,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout: Duration,
}

/// Delivery status of one requested sample slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleStatus {
    Received,
    Missing,
}

/// Up to `k` raw completion texts plus per-slot delivery status.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompletionBatch {
    /// Byte-exact texts as produced; never trimmed or normalized here.
    pub raw_texts: Vec<String>,
    /// One entry per requested slot (length = request `k`).
    pub sample_status: Vec<SampleStatus>,
    pub latency: Duration,
}

impl CompletionBatch {
    /// Builds a batch from however many texts arrived for a k-slot request.
    pub(crate) fn from_texts(mut texts: Vec<String>, k: u32, latency: Duration) -> CompletionBatch {
        texts.truncate(k as usize);
        let mut sample_status = vec![SampleStatus::Received; texts.len()];
        sample_status.resize(k as usize, SampleStatus::Missing);
        CompletionBatch {
            raw_texts: texts,
            sample_status,
            latency,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LlmError {
    #[error("authentication failed: {detail} (samples {samples:?})")]
    Auth { detail: String, samples: Vec<u32> },
    #[error("transport failure after {attempts} attempts: {detail} (samples {samples:?})")]
    Transport {
        attempts: u32,
        detail: String,
        samples: Vec<u32>,
    },
    #[error("protocol violation: {detail} (samples {samples:?})")]
    Protocol { detail: String, samples: Vec<u32> },
    #[error("no recorded outputs for system_hash {system_hash} user_hash {user_hash}")]
    ReplayMiss {
        system_hash: String,
        user_hash: String,
    },
}

pub(crate) fn all_samples(k: u32) -> Vec<u32> {
    (0..k).collect()
}

/// Anything that can answer completion requests. Implementations are
/// shareable across threads; per-request state stays local.
pub trait Endpoint: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionBatch, LlmError>;
}

/// SHA-256 hex digest used to key replay entries by prompt content.
pub fn content_hash(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

/// Endpoint settings read from a TOML file; the credential itself comes
/// from the environment, never from this file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub endpoint_url: String,
    pub model: String,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
}

fn default_timeout_ms() -> u64 {
    60_000
}
fn default_max_retries() -> u32 {
    3
}
fn default_concurrency() -> usize {
    4
}
fn default_backoff_ms() -> u64 {
    250
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read endpoint config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse endpoint config {path}: {source}")]
    Parse {
        path: String,
        source: toml::de::Error,
    },
}

impl EndpointConfig {
    pub fn from_toml_str(text: &str) -> Result<EndpointConfig, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn from_toml_path(path: &std::path::Path) -> Result<EndpointConfig, ConfigError> {
        let display = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: display.clone(),
            source,
        })?;
        EndpointConfig::from_toml_str(&text).map_err(|source| ConfigError::Parse {
            path: display,
            source,
        })
    }
}
