//! Offline endpoints: `ReplayEndpoint` serves recorded completions keyed by
//! prompt hashes, and `RecordingEndpoint` tees live responses into a file
//! that `ReplayEndpoint` can load later. Together they make a whole sweep
//! reproducible byte-for-byte without network access.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{content_hash, CompletionBatch, CompletionRequest, Endpoint, LlmError};

/// What a replay lookup does when no recorded entry matches the prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MissMode {
    /// Surface the miss as an error (the caller decides how to score it).
    Error,
    /// Serve an empty batch: every sample slot reports `Missing`.
    EmptyBatch,
}

#[derive(Debug, Error)]
pub enum ReplayLoadError {
    #[error("cannot read replay file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("replay file line {line} is not a recognized record: {detail}")]
    MalformedLine { line: usize, detail: String },
}

/// Canonical replay record: prompts identified by SHA-256 hex digests.
#[derive(Serialize, Deserialize)]
struct HashedLine {
    system_hash: String,
    user_hash: String,
    outputs: Vec<String>,
}

/// Raw sweep-log record; accepted so a raw log doubles as a replay source.
/// Only the prompt text and outputs matter here — other fields are ignored.
#[derive(Deserialize)]
struct PromptLine {
    prompt: String,
    outputs: Vec<String>,
}

/// Serves recorded completions by content hash. Lookup tries the exact
/// (system, user) pair first, then falls back to the user prompt alone so
/// raw logs — which record only the user prompt — stay usable.
pub struct ReplayEndpoint {
    by_pair: HashMap<(String, String), Vec<String>>,
    by_user: HashMap<String, Vec<String>>,
    miss_mode: MissMode,
}

impl ReplayEndpoint {
    /// Loads a JSONL replay file. Each line is either a hashed record
    /// (`system_hash`/`user_hash`/`outputs`) or a raw sweep-log record
    /// (`prompt`/`outputs`). When the same prompt appears on several lines,
    /// the last line wins.
    pub fn from_file(path: &Path, miss_mode: MissMode) -> Result<ReplayEndpoint, ReplayLoadError> {
        let display = path.display().to_string();
        let file = std::fs::File::open(path).map_err(|source| ReplayLoadError::Io {
            path: display,
            source,
        })?;
        let mut by_pair = HashMap::new();
        let mut by_user = HashMap::new();
        for (index, line) in std::io::BufReader::new(file).lines().enumerate() {
            let line_no = index + 1;
            let text = line.map_err(|source| ReplayLoadError::MalformedLine {
                line: line_no,
                detail: source.to_string(),
            })?;
            if text.trim().is_empty() {
                continue;
            }
            if let Ok(rec) = serde_json::from_str::<HashedLine>(&text) {
                by_user.insert(rec.user_hash.clone(), rec.outputs.clone());
                by_pair.insert((rec.system_hash, rec.user_hash), rec.outputs);
            } else if let Ok(rec) = serde_json::from_str::<PromptLine>(&text) {
                by_user.insert(content_hash(&rec.prompt), rec.outputs);
            } else {
                return Err(ReplayLoadError::MalformedLine {
                    line: line_no,
                    detail: "expected system_hash/user_hash/outputs or prompt/outputs".into(),
                });
            }
        }
        Ok(ReplayEndpoint {
            by_pair,
            by_user,
            miss_mode,
        })
    }

    /// Builds a replay table directly from (system, user, outputs) triples,
    /// hashing the prompt texts the same way the recorder does.
    pub fn from_entries<S, U>(
        entries: impl IntoIterator<Item = (S, U, Vec<String>)>,
        miss_mode: MissMode,
    ) -> ReplayEndpoint
    where
        S: AsRef<str>,
        U: AsRef<str>,
    {
        let mut by_pair = HashMap::new();
        let mut by_user = HashMap::new();
        for (system, user, outputs) in entries {
            let system_hash = content_hash(system.as_ref());
            let user_hash = content_hash(user.as_ref());
            by_user.insert(user_hash.clone(), outputs.clone());
            by_pair.insert((system_hash, user_hash), outputs);
        }
        ReplayEndpoint {
            by_pair,
            by_user,
            miss_mode,
        }
    }

    pub fn len(&self) -> usize {
        self.by_user.len().max(self.by_pair.len())
    }

    pub fn is_empty(&self) -> bool {
        self.by_pair.is_empty() && self.by_user.is_empty()
    }
}

impl Endpoint for ReplayEndpoint {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionBatch, LlmError> {
        let system_hash = content_hash(&request.system);
        let user_hash = content_hash(&request.user);
        let found = self
            .by_pair
            .get(&(system_hash.clone(), user_hash.clone()))
            .or_else(|| self.by_user.get(&user_hash));
        match found {
            Some(outputs) => Ok(CompletionBatch::from_texts(
                outputs.clone(),
                request.k,
                Duration::ZERO,
            )),
            None => match self.miss_mode {
                MissMode::Error => Err(LlmError::ReplayMiss {
                    system_hash,
                    user_hash,
                }),
                MissMode::EmptyBatch => Ok(CompletionBatch::from_texts(
                    Vec::new(),
                    request.k,
                    Duration::ZERO,
                )),
            },
        }
    }
}

/// Wraps another endpoint and appends one hashed JSONL record per
/// successful completion, producing a file `ReplayEndpoint` can load.
pub struct RecordingEndpoint<E: Endpoint> {
    inner: E,
    writer: Mutex<Box<dyn Write + Send>>,
}

impl<E: Endpoint> RecordingEndpoint<E> {
    pub fn new(inner: E, writer: Box<dyn Write + Send>) -> RecordingEndpoint<E> {
        RecordingEndpoint {
            inner,
            writer: Mutex::new(writer),
        }
    }

    /// Flushes and hands back the sink (useful for in-memory buffers).
    pub fn into_writer(self) -> Box<dyn Write + Send> {
        let mut writer = self.writer.into_inner().expect("recorder lock poisoned");
        writer.flush().expect("flush recorded replay lines");
        writer
    }
}

impl<E: Endpoint> Endpoint for RecordingEndpoint<E> {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionBatch, LlmError> {
        let batch = self.inner.complete(request)?;
        let record = HashedLine {
            system_hash: content_hash(&request.system),
            user_hash: content_hash(&request.user),
            outputs: batch.raw_texts.clone(),
        };
        let line = serde_json::to_string(&record).expect("replay record serializes");
        let mut writer = self.writer.lock().expect("recorder lock poisoned");
        writer
            .write_all(line.as_bytes())
            .expect("write replay line");
        writer
            .write_all(b"\n")
            .expect("write replay line terminator");
        drop(writer);
        Ok(batch)
    }
}
