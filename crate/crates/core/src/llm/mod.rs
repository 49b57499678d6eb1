//! LLM access: backends, prompt templates, transcripts and response parsing.

mod http;
mod scripted;
pub mod templates;

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use http::{HttpBackend, HttpConfig, API_KEY_ENV, BASE_URL_ENV, CONFIG_ENV, MODEL_ENV};
pub use scripted::{ScriptEntry, ScriptedBackend};
pub use templates::{PromptRegistry, PromptTemplate, ResponseSchema};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LlmError {
    #[error("unknown prompt template '{0}'")]
    UnknownTemplate(String),
    #[error("template '{template}' needs slot '{slot}'")]
    MissingSlot { template: String, slot: String },
    #[error("no scripted response for template '{template}' (prompt starts: {excerpt:?})")]
    Unmatched { template: String, excerpt: String },
    #[error("LLM transport error: {0}")]
    Transport(String),
    #[error("LLM settings: {0}")]
    Config(String),
}

impl LlmError {
    fn retryable(&self) -> bool {
        matches!(self, LlmError::Transport(_))
    }
}

pub trait LlmBackend: Send + Sync {
    fn complete(&self, template: &str, prompt: &str) -> Result<String, LlmError>;
    fn name(&self) -> String;
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub template: String,
    pub prompt: String,
    pub response: String,
}

/// Shared handle: backend, prompt registry and the run transcript.
#[derive(Clone)]
pub struct LlmHandle {
    backend: Arc<dyn LlmBackend>,
    pub registry: PromptRegistry,
    pub max_retries: u32,
    pub retry_delay: Duration,
    transcript: Arc<Mutex<Vec<TranscriptRecord>>>,
}

impl LlmHandle {
    pub fn new(backend: Arc<dyn LlmBackend>) -> Self {
        LlmHandle {
            backend,
            registry: PromptRegistry::builtin(),
            max_retries: 2,
            retry_delay: Duration::from_millis(500),
            transcript: Arc::new(Mutex::new(Vec::new())),
        }
    }

    pub fn scripted(entries: Vec<ScriptEntry>) -> Self {
        Self::new(Arc::new(ScriptedBackend::new(entries)))
    }

    pub fn http(config: HttpConfig) -> Result<Self, LlmError> {
        Ok(Self::new(Arc::new(HttpBackend::new(config)?)))
    }

    pub fn backend_name(&self) -> String {
        self.backend.name()
    }

    pub fn render(&self, template: &str, slots: &BTreeMap<String, String>) -> Result<String, LlmError> {
        self.registry.get(template)?.render(slots)
    }

    /// Renders the template, queries the backend with retries on transport
    /// errors and records the exchange. Responses are returned unvalidated.
    pub fn complete(&self, template: &str, slots: &BTreeMap<String, String>) -> Result<String, LlmError> {
        let prompt = self.render(template, slots)?;
        let mut attempt = 0;
        let started = Instant::now();
        let response = loop {
            match self.backend.complete(template, &prompt) {
                Ok(r) => break r,
                Err(e) if e.retryable() && attempt < self.max_retries => {
                    attempt += 1;
                    log::warn!("{template}: {e}; retry {attempt}/{}", self.max_retries);
                    std::thread::sleep(self.retry_delay);
                }
                Err(e) => return Err(e),
            }
        };
        log::debug!("{template}: answered in {:?}", started.elapsed());
        self.transcript.lock().expect("transcript lock").push(TranscriptRecord {
            template: template.to_string(),
            prompt,
            response: response.clone(),
        });
        Ok(response)
    }

    pub fn transcript(&self) -> Vec<TranscriptRecord> {
        self.transcript.lock().expect("transcript lock").clone()
    }

    pub fn clear_transcript(&self) {
        self.transcript.lock().expect("transcript lock").clear();
    }
}

/// Convenience for building slot maps.
pub fn slots<const N: usize>(kv: [(&str, String); N]) -> BTreeMap<String, String> {
    kv.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn is_word(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-'
}

fn contains_word(hay: &str, needle: &str) -> bool {
    let mut from = 0;
    while let Some(i) = hay[from..].find(needle) {
        let start = from + i;
        let end = start + needle.len();
        let before = hay[..start].chars().next_back();
        let after = hay[end..].chars().next();
        if !before.is_some_and(is_word) && !after.is_some_and(is_word) {
            return true;
        }
        from = start + needle.len().max(1);
    }
    false
}

/// Exact case-insensitive match first, then a unique whole-word match.
pub fn parse_choice(response: &str, allowed: &[String]) -> Option<String> {
    let cleaned = response
        .trim()
        .trim_matches(|c: char| c.is_ascii_punctuation() && c != '_' && c != '-')
        .trim()
        .to_lowercase();
    if let Some(a) = allowed.iter().find(|a| a.to_lowercase() == cleaned) {
        return Some(a.clone());
    }
    let lower = response.to_lowercase();
    let hits: Vec<&String> = allowed
        .iter()
        .filter(|a| !a.is_empty() && contains_word(&lower, &a.to_lowercase()))
        .collect();
    match hits.as_slice() {
        [one] => Some((*one).clone()),
        _ => None,
    }
}

/// Splits a comma/newline separated answer into lowercase names.
pub fn parse_list(response: &str) -> Vec<String> {
    response
        .split([',', '\n', ';'])
        .flat_map(|s| s.split(" and "))
        .map(|s| {
            s.trim()
                .trim_start_matches(['-', '*'])
                .trim_matches(|c: char| c.is_ascii_punctuation() && c != '_' && c != '-')
                .trim()
                .to_lowercase()
        })
        .filter(|s| !s.is_empty())
        .collect()
}

pub fn parse_yes_no(response: &str) -> Option<bool> {
    let first = response
        .trim()
        .split(|c: char| !c.is_alphanumeric())
        .find(|w| !w.is_empty())?
        .to_lowercase();
    match first.as_str() {
        "yes" | "y" | "true" => Some(true),
        "no" | "n" | "false" => Some(false),
        _ => None,
    }
}

/// Takes the text after the last `GOAL:` marker when present, else the
/// whole answer; strips code fences and a trailing period.
pub fn extract_goal(response: &str) -> String {
    let body = match response.rfind("GOAL:") {
        Some(i) => response[i + 5..].lines().next().unwrap_or(""),
        None => response,
    };
    body.trim()
        .trim_matches('`')
        .trim()
        .trim_end_matches('.')
        .trim()
        .to_string()
}
