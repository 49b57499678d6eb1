use std::path::Path;
use std::time::Duration;

use serde::Deserialize;
use serde_json::{json, Value};

use super::{LlmBackend, LlmError};

pub const BASE_URL_ENV: &str = "AFFPLAN_LLM_BASE_URL";
pub const API_KEY_ENV: &str = "AFFPLAN_LLM_API_KEY";
pub const MODEL_ENV: &str = "AFFPLAN_LLM_MODEL";
/// Path of an optional JSON settings file.
pub const CONFIG_ENV: &str = "AFFPLAN_LLM_CONFIG";

/// OpenAI-compatible chat-completions endpoint.
#[derive(Clone, Debug)]
pub struct HttpConfig {
    pub base_url: String,
    pub api_key: Option<String>,
    pub model: String,
    pub temperature: f64,
    pub timeout: Duration,
}

/// Settings file contents; every field is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    base_url: Option<String>,
    api_key: Option<String>,
    model: Option<String>,
    temperature: Option<f64>,
    timeout_secs: Option<u64>,
}

impl Default for HttpConfig {
    fn default() -> Self {
        HttpConfig {
            base_url: "https://api.openai.com/v1".into(),
            api_key: None,
            model: "gpt-4-0613".into(),
            temperature: 0.0,
            timeout: Duration::from_secs(120),
        }
    }
}

impl HttpConfig {
    /// Reads endpoint, key and model from the environment.
    pub fn from_env() -> Self {
        let mut c = HttpConfig::default();
        c.apply_env();
        c
    }

    /// Defaults, then the settings file (`path`, else `AFFPLAN_LLM_CONFIG`
    /// if set), then environment variables.
    pub fn load(path: Option<&Path>) -> Result<Self, LlmError> {
        let mut c = HttpConfig::default();
        let from_env = std::env::var_os(CONFIG_ENV).map(std::path::PathBuf::from);
        if let Some(path) = path.map(Path::to_path_buf).or(from_env) {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| LlmError::Config(format!("{}: {e}", path.display())))?;
            c.apply_file(&text)
                .map_err(|e| LlmError::Config(format!("{}: {e}", path.display())))?;
        }
        c.apply_env();
        Ok(c)
    }

    fn apply_file(&mut self, text: &str) -> Result<(), String> {
        let f: FileConfig = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if let Some(v) = f.base_url {
            self.base_url = v;
        }
        if f.api_key.is_some() {
            self.api_key = f.api_key;
        }
        if let Some(v) = f.model {
            self.model = v;
        }
        if let Some(v) = f.temperature {
            if !(0.0..=2.0).contains(&v) {
                return Err(format!("temperature {v} is outside 0..=2"));
            }
            self.temperature = v;
        }
        if let Some(v) = f.timeout_secs {
            self.timeout = Duration::from_secs(v.max(1));
        }
        Ok(())
    }

    fn apply_env(&mut self) {
        if let Ok(v) = std::env::var(BASE_URL_ENV) {
            self.base_url = v;
        }
        if let Some(key) = std::env::var(API_KEY_ENV).or_else(|_| std::env::var("OPENAI_API_KEY")).ok() {
            self.api_key = Some(key);
        }
        if let Ok(v) = std::env::var(MODEL_ENV) {
            self.model = v;
        }
    }
}

pub struct HttpBackend {
    config: HttpConfig,
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Result<Self, LlmError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        Ok(HttpBackend { config, client })
    }
}

impl LlmBackend for HttpBackend {
    fn complete(&self, _template: &str, prompt: &str) -> Result<String, LlmError> {
        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let body = json!({
            "model": self.config.model,
            "temperature": self.config.temperature,
            "messages": [{"role": "user", "content": prompt}],
        });
        let mut req = self.client.post(&url).json(&body);
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| LlmError::Transport(e.to_string()))?;
        let status = resp.status();
        let value: Value = resp.json().map_err(|e| LlmError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(LlmError::Transport(format!("HTTP {status}: {value}")));
        }
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| LlmError::Transport(format!("response without content: {value}")))
    }

    fn name(&self) -> String {
        format!("http:{}", self.config.model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_settings_override_defaults() {
        let mut c = HttpConfig::default();
        c.apply_file(r#"{"base_url": "http://localhost:8080/v1", "model": "local", "timeout_secs": 5}"#)
            .unwrap();
        assert_eq!(c.base_url, "http://localhost:8080/v1");
        assert_eq!(c.model, "local");
        assert_eq!(c.timeout, Duration::from_secs(5));
        assert_eq!(c.temperature, 0.0);
    }

    #[test]
    fn bad_settings_are_rejected() {
        let mut c = HttpConfig::default();
        assert!(c.apply_file(r#"{"modle": "x"}"#).is_err());
        assert!(c.apply_file(r#"{"temperature": 7}"#).is_err());
        assert!(c.apply_file("not json").is_err());
    }
}
