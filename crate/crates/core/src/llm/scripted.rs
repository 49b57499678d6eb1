use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{LlmBackend, LlmError};

/// A canned response selected by template id and prompt substrings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptEntry {
    pub template: String,
    #[serde(default)]
    pub contains: Vec<String>,
    pub response: String,
    #[serde(default = "default_once")]
    pub consume_once: bool,
}

fn default_once() -> bool {
    true
}

impl ScriptEntry {
    pub fn new(template: &str, response: &str) -> Self {
        ScriptEntry {
            template: template.to_string(),
            contains: Vec::new(),
            response: response.to_string(),
            consume_once: true,
        }
    }

    pub fn containing(mut self, needle: &str) -> Self {
        self.contains.push(needle.to_string());
        self
    }

    pub fn reusable(mut self) -> Self {
        self.consume_once = false;
        self
    }

    fn matches(&self, template: &str, prompt: &str) -> bool {
        self.template == template && self.contains.iter().all(|c| prompt.contains(c.as_str()))
    }
}

/// Replays entries in order; the first unused matching entry wins. A request
/// nothing matches is an error, never a default answer.
#[derive(Debug)]
pub struct ScriptedBackend {
    entries: Mutex<Vec<(ScriptEntry, bool)>>,
}

impl ScriptedBackend {
    pub fn new(entries: Vec<ScriptEntry>) -> Self {
        ScriptedBackend {
            entries: Mutex::new(entries.into_iter().map(|e| (e, false)).collect()),
        }
    }

    /// Entries that were never used.
    pub fn unused(&self) -> Vec<ScriptEntry> {
        self.entries
            .lock()
            .expect("script lock")
            .iter()
            .filter(|(_, used)| !used)
            .map(|(e, _)| e.clone())
            .collect()
    }
}

impl LlmBackend for ScriptedBackend {
    fn complete(&self, template: &str, prompt: &str) -> Result<String, LlmError> {
        let mut entries = self.entries.lock().expect("script lock");
        let hit = entries
            .iter_mut()
            .find(|(e, used)| !(*used && e.consume_once) && e.matches(template, prompt));
        match hit {
            Some((e, used)) => {
                *used = true;
                Ok(e.response.clone())
            }
            None => {
                let excerpt: String = prompt.chars().take(160).collect();
                Err(LlmError::Unmatched {
                    template: template.to_string(),
                    excerpt,
                })
            }
        }
    }

    fn name(&self) -> String {
        "scripted".into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn consume_once_and_fail_loudly() {
        let b = ScriptedBackend::new(vec![ScriptEntry::new("goal", "GOAL: on a b")]);
        assert_eq!(b.complete("goal", "x").unwrap(), "GOAL: on a b");
        assert!(matches!(b.complete("goal", "x"), Err(LlmError::Unmatched { .. })));
    }

    #[test]
    fn substring_predicates_select_entries() {
        let b = ScriptedBackend::new(vec![
            ScriptEntry::new("suggest-direct", "bowl").containing("glass"),
            ScriptEntry::new("suggest-direct", "milk").containing("water").reusable(),
        ]);
        assert_eq!(b.complete("suggest-direct", "missing water").unwrap(), "milk");
        assert_eq!(b.complete("suggest-direct", "missing water").unwrap(), "milk");
        assert_eq!(b.complete("suggest-direct", "missing glass").unwrap(), "bowl");
        assert!(b.unused().is_empty());
    }
}
