use std::collections::{BTreeMap, BTreeSet};

use super::LlmError;

pub const GOAL: &str = "goal";
pub const GOAL_CORRECTION: &str = "goal-correction";
pub const PARTIAL_GOAL: &str = "partial-goal";
pub const TOOL_SELECTION: &str = "tool-selection";
pub const AFFORDANCE_RELEVANCE: &str = "affordance-relevance";
pub const SUGGEST_WITH_AFFORDANCE: &str = "suggest-with-affordance";
pub const SUGGEST_DIRECT: &str = "suggest-direct";
pub const OAM_LIST: &str = "oam-list";
pub const OAM_YESNO: &str = "oam-yesno";
pub const BASELINE_PLAN: &str = "baseline-plan";

/// How the caller interprets the response.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResponseSchema {
    FreeText,
    NameFromList,
    YesNo,
    ToolCall,
}

pub fn schema_of(id: &str) -> ResponseSchema {
    match id {
        TOOL_SELECTION => ResponseSchema::ToolCall,
        SUGGEST_WITH_AFFORDANCE | SUGGEST_DIRECT | AFFORDANCE_RELEVANCE | OAM_LIST => {
            ResponseSchema::NameFromList
        }
        OAM_YESNO => ResponseSchema::YesNo,
        _ => ResponseSchema::FreeText,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PromptTemplate {
    pub id: String,
    pub text: String,
}

impl PromptTemplate {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        PromptTemplate {
            id: id.into(),
            text: text.into(),
        }
    }

    /// Names of the `{slot}` placeholders.
    pub fn slots(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut rest = self.text.as_str();
        while let Some(start) = rest.find('{') {
            let after = &rest[start + 1..];
            match after.find('}') {
                Some(end) if is_slot_name(&after[..end]) => {
                    out.insert(after[..end].to_string());
                    rest = &after[end + 1..];
                }
                _ => rest = after,
            }
        }
        out
    }

    /// Every slot must be supplied; unknown slots are rejected too.
    pub fn render(&self, slots: &BTreeMap<String, String>) -> Result<String, LlmError> {
        let wanted = self.slots();
        if let Some(missing) = wanted.iter().find(|s| !slots.contains_key(*s)) {
            return Err(LlmError::MissingSlot {
                template: self.id.clone(),
                slot: missing.clone(),
            });
        }
        if let Some(extra) = slots.keys().find(|s| !wanted.contains(*s)) {
            return Err(LlmError::MissingSlot {
                template: self.id.clone(),
                slot: format!("{extra} (not used by the template)"),
            });
        }
        // single pass so slot values containing braces are left alone
        let mut out = String::with_capacity(self.text.len());
        let mut rest = self.text.as_str();
        while let Some(start) = rest.find('{') {
            out.push_str(&rest[..start]);
            let after = &rest[start + 1..];
            match after.find('}').filter(|&e| is_slot_name(&after[..e])) {
                Some(end) => {
                    out.push_str(&slots[&after[..end]]);
                    rest = &after[end + 1..];
                }
                None => {
                    out.push('{');
                    rest = after;
                }
            }
        }
        out.push_str(rest);
        Ok(out)
    }
}

fn is_slot_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_lowercase() || c == '_')
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PromptRegistry {
    templates: BTreeMap<String, PromptTemplate>,
}

impl Default for PromptRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl PromptRegistry {
    pub fn builtin() -> Self {
        let templates = crate::data::PROMPTS
            .iter()
            .map(|(id, text)| (id.to_string(), PromptTemplate::new(*id, *text)))
            .collect();
        PromptRegistry { templates }
    }

    pub fn get(&self, id: &str) -> Result<&PromptTemplate, LlmError> {
        self.templates
            .get(id)
            .ok_or_else(|| LlmError::UnknownTemplate(id.to_string()))
    }

    pub fn insert(&mut self, t: PromptTemplate) {
        self.templates.insert(t.id.clone(), t);
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.templates.keys().map(String::as_str)
    }

    /// Overrides templates with `<id>.txt` files found in `dir`.
    pub fn load_overrides(&mut self, dir: &std::path::Path) -> std::io::Result<usize> {
        let mut n = 0;
        for entry in std::fs::read_dir(dir)? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("txt") {
                continue;
            }
            if let Some(id) = path.file_stem().and_then(|s| s.to_str()) {
                self.insert(PromptTemplate::new(id, std::fs::read_to_string(&path)?));
                n += 1;
            }
        }
        Ok(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn slots(kv: &[(&str, &str)]) -> BTreeMap<String, String> {
        kv.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn all_ids_are_registered() {
        let r = PromptRegistry::builtin();
        for id in [
            GOAL,
            GOAL_CORRECTION,
            PARTIAL_GOAL,
            TOOL_SELECTION,
            AFFORDANCE_RELEVANCE,
            SUGGEST_WITH_AFFORDANCE,
            SUGGEST_DIRECT,
            OAM_LIST,
            OAM_YESNO,
            BASELINE_PLAN,
        ] {
            assert!(r.get(id).is_ok(), "{id}");
        }
    }

    #[test]
    fn goal_and_partial_goal_share_slots() {
        let r = PromptRegistry::builtin();
        let g = r.get(GOAL).unwrap();
        let p = r.get(PARTIAL_GOAL).unwrap();
        assert_eq!(g.slots(), p.slots());
        assert!(g.slots().contains("domain") && g.slots().contains("problem"));
        assert!(p.text.contains("may be incomplete"));
    }

    #[test]
    fn render_fills_and_checks_slots() {
        let t = PromptTemplate::new("x", "a {one} b {two} {not a slot}");
        let out = t.render(&slots(&[("one", "{two}"), ("two", "2")])).unwrap();
        assert_eq!(out, "a {two} b 2 {not a slot}");
        assert!(matches!(
            t.render(&slots(&[("one", "1")])),
            Err(LlmError::MissingSlot { slot, .. }) if slot == "two"
        ));
    }
}
