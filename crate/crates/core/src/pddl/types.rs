use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::PddlError;

pub const OBJECT: &str = "object";
pub const LOCATION: &str = "location";
pub const AGENT: &str = "agent";
pub const HAND: &str = "hand";

/// Name of the agent subtype standing for a capability.
pub fn capability_type(capability: &str) -> String {
    format!("{capability}-cap")
}

/// Single-parent type tree plus the multi-membership sets of affordance and
/// capability types (`sub(a)` over object classes, `sub(c)` over agents).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeTree {
    parent: BTreeMap<String, String>,
    roots: BTreeSet<String>,
    members: BTreeMap<String, BTreeSet<String>>,
}

impl Default for TypeTree {
    fn default() -> Self {
        Self::new()
    }
}

impl TypeTree {
    /// `object` and `location` as roots with `agent` below `location`.
    pub fn new() -> Self {
        let mut t = TypeTree {
            parent: BTreeMap::new(),
            roots: [OBJECT, LOCATION].iter().map(|s| s.to_string()).collect(),
            members: BTreeMap::new(),
        };
        t.parent.insert(AGENT.to_string(), LOCATION.to_string());
        t
    }

    pub fn add_root(&mut self, name: &str) {
        if !self.contains(name) {
            self.roots.insert(name.to_string());
        }
    }

    pub fn add_type(&mut self, name: &str, parent: &str) -> Result<(), PddlError> {
        if !self.contains(parent) {
            return Err(PddlError::UnknownType(parent.to_string()));
        }
        if self.roots.contains(name) {
            return Err(PddlError::TypeConflict(format!("'{name}' is a root type")));
        }
        if let Some(p) = self.parent.get(name) {
            if p != parent {
                return Err(PddlError::TypeConflict(format!(
                    "'{name}' already has parent '{p}', cannot also have '{parent}'"
                )));
            }
            return Ok(());
        }
        if self.is_subtype(parent, name) {
            return Err(PddlError::TypeConflict(format!("cycle through '{name}'")));
        }
        self.parent.insert(name.to_string(), parent.to_string());
        Ok(())
    }

    pub fn add_member(&mut self, ty: &str, member: &str) {
        self.members
            .entry(ty.to_string())
            .or_default()
            .insert(member.to_string());
    }

    pub fn ensure_members(&mut self, ty: &str) {
        self.members.entry(ty.to_string()).or_default();
    }

    pub fn contains(&self, name: &str) -> bool {
        self.roots.contains(name) || self.parent.contains_key(name)
    }

    pub fn parent_of(&self, name: &str) -> Option<&str> {
        self.parent.get(name).map(String::as_str)
    }

    pub fn roots(&self) -> &BTreeSet<String> {
        &self.roots
    }

    pub fn types(&self) -> BTreeSet<String> {
        self.roots.iter().chain(self.parent.keys()).cloned().collect()
    }

    /// Declared (child, parent) pairs.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> {
        self.parent.iter().map(|(c, p)| (c.as_str(), p.as_str()))
    }

    pub fn members(&self) -> &BTreeMap<String, BTreeSet<String>> {
        &self.members
    }

    /// Direct subtypes plus declared members.
    pub fn sub(&self, ty: &str) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self
            .parent
            .iter()
            .filter(|(_, p)| p.as_str() == ty)
            .map(|(c, _)| c.clone())
            .collect();
        if let Some(m) = self.members.get(ty) {
            out.extend(m.iter().cloned());
        }
        out
    }

    pub fn is_subtype(&self, ty: &str, of: &str) -> bool {
        let mut cur = ty;
        for _ in 0..=self.parent.len() {
            if cur == of {
                return true;
            }
            match self.parent.get(cur) {
                Some(p) => cur = p,
                None => return false,
            }
        }
        false
    }

    /// Whether an entity declared under `declared` may fill a slot of type `want`.
    pub fn satisfies(&self, declared: &BTreeSet<String>, want: &str) -> bool {
        declared.iter().any(|t| self.is_subtype(t, want))
    }
}
