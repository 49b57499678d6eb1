use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::formula::{is_variable, Atom, Formula};
use super::reader::{formula_from_sexpr, typed_list};
use super::sexpr;
use super::PddlError;

/// Variable standing for the acting agent in capability definitions.
pub const AGENT_VAR: &str = "?agent";

/// Built-in equality, only usable inside capability preconditions.
pub const EQUALITY: &str = "=";

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TypedParam {
    pub name: String,
    pub ty: String,
}

impl TypedParam {
    pub fn new(name: &str, ty: &str) -> Self {
        TypedParam {
            name: name.to_string(),
            ty: ty.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateDecl {
    pub name: String,
    pub params: Vec<TypedParam>,
}

impl PredicateDecl {
    pub fn arity(&self) -> usize {
        self.params.len()
    }

    pub fn param_types(&self) -> impl Iterator<Item = &str> {
        self.params.iter().map(|p| p.ty.as_str())
    }
}

/// Agent-level action definition; the agent parameter is added when the
/// domain is generated.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Capability {
    pub name: String,
    pub params: Vec<TypedParam>,
    pub precondition: Formula,
    pub add: Vec<Atom>,
    pub del: Vec<Atom>,
    pub description: String,
}

impl Capability {
    /// Fills the description template with a ground argument list (agent first).
    pub fn describe(&self, args: &[String]) -> String {
        let mut text = self.description.clone();
        if let Some(agent) = args.first() {
            text = text.replace("{agent}", agent);
        }
        for (p, v) in self.params.iter().zip(args.iter().skip(1)) {
            text = text.replace(&format!("{{{}}}", p.name.trim_start_matches('?')), v);
        }
        text
    }
}

/// Predicates, hand constants and capabilities loaded from a capability file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapabilityLibrary {
    pub predicates: Vec<PredicateDecl>,
    pub aliases: BTreeMap<String, String>,
    pub hands: Vec<String>,
    pub capabilities: Vec<Capability>,
}

impl CapabilityLibrary {
    pub fn builtin() -> Self {
        Self::parse(crate::data::CAPABILITIES).expect("builtin capability file is valid")
    }

    pub fn predicate(&self, name: &str) -> Option<&PredicateDecl> {
        self.predicates.iter().find(|p| p.name == name)
    }

    pub fn capability(&self, name: &str) -> Option<&Capability> {
        self.capabilities.iter().find(|c| c.name == name)
    }

    pub fn parse(text: &str) -> Result<Self, PddlError> {
        let mut lib = CapabilityLibrary {
            predicates: Vec::new(),
            aliases: BTreeMap::new(),
            hands: Vec::new(),
            capabilities: Vec::new(),
        };
        let mut current: Option<(usize, Capability)> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (kw, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            let rest = rest.trim();
            let err = |message: String| PddlError::Parse {
                line: line_no,
                message,
            };
            if let Some((_, cap)) = current.as_mut() {
                match kw {
                    "params" => {
                        let toks = symbols(rest);
                        cap.params = typed_list(&toks).map_err(err)?;
                    }
                    "pre" => cap.precondition = parse_formula_text(rest).map_err(err)?,
                    "add" => cap.add = parse_atoms(rest).map_err(err)?,
                    "del" => cap.del = parse_atoms(rest).map_err(err)?,
                    "text" => cap.description = rest.to_string(),
                    "end" => {
                        let (_, cap) = current.take().expect("inside capability block");
                        lib.capabilities.push(cap);
                    }
                    other => return Err(err(format!("unexpected '{other}' inside capability"))),
                }
                continue;
            }
            match kw {
                "predicate" => {
                    let toks = symbols(rest);
                    let (name, params) = toks
                        .split_first()
                        .ok_or_else(|| err("predicate needs a name".into()))?;
                    lib.predicates.push(PredicateDecl {
                        name: name.clone(),
                        params: typed_list(params).map_err(err)?,
                    });
                }
                "alias" => {
                    let toks = symbols(rest);
                    if toks.len() != 2 {
                        return Err(err("alias needs '<spelling> <predicate>'".into()));
                    }
                    lib.aliases.insert(toks[0].clone(), toks[1].clone());
                }
                "hands" => lib.hands = symbols(rest),
                "capability" => {
                    if rest.is_empty() {
                        return Err(err("capability needs a name".into()));
                    }
                    current = Some((
                        line_no,
                        Capability {
                            name: rest.to_string(),
                            params: Vec::new(),
                            precondition: Formula::truth(),
                            add: Vec::new(),
                            del: Vec::new(),
                            description: String::new(),
                        },
                    ));
                }
                other => return Err(err(format!("unknown keyword '{other}'"))),
            }
        }
        if let Some((line, cap)) = current {
            return Err(PddlError::Parse {
                line,
                message: format!("capability '{}' is missing 'end'", cap.name),
            });
        }
        lib.validate()?;
        Ok(lib)
    }

    /// Variables must be declared parameters; every predicate must be declared.
    pub fn validate(&self) -> Result<(), PddlError> {
        let mut names = BTreeSet::new();
        for p in &self.predicates {
            if !names.insert(p.name.as_str()) {
                return Err(PddlError::Invalid(format!("predicate '{}' declared twice", p.name)));
            }
        }
        for (alias, target) in &self.aliases {
            if self.predicate(target).is_none() {
                return Err(PddlError::Invalid(format!(
                    "alias '{alias}' points to unknown predicate '{target}'"
                )));
            }
        }
        for cap in &self.capabilities {
            let mut vars: BTreeSet<&str> = cap.params.iter().map(|p| p.name.as_str()).collect();
            vars.insert(AGENT_VAR);
            let atoms = cap
                .precondition
                .atoms()
                .into_iter()
                .map(|a| (a, true))
                .chain(cap.add.iter().chain(cap.del.iter()).map(|a| (a, false)));
            for (atom, in_pre) in atoms {
                if atom.predicate == EQUALITY && in_pre {
                    if atom.args.len() != 2 {
                        return Err(PddlError::Invalid(format!(
                            "capability '{}': '=' takes two arguments",
                            cap.name
                        )));
                    }
                } else {
                    let decl = self.predicate(&atom.predicate).ok_or_else(|| {
                        PddlError::UnknownPredicate {
                            context: format!("capability '{}'", cap.name),
                            name: atom.predicate.clone(),
                        }
                    })?;
                    if decl.arity() != atom.args.len() {
                        return Err(PddlError::Invalid(format!(
                            "capability '{}': {} expects {} arguments, got {}",
                            cap.name,
                            atom.predicate,
                            decl.arity(),
                            atom.args.len()
                        )));
                    }
                }
                for a in atom.args.iter().filter(|a| is_variable(a)) {
                    if !vars.contains(a.as_str()) {
                        return Err(PddlError::Invalid(format!(
                            "capability '{}': variable {a} is not a parameter",
                            cap.name
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

fn symbols(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_string).collect()
}

fn parse_formula_text(text: &str) -> Result<Formula, String> {
    let parsed = sexpr::parse(text).map_err(|e| e.to_string())?;
    match parsed.forms.as_slice() {
        [one] => formula_from_sexpr(one),
        _ => Err(format!("expected one formula, found {}", parsed.forms.len())),
    }
}

fn parse_atoms(text: &str) -> Result<Vec<Atom>, String> {
    let parsed = sexpr::parse(text).map_err(|e| e.to_string())?;
    parsed
        .forms
        .iter()
        .map(|f| match formula_from_sexpr(f)? {
            Formula::Atom(a) => Ok(a),
            other => Err(format!("expected an atom, found {other}")),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_library_loads() {
        let lib = CapabilityLibrary::builtin();
        for name in ["grasp", "place", "move", "handover", "pour", "open", "wipe"] {
            assert!(lib.capability(name).is_some(), "{name}");
        }
        assert_eq!(lib.hands, vec!["left", "right"]);
        assert_eq!(lib.aliases["in-hand"], "inhand");
        let grasp = lib.capability("grasp").unwrap();
        let args: Vec<String> = ["robot0", "sponge0", "table0", "left"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(
            grasp.describe(&args),
            "robot0 grasps sponge0 from table0 with the left hand"
        );
    }

    #[test]
    fn undeclared_predicate_is_rejected() {
        let text = "predicate on ?o - object ?s - support\n\
                    capability fly\n  params ?l - location\n  add (flying ?agent)\nend\n";
        let err = CapabilityLibrary::parse(text).unwrap_err();
        assert!(matches!(err, PddlError::UnknownPredicate { ref name, .. } if name == "flying"));
    }

    #[test]
    fn undeclared_variable_is_rejected() {
        let text = "predicate at ?a - agent ?l - location\n\
                    capability go\n  params ?l - location\n  add (at ?agent ?m)\nend\n";
        assert!(CapabilityLibrary::parse(text).is_err());
    }

    #[test]
    fn missing_end_is_reported_with_line() {
        let text = "predicate at ?a - agent ?l - location\ncapability go\n  params ?l - location\n";
        assert!(matches!(
            CapabilityLibrary::parse(text),
            Err(PddlError::Parse { line: 2, .. })
        ));
    }
}
