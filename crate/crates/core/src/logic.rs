//! Goal validation: NNF/DNF transformation and semantic conflict conditions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pddl::sexpr;
use crate::pddl::{is_variable, Atom, Formula, Literal};

pub const DEFAULT_CONJUNCT_LIMIT: usize = 4096;

pub const TOO_COMPLEX_ID: &str = "goal-too-complex";
pub const TOO_COMPLEX_MESSAGE: &str =
    "The goal is too complex, please simplify it and use fewer alternatives";
pub const UNSATISFIABLE_ID: &str = "unsatisfiable";
pub const UNSATISFIABLE_MESSAGE: &str = "There is a logical contradiction in the goal. \
     Every alternative requires a fact to be both true and false. Please correct your answer";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LogicError {
    #[error("DNF would exceed {limit} conjuncts")]
    Explosion { limit: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Pushes negations down to atoms and removes double negations.
pub fn to_nnf(f: &Formula) -> Formula {
    nnf(f, true)
}

fn nnf(f: &Formula, positive: bool) -> Formula {
    match (f, positive) {
        (Formula::Atom(_), true) => f.clone(),
        (Formula::Atom(_), false) => Formula::not(f.clone()),
        (Formula::Not(c), _) => nnf(c, !positive),
        (Formula::And(cs), true) => Formula::And(cs.iter().map(|c| nnf(c, true)).collect()),
        (Formula::Or(cs), true) => Formula::Or(cs.iter().map(|c| nnf(c, true)).collect()),
        (Formula::And(cs), false) => Formula::Or(cs.iter().map(|c| nnf(c, false)).collect()),
        (Formula::Or(cs), false) => Formula::And(cs.iter().map(|c| nnf(c, false)).collect()),
    }
}

/// A conjunction of signed literals.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Conjunct {
    pub literals: BTreeSet<Literal>,
}

impl Conjunct {
    pub fn positive(&self) -> impl Iterator<Item = &Atom> {
        self.literals.iter().filter(|l| l.positive).map(|l| &l.atom)
    }

    pub fn negative(&self) -> impl Iterator<Item = &Atom> {
        self.literals.iter().filter(|l| !l.positive).map(|l| &l.atom)
    }

    fn contradictory(&self) -> bool {
        self.literals.iter().any(|l| {
            !l.positive
                && self.literals.contains(&Literal {
                    positive: true,
                    atom: l.atom.clone(),
                })
        })
    }

    /// Positive literals ⊆ state and negative literals disjoint from it.
    pub fn satisfied_by(&self, holds: &dyn Fn(&Atom) -> bool) -> bool {
        self.literals.iter().all(|l| holds(&l.atom) == l.positive)
    }
}

impl fmt::Display for Conjunct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.literals.iter().map(|l| l.to_string()).collect();
        write!(f, "(and {})", parts.join(" "))
    }
}

/// Disjunction of conjuncts. Contradictory conjuncts are dropped; an empty
/// list means the goal is unsatisfiable.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dnf {
    pub conjuncts: Vec<Conjunct>,
}

impl Dnf {
    pub fn is_unsatisfiable(&self) -> bool {
        self.conjuncts.is_empty()
    }

    pub fn satisfied_by(&self, holds: &dyn Fn(&Atom) -> bool) -> bool {
        self.conjuncts.iter().any(|c| c.satisfied_by(holds))
    }
}

pub fn to_dnf(f: &Formula) -> Result<Dnf, LogicError> {
    to_dnf_with_limit(f, DEFAULT_CONJUNCT_LIMIT)
}

pub fn to_dnf_with_limit(f: &Formula, limit: usize) -> Result<Dnf, LogicError> {
    let conjuncts = dnf(&to_nnf(f), limit)?;
    Ok(Dnf { conjuncts })
}

fn push_unique(out: &mut Vec<Conjunct>, c: Conjunct) {
    if !c.contradictory() && !out.contains(&c) {
        out.push(c);
    }
}

fn dnf(f: &Formula, limit: usize) -> Result<Vec<Conjunct>, LogicError> {
    let literal = |positive: bool, atom: &Atom| Conjunct {
        literals: [Literal {
            positive,
            atom: atom.clone(),
        }]
        .into_iter()
        .collect(),
    };
    let out = match f {
        Formula::Atom(a) => vec![literal(true, a)],
        Formula::Not(inner) => match inner.as_ref() {
            Formula::Atom(a) => vec![literal(false, a)],
            // to_nnf guarantees negations only wrap atoms
            other => dnf(&to_nnf(&Formula::not(other.clone())), limit)?,
        },
        Formula::Or(cs) => {
            let mut out = Vec::new();
            for c in cs {
                for conj in dnf(c, limit)? {
                    push_unique(&mut out, conj);
                }
                if out.len() > limit {
                    return Err(LogicError::Explosion { limit });
                }
            }
            out
        }
        Formula::And(cs) => {
            let mut acc = vec![Conjunct::default()];
            for c in cs {
                let part = dnf(c, limit)?;
                if acc.len().saturating_mul(part.len()) > limit * 4 {
                    return Err(LogicError::Explosion { limit });
                }
                let mut next = Vec::new();
                for a in &acc {
                    for p in &part {
                        let mut merged = a.clone();
                        merged.literals.extend(p.literals.iter().cloned());
                        push_unique(&mut next, merged);
                    }
                }
                if next.len() > limit {
                    return Err(LogicError::Explosion { limit });
                }
                acc = next;
            }
            acc
        }
    };
    Ok(out)
}

/// One set of literal templates that must not co-occur in a conjunct.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConflictPattern {
    pub atoms: Vec<Atom>,
    /// Variable pairs that must be bound to different entities.
    pub distinct: Vec<(String, String)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemanticCondition {
    pub id: String,
    /// Higher means more general.
    pub priority: i64,
    pub patterns: Vec<ConflictPattern>,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemanticError {
    pub condition: String,
    pub message: String,
    pub literals: Vec<Atom>,
}

impl fmt::Display for SemanticError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub fn builtin_conditions() -> Vec<SemanticCondition> {
    parse_conditions(crate::data::CONDITIONS).expect("builtin condition file is valid")
}

pub fn parse_conditions(text: &str) -> Result<Vec<SemanticCondition>, LogicError> {
    let mut out = Vec::new();
    let mut current: Option<(usize, SemanticCondition)> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| LogicError::Parse {
            line: line_no,
            message,
        };
        let (kw, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        match (kw, current.as_mut()) {
            ("condition", None) => {
                if rest.is_empty() {
                    return Err(err("condition needs an id".into()));
                }
                current = Some((
                    line_no,
                    SemanticCondition {
                        id: rest.to_string(),
                        priority: 0,
                        patterns: Vec::new(),
                        message: String::new(),
                    },
                ));
            }
            ("priority", Some((_, c))) => {
                c.priority = rest
                    .parse()
                    .map_err(|_| err(format!("bad priority '{rest}'")))?;
            }
            ("message", Some((_, c))) => c.message = rest.to_string(),
            ("conflict", Some((_, c))) => c.patterns.push(parse_pattern(rest).map_err(err)?),
            ("end", Some(_)) => {
                let (start, c) = current.take().expect("inside condition");
                if c.message.is_empty() {
                    return Err(LogicError::Parse {
                        line: start,
                        message: format!("condition '{}' has no message", c.id),
                    });
                }
                if c.patterns.is_empty() {
                    return Err(LogicError::Parse {
                        line: start,
                        message: format!("condition '{}' has no conflict pattern", c.id),
                    });
                }
                out.push(c);
            }
            (other, _) => return Err(err(format!("unexpected '{other}'"))),
        }
    }
    if let Some((line, c)) = current {
        return Err(LogicError::Parse {
            line,
            message: format!("condition '{}' is missing 'end'", c.id),
        });
    }
    Ok(out)
}

fn parse_pattern(text: &str) -> Result<ConflictPattern, String> {
    let (atoms_text, where_text) = match text.split_once(" where ") {
        Some((a, w)) => (a, Some(w)),
        None => (text, None),
    };
    let parsed = sexpr::parse(atoms_text).map_err(|e| e.to_string())?;
    let mut atoms = Vec::new();
    for form in &parsed.forms {
        let items = form
            .as_list()
            .ok_or_else(|| format!("expected an atom, found '{form}'"))?;
        let words: Option<Vec<&str>> = items.iter().map(|s| s.as_sym()).collect();
        match words.as_deref() {
            Some([pred, args @ ..]) => atoms.push(Atom::new(*pred, args.iter().copied())),
            _ => return Err(format!("bad atom '{form}'")),
        }
    }
    if atoms.is_empty() {
        return Err("conflict needs at least one atom".into());
    }
    let mut distinct = Vec::new();
    for clause in where_text.into_iter().flat_map(|w| w.split(',')) {
        let (a, b) = clause
            .split_once("!=")
            .ok_or_else(|| format!("expected '?x != ?y', found '{}'", clause.trim()))?;
        let (a, b) = (a.trim(), b.trim());
        if !is_variable(a) || !is_variable(b) {
            return Err(format!("'{}' must compare two variables", clause.trim()));
        }
        distinct.push((a.to_string(), b.to_string()));
    }
    Ok(ConflictPattern { atoms, distinct })
}

fn unify(template: &Atom, fact: &Atom, binding: &mut BTreeMap<String, String>) -> bool {
    if template.predicate != fact.predicate || template.args.len() != fact.args.len() {
        return false;
    }
    for (t, v) in template.args.iter().zip(&fact.args) {
        if is_variable(t) {
            match binding.get(t) {
                Some(bound) if bound != v => return false,
                Some(_) => {}
                None => {
                    binding.insert(t.clone(), v.clone());
                }
            }
        } else if t != v {
            return false;
        }
    }
    true
}

/// Backtracking search for an injective binding of the pattern's atoms into
/// the facts that respects the distinctness constraints.
fn match_pattern(pattern: &ConflictPattern, facts: &[&Atom]) -> Option<Vec<Atom>> {
    fn go(
        pattern: &ConflictPattern,
        facts: &[&Atom],
        i: usize,
        binding: &BTreeMap<String, String>,
        used: &mut Vec<usize>,
    ) -> bool {
        if i == pattern.atoms.len() {
            return pattern
                .distinct
                .iter()
                .all(|(a, b)| match (binding.get(a), binding.get(b)) {
                    (Some(x), Some(y)) => x != y,
                    _ => false,
                });
        }
        for (j, fact) in facts.iter().enumerate() {
            if used.contains(&j) {
                continue;
            }
            let mut b = binding.clone();
            if unify(&pattern.atoms[i], fact, &mut b) {
                used.push(j);
                if go(pattern, facts, i + 1, &b, used) {
                    return true;
                }
                used.pop();
            }
        }
        false
    }
    let mut used = Vec::new();
    go(pattern, facts, 0, &BTreeMap::new(), &mut used)
        .then(|| used.iter().map(|&j| facts[j].clone()).collect())
}

/// Literals of the first conflict pattern found, if any.
pub fn find_conflict(conjunct: &Conjunct, cond: &SemanticCondition) -> Option<Vec<Atom>> {
    let facts: Vec<&Atom> = conjunct.positive().collect();
    cond.patterns.iter().find_map(|p| match_pattern(p, &facts))
}

/// True iff the conjunct does not realize any of the condition's conflicts.
pub fn check_condition(conjunct: &Conjunct, cond: &SemanticCondition) -> bool {
    find_conflict(conjunct, cond).is_none()
}

/// `None` iff some conjunct passes every condition. Otherwise reports the
/// highest-priority failure of the conjunct with the fewest failures.
pub fn check_semantics(goal: &Formula, conditions: &[SemanticCondition]) -> Option<SemanticError> {
    check_semantics_with_limit(goal, conditions, DEFAULT_CONJUNCT_LIMIT)
}

pub fn check_semantics_with_limit(
    goal: &Formula,
    conditions: &[SemanticCondition],
    limit: usize,
) -> Option<SemanticError> {
    let dnf = match to_dnf_with_limit(goal, limit) {
        Ok(d) => d,
        Err(_) => {
            return Some(SemanticError {
                condition: TOO_COMPLEX_ID.into(),
                message: TOO_COMPLEX_MESSAGE.into(),
                literals: Vec::new(),
            })
        }
    };
    if dnf.is_unsatisfiable() {
        return Some(SemanticError {
            condition: UNSATISFIABLE_ID.into(),
            message: UNSATISFIABLE_MESSAGE.into(),
            literals: goal.atoms().into_iter().cloned().collect(),
        });
    }
    let mut best: Option<Vec<(&SemanticCondition, Vec<Atom>)>> = None;
    for conj in &dnf.conjuncts {
        let failed: Vec<(&SemanticCondition, Vec<Atom>)> = conditions
            .iter()
            .filter_map(|c| find_conflict(conj, c).map(|lits| (c, lits)))
            .collect();
        if failed.is_empty() {
            return None;
        }
        if best.as_ref().map_or(true, |b| failed.len() < b.len()) {
            best = Some(failed);
        }
    }
    let best = best?;
    // max_by_key keeps the last maximum; iterate reversed to prefer declaration order
    let (cond, literals) = best.into_iter().rev().max_by_key(|(c, _)| c.priority)?;
    Some(SemanticError {
        condition: cond.id.clone(),
        message: cond.message.clone(),
        literals,
    })
}
