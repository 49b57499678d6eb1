use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A predicate applied to entity names or `?variables`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl Atom {
    pub fn new<P, I, S>(predicate: P, args: I) -> Self
    where
        P: Into<String>,
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Atom {
            predicate: predicate.into(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }

    pub fn is_ground(&self) -> bool {
        !self.args.iter().any(|a| is_variable(a))
    }

    /// Plain rendering without parentheses, e.g. `on sponge0 table0`.
    pub fn to_plain(&self) -> String {
        let mut s = self.predicate.clone();
        for a in &self.args {
            s.push(' ');
            s.push_str(a);
        }
        s
    }

    pub fn substitute(&self, binding: &dyn Fn(&str) -> Option<String>) -> Atom {
        Atom {
            predicate: self.predicate.clone(),
            args: self
                .args
                .iter()
                .map(|a| binding(a).unwrap_or_else(|| a.clone()))
                .collect(),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.to_plain())
    }
}

pub fn is_variable(term: &str) -> bool {
    term.starts_with('?')
}

/// An atom with a sign, as it appears in a conjunct or a violated precondition.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub positive: bool,
    pub atom: Atom,
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "{}", self.atom)
        } else {
            write!(f, "(not {})", self.atom)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Formula {
    Atom(Atom),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Not(Box<Formula>),
}

impl Formula {
    pub fn atom(a: Atom) -> Self {
        Formula::Atom(a)
    }

    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    /// The always-true formula.
    pub fn truth() -> Self {
        Formula::And(Vec::new())
    }

    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a Atom>) {
        match self {
            Formula::Atom(a) => out.push(a),
            Formula::And(cs) | Formula::Or(cs) => cs.iter().for_each(|c| c.collect_atoms(out)),
            Formula::Not(c) => c.collect_atoms(out),
        }
    }

    pub fn variables(&self) -> BTreeSet<String> {
        self.atoms()
            .into_iter()
            .flat_map(|a| a.args.iter())
            .filter(|a| is_variable(a))
            .cloned()
            .collect()
    }

    pub fn map_atoms(&self, f: &mut dyn FnMut(&Atom) -> Formula) -> Formula {
        match self {
            Formula::Atom(a) => f(a),
            Formula::And(cs) => Formula::And(cs.iter().map(|c| c.map_atoms(f)).collect()),
            Formula::Or(cs) => Formula::Or(cs.iter().map(|c| c.map_atoms(f)).collect()),
            Formula::Not(c) => Formula::not(c.map_atoms(f)),
        }
    }

    /// Closed-world evaluation with a membership oracle for atoms.
    pub fn eval(&self, holds: &dyn Fn(&Atom) -> bool) -> bool {
        match self {
            Formula::Atom(a) => holds(a),
            Formula::And(cs) => cs.iter().all(|c| c.eval(holds)),
            Formula::Or(cs) => cs.iter().any(|c| c.eval(holds)),
            Formula::Not(c) => !c.eval(holds),
        }
    }

    /// First literal responsible for this formula being false, if it is false.
    pub fn first_violation(&self, holds: &dyn Fn(&Atom) -> bool) -> Option<Literal> {
        self.violation(true, holds)
    }

    fn violation(&self, want: bool, holds: &dyn Fn(&Atom) -> bool) -> Option<Literal> {
        if self.eval(holds) == want {
            return None;
        }
        match self {
            Formula::Atom(a) => Some(Literal {
                positive: want,
                atom: a.clone(),
            }),
            Formula::Not(c) => c.violation(!want, holds),
            // want=true on And, or want=false on Or: some child has the wrong value
            Formula::And(cs) if want => cs.iter().find_map(|c| c.violation(true, holds)),
            Formula::Or(cs) if !want => cs.iter().find_map(|c| c.violation(false, holds)),
            Formula::And(cs) | Formula::Or(cs) => cs.first().and_then(|c| c.violation(want, holds)),
        }
    }

    /// PDDL s-expression rendering.
    pub fn to_pddl(&self) -> String {
        match self {
            Formula::Atom(a) => a.to_string(),
            Formula::And(cs) => join_compound("and", cs),
            Formula::Or(cs) => join_compound("or", cs),
            Formula::Not(c) => format!("(not {})", c.to_pddl()),
        }
    }
}

fn join_compound(op: &str, cs: &[Formula]) -> String {
    let mut s = format!("({op}");
    for c in cs {
        s.push(' ');
        s.push_str(&c.to_pddl());
    }
    s.push(')');
    s
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_pddl())
    }
}
