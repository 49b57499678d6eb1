use thiserror::Error;

use super::capability::EQUALITY;
use super::domain::Domain;
use super::formula::{is_variable, Atom, Formula};
use super::problem::ProblemSkeleton;
use super::sexpr::{self, Sexpr, SexprError};

/// Goal-text errors; the messages are sent back to the LLM verbatim.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SyntaxError {
    #[error("The goal has unbalanced parentheses: {0}. Please correct your answer")]
    UnbalancedParens(String),
    #[error("The predicate '{0}' does not exist. Please use only the predicates of the domain")]
    UnknownPredicate(String),
    #[error("The object '{0}' does not exist in the scene. Please use only existing objects")]
    UnknownEntity(String),
    #[error("The predicate '{pred}' takes {want} arguments but {got} were given. Please correct your answer")]
    WrongArity { pred: String, got: usize, want: usize },
    #[error("Argument {pos} of '{pred}' must be of type {want}, but '{got}' is not. Please correct your answer")]
    TypeMismatch {
        pred: String,
        pos: usize,
        got: String,
        want: String,
    },
    #[error("The goal is malformed: {0}. Please correct your answer")]
    Malformed(String),
}

impl From<SexprError> for SyntaxError {
    fn from(e: SexprError) -> Self {
        match e {
            SexprError::Unclosed { missing } => {
                SyntaxError::UnbalancedParens(format!("{missing} closing parenthesis(es) missing"))
            }
            SexprError::UnexpectedClose { line } => {
                SyntaxError::UnbalancedParens(format!("unexpected ')' on line {line}"))
            }
        }
    }
}

/// Parses and checks a goal. Accepts both `(and (a x) (b y))` and the bare
/// `and (a x) (b y)` / `in apple0 trash_can0` forms; predicate aliases are
/// replaced by their canonical names.
pub fn parse_formula(
    text: &str,
    domain: &Domain,
    skeleton: &ProblemSkeleton,
) -> Result<Formula, SyntaxError> {
    let text = text.trim().trim_end_matches('.').trim();
    if text.is_empty() {
        return Err(SyntaxError::Malformed("the goal is empty".into()));
    }
    let parsed = sexpr::parse(text)?;
    let root = match parsed.forms.as_slice() {
        [] => return Err(SyntaxError::Malformed("the goal is empty".into())),
        [single @ Sexpr::List(_)] => single.clone(),
        forms if forms[0].as_sym().is_some() => Sexpr::List(forms.to_vec()),
        _ => {
            return Err(SyntaxError::Malformed(
                "expected a single formula, found several".into(),
            ))
        }
    };
    convert(&root, domain, skeleton)
}

fn convert(e: &Sexpr, domain: &Domain, sk: &ProblemSkeleton) -> Result<Formula, SyntaxError> {
    let items = match e {
        Sexpr::List(items) => items,
        Sexpr::Sym(s) => return Err(SyntaxError::Malformed(format!("'{s}' is not a formula"))),
    };
    let (head, rest) = items
        .split_first()
        .ok_or_else(|| SyntaxError::Malformed("empty parentheses '()'".into()))?;
    let head = head
        .as_sym()
        .ok_or_else(|| SyntaxError::Malformed(format!("'{e}' does not start with a name")))?;
    let children = |rest: &[Sexpr]| -> Result<Vec<Formula>, SyntaxError> {
        rest.iter().map(|c| convert(c, domain, sk)).collect()
    };
    match head.to_ascii_lowercase().as_str() {
        "and" | "or" if rest.is_empty() => Err(SyntaxError::Malformed(format!(
            "'{head}' needs at least one argument"
        ))),
        "and" => Ok(Formula::And(children(rest)?)),
        "or" => Ok(Formula::Or(children(rest)?)),
        "not" => match rest {
            [one] => Ok(Formula::not(convert(one, domain, sk)?)),
            _ => Err(SyntaxError::Malformed("'not' takes exactly one formula".into())),
        },
        _ => atom(head, rest, domain, sk).map(Formula::Atom),
    }
}

fn atom(
    pred: &str,
    rest: &[Sexpr],
    domain: &Domain,
    sk: &ProblemSkeleton,
) -> Result<Atom, SyntaxError> {
    if pred == EQUALITY {
        return Err(SyntaxError::UnknownPredicate(pred.into()));
    }
    let decl = domain
        .resolve_predicate(pred)
        .ok_or_else(|| SyntaxError::UnknownPredicate(pred.into()))?;
    let mut args = Vec::with_capacity(rest.len());
    for r in rest {
        match r.as_sym() {
            Some(s) if is_variable(s) => {
                return Err(SyntaxError::Malformed(format!(
                    "variables such as '{s}' are not allowed in goals"
                )))
            }
            Some(s) => args.push(s.to_string()),
            None => {
                return Err(SyntaxError::Malformed(format!(
                    "'{r}' cannot be an argument of '{pred}'"
                )))
            }
        }
    }
    if args.len() != decl.arity() {
        return Err(SyntaxError::WrongArity {
            pred: pred.into(),
            got: args.len(),
            want: decl.arity(),
        });
    }
    for (i, (arg, want)) in args.iter().zip(decl.param_types()).enumerate() {
        let types = sk
            .types_of(arg)
            .ok_or_else(|| SyntaxError::UnknownEntity(arg.clone()))?;
        if !domain.types.satisfies(types, want) {
            return Err(SyntaxError::TypeMismatch {
                pred: pred.into(),
                pos: i + 1,
                got: arg.clone(),
                want: want.into(),
            });
        }
    }
    Ok(Atom::new(decl.name.clone(), args))
}
