use std::collections::BTreeMap;

use super::capability::{PredicateDecl, TypedParam};
use super::domain::{ActionSchema, Domain};
use super::formula::{Atom, Formula};
use super::problem::ProblemSkeleton;
use super::sexpr::{self, Sexpr};
use super::types::{TypeTree, OBJECT};
use super::PddlError;

/// `?a ?b - t ?c` → [(?a,t), (?b,t), (?c,object)].
pub fn typed_list(tokens: &[String]) -> Result<Vec<TypedParam>, String> {
    let mut out = Vec::new();
    let mut pending: Vec<&str> = Vec::new();
    let mut it = tokens.iter();
    while let Some(tok) = it.next() {
        if tok == "-" {
            let ty = it.next().ok_or("'-' must be followed by a type")?;
            if pending.is_empty() {
                return Err(format!("type '{ty}' has no names before it"));
            }
            out.extend(pending.drain(..).map(|n| TypedParam::new(n, ty)));
        } else {
            pending.push(tok);
        }
    }
    out.extend(pending.into_iter().map(|n| TypedParam::new(n, OBJECT)));
    Ok(out)
}

fn sym(e: &Sexpr) -> Result<&str, String> {
    e.as_sym().ok_or_else(|| format!("expected a symbol, found {e}"))
}

fn syms(items: &[Sexpr]) -> Result<Vec<String>, String> {
    items.iter().map(|e| sym(e).map(str::to_string)).collect()
}

/// Structural conversion without any declaration checks.
pub fn formula_from_sexpr(e: &Sexpr) -> Result<Formula, String> {
    let items = e
        .as_list()
        .ok_or_else(|| format!("expected a parenthesized formula, found '{e}'"))?;
    let (head, rest) = items.split_first().ok_or("empty formula '()'")?;
    let head = sym(head)?;
    match head.to_ascii_lowercase().as_str() {
        "and" => Ok(Formula::And(rest.iter().map(formula_from_sexpr).collect::<Result<_, _>>()?)),
        "or" => Ok(Formula::Or(rest.iter().map(formula_from_sexpr).collect::<Result<_, _>>()?)),
        "not" => match rest {
            [one] => Ok(Formula::not(formula_from_sexpr(one)?)),
            _ => Err(format!("'not' takes exactly one argument in {e}")),
        },
        _ => Ok(Formula::Atom(Atom::new(head, syms(rest)?))),
    }
}

/// Parses a formula without declaration checks; bare forms such as
/// `on a b` or `and (on a b) (clean c)` are accepted.
pub fn parse_plain_formula(text: &str) -> Result<Formula, PddlError> {
    let parsed = sexpr::parse(text)?;
    let root = match parsed.forms.as_slice() {
        [single @ Sexpr::List(_)] => single.clone(),
        forms if forms.first().and_then(Sexpr::as_sym).is_some() => Sexpr::List(forms.to_vec()),
        _ => {
            return Err(PddlError::Parse {
                line: 1,
                message: format!("expected one formula in '{}'", text.trim()),
            })
        }
    };
    formula_from_sexpr(&root).map_err(|message| PddlError::Parse { line: 1, message })
}

fn section<'a>(items: &'a [Sexpr], key: &str) -> Option<&'a [Sexpr]> {
    items.iter().find_map(|e| {
        let l = e.as_list()?;
        (l.first()?.as_sym()?.eq_ignore_ascii_case(key)).then(|| &l[1..])
    })
}

fn define_body(text: &str, kind: &str) -> Result<(Vec<Sexpr>, Vec<String>, String), PddlError> {
    let parsed = sexpr::parse(text)?;
    let invalid = |m: String| PddlError::Invalid(m);
    let top = match parsed.forms.as_slice() {
        [one] => one,
        _ => return Err(invalid(format!("expected a single (define ...) form, found {}", parsed.forms.len()))),
    };
    let items = top
        .as_list()
        .filter(|l| l.first().and_then(Sexpr::as_sym) == Some("define"))
        .ok_or_else(|| invalid("missing (define ...)".into()))?;
    let name = items
        .get(1)
        .and_then(Sexpr::as_list)
        .filter(|l| l.len() == 2 && l[0].as_sym() == Some(kind))
        .and_then(|l| l[1].as_sym())
        .ok_or_else(|| invalid(format!("missing ({kind} <name>)")))?;
    Ok((items[2..].to_vec(), parsed.annotations, name.to_string()))
}

fn split_effect(e: &Sexpr) -> Result<(Vec<Atom>, Vec<Atom>, Option<String>), String> {
    let mut add = Vec::new();
    let mut del = Vec::new();
    let mut cost = None;
    let parts: Vec<&Sexpr> = match e.head().as_deref() {
        Some("and") => e.as_list().unwrap_or_default()[1..].iter().collect(),
        _ => vec![e],
    };
    for p in parts {
        match p.head().as_deref() {
            Some("increase") => {
                // (increase (total-cost) (cost ?agent))
                let l = p.as_list().unwrap_or_default();
                let var = l
                    .get(2)
                    .and_then(Sexpr::as_list)
                    .filter(|c| c.len() == 2 && c[0].as_sym() == Some("cost"))
                    .and_then(|c| c[1].as_sym())
                    .ok_or_else(|| format!("unsupported cost effect {p}"))?;
                cost = Some(var.to_string());
            }
            _ => match formula_from_sexpr(p)? {
                Formula::Atom(a) => add.push(a),
                Formula::Not(inner) => match *inner {
                    Formula::Atom(a) => del.push(a),
                    other => return Err(format!("unsupported effect (not {other})")),
                },
                other => return Err(format!("unsupported effect {other}")),
            },
        }
    }
    Ok((add, del, cost))
}

fn parse_action(items: &[Sexpr]) -> Result<ActionSchema, String> {
    let name = items.first().map(sym).transpose()?.ok_or("action without a name")?;
    let mut action = ActionSchema {
        name: name.to_string(),
        params: Vec::new(),
        precondition: Formula::truth(),
        add: Vec::new(),
        del: Vec::new(),
        cost_of: None,
    };
    let mut rest = items[1..].iter();
    while let Some(key) = rest.next() {
        let key = sym(key)?.to_ascii_lowercase();
        let value = rest.next().ok_or_else(|| format!("{key} without a value"))?;
        match key.as_str() {
            ":parameters" => {
                let list = value.as_list().ok_or(":parameters must be a list")?;
                action.params = typed_list(&syms(list)?)?;
            }
            ":precondition" => action.precondition = formula_from_sexpr(value)?,
            ":effect" => {
                let (add, del, cost) = split_effect(value)?;
                action.add = add;
                action.del = del;
                action.cost_of = cost;
            }
            other => return Err(format!("unsupported action key {other}")),
        }
    }
    Ok(action)
}

/// Inserts child/parent pairs in dependency order.
fn build_types(roots: &[&str], decls: &[TypedParam]) -> Result<TypeTree, PddlError> {
    let mut tree = TypeTree::new();
    for r in roots {
        tree.add_root(r);
    }
    let mut pending: Vec<&TypedParam> = decls.iter().collect();
    while !pending.is_empty() {
        let before = pending.len();
        let mut next = Vec::new();
        for d in pending {
            if tree.contains(&d.ty) {
                tree.add_type(&d.name, &d.ty)?;
            } else {
                next.push(d);
            }
        }
        if next.len() == before {
            return Err(PddlError::UnknownType(next[0].ty.clone()));
        }
        pending = next;
    }
    Ok(tree)
}

pub fn parse_domain(text: &str) -> Result<Domain, PddlError> {
    let (items, annotations, name) = define_body(text, "domain")?;
    let invalid = PddlError::Invalid;

    // Bare names are roots; `x - object` stays a child of object.
    let type_items = section(&items, ":types").unwrap_or_default();
    let toks = syms(type_items).map_err(invalid)?;
    let mut decls = Vec::new();
    let mut pending: Vec<&str> = Vec::new();
    let mut it = toks.iter();
    while let Some(t) = it.next() {
        if t == "-" {
            let parent = it.next().ok_or_else(|| invalid("dangling '-' in :types".into()))?;
            decls.extend(pending.drain(..).map(|n| TypedParam::new(n, parent)));
        } else {
            pending.push(t);
        }
    }
    let mut types = build_types(&pending, &decls)?;

    let mut aliases = BTreeMap::new();
    for ann in &annotations {
        let mut words = ann.split_whitespace();
        match words.next() {
            Some("members") => {
                let ty = words.next().ok_or_else(|| invalid("empty @members".into()))?;
                types.ensure_members(ty);
                for m in words {
                    types.add_member(ty, m);
                }
            }
            Some("alias") => {
                if let (Some(a), Some(t)) = (words.next(), words.next()) {
                    aliases.insert(a.to_string(), t.to_string());
                }
            }
            _ => {}
        }
    }

    let mut predicates = Vec::new();
    for p in section(&items, ":predicates").unwrap_or_default() {
        let l = p.as_list().ok_or_else(|| invalid(format!("bad predicate {p}")))?;
        let (name, rest) = l.split_first().ok_or_else(|| invalid("empty predicate".into()))?;
        predicates.push(PredicateDecl {
            name: sym(name).map_err(invalid)?.to_string(),
            params: typed_list(&syms(rest).map_err(invalid)?).map_err(invalid)?,
        });
    }
    let cost_function = section(&items, ":functions").is_some();
    let mut actions = Vec::new();
    for item in &items {
        if item.head().as_deref() == Some(":action") {
            let l = item.as_list().unwrap_or_default();
            actions.push(parse_action(&l[1..]).map_err(invalid)?);
        }
    }
    Ok(Domain {
        name,
        types,
        predicates,
        actions,
        cost_function,
        aliases,
    })
}

/// Returns the skeleton and the goal, if the problem has one.
pub fn parse_problem(text: &str) -> Result<(ProblemSkeleton, Option<Formula>), PddlError> {
    let (items, annotations, _) = define_body(text, "problem")?;
    let invalid = PddlError::Invalid;
    let mut sk = ProblemSkeleton::default();
    for ann in &annotations {
        let mut words = ann.split_whitespace();
        if words.next() == Some("hands") {
            if let Some(agent) = words.next() {
                sk.hand_order
                    .insert(agent.to_string(), words.map(str::to_string).collect());
            }
        }
    }
    let objs = syms(section(&items, ":objects").unwrap_or_default()).map_err(invalid)?;
    for p in typed_list(&objs).map_err(invalid)? {
        sk.objects.entry(p.name).or_default().insert(p.ty);
    }
    for fact in section(&items, ":init").unwrap_or_default() {
        let l = fact.as_list().ok_or_else(|| invalid(format!("bad init entry {fact}")))?;
        if fact.head().as_deref() == Some("=") {
            // (= (cost robot0) 1) or (= (total-cost) 0)
            let f = l.get(1).and_then(Sexpr::as_list).unwrap_or_default();
            let value = l.get(2).and_then(Sexpr::as_sym).unwrap_or("");
            if f.len() == 2 && f[0].as_sym() == Some("cost") {
                let agent = sym(&f[1]).map_err(invalid)?;
                let v = value
                    .parse::<u64>()
                    .map_err(|_| invalid(format!("bad cost value in {fact}")))?;
                sk.costs.insert(agent.to_string(), v);
            }
            continue;
        }
        match formula_from_sexpr(fact).map_err(invalid)? {
            Formula::Atom(a) => {
                sk.init.insert(a);
            }
            other => return Err(invalid(format!("init entries must be atoms, found {other}"))),
        }
    }
    let goal = match section(&items, ":goal") {
        Some([g]) => Some(formula_from_sexpr(g).map_err(invalid)?),
        Some(_) => return Err(invalid(":goal takes one formula".into())),
        None => None,
    };
    Ok((sk, goal))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn typed_list_defaults_to_object() {
        let toks: Vec<String> = ["?a", "?b", "-", "t", "?c"].iter().map(|s| s.to_string()).collect();
        let l = typed_list(&toks).unwrap();
        assert_eq!(l[1], TypedParam::new("?b", "t"));
        assert_eq!(l[2], TypedParam::new("?c", "object"));
    }

    #[test]
    fn formula_structure() {
        let p = sexpr::parse("(and (on a b) (not (closed c)) (or (x) (y z)))").unwrap();
        let f = formula_from_sexpr(&p.forms[0]).unwrap();
        assert_eq!(f.to_string(), "(and (on a b) (not (closed c)) (or (x) (y z)))");
        let bad = sexpr::parse("(not a b)").unwrap();
        assert!(formula_from_sexpr(&bad.forms[0]).is_err());
    }
}
