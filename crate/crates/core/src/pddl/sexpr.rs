use std::fmt;

use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sexpr {
    Sym(String),
    List(Vec<Sexpr>),
}

impl Sexpr {
    pub fn as_sym(&self) -> Option<&str> {
        match self {
            Sexpr::Sym(s) => Some(s),
            Sexpr::List(_) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexpr]> {
        match self {
            Sexpr::List(l) => Some(l),
            Sexpr::Sym(_) => None,
        }
    }

    /// Head symbol of a list, lowercased.
    pub fn head(&self) -> Option<String> {
        self.as_list()
            .and_then(|l| l.first())
            .and_then(Sexpr::as_sym)
            .map(str::to_ascii_lowercase)
    }
}

impl fmt::Display for Sexpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexpr::Sym(s) => f.write_str(s),
            Sexpr::List(items) => {
                f.write_str("(")?;
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{it}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SexprError {
    #[error("unbalanced parentheses: missing {missing} closing parenthesis(es)")]
    Unclosed { missing: usize },
    #[error("unbalanced parentheses: unexpected ')' on line {line}")]
    UnexpectedClose { line: usize },
}

/// Parsed top-level forms plus `; @...` annotation comments.
#[derive(Debug, Default)]
pub struct Parsed {
    pub forms: Vec<Sexpr>,
    pub annotations: Vec<String>,
}

pub fn parse(text: &str) -> Result<Parsed, SexprError> {
    let mut out = Parsed::default();
    let mut stack: Vec<Vec<Sexpr>> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let (code, comment) = match raw.find(';') {
            Some(i) => (&raw[..i], Some(&raw[i + 1..])),
            None => (raw, None),
        };
        if let Some(c) = comment {
            if let Some(rest) = c.trim_start().strip_prefix('@') {
                out.annotations.push(rest.trim().to_string());
            }
        }
        let mut chars = code.char_indices().peekable();
        while let Some((i, ch)) = chars.next() {
            match ch {
                '(' => stack.push(Vec::new()),
                ')' => {
                    let done = stack
                        .pop()
                        .ok_or(SexprError::UnexpectedClose { line: lineno + 1 })?;
                    push(&mut stack, &mut out.forms, Sexpr::List(done));
                }
                c if c.is_whitespace() => {}
                _ => {
                    let mut end = code.len();
                    while let Some(&(j, c)) = chars.peek() {
                        if c.is_whitespace() || c == '(' || c == ')' {
                            end = j;
                            break;
                        }
                        chars.next();
                    }
                    push(&mut stack, &mut out.forms, Sexpr::Sym(code[i..end].to_string()));
                }
            }
        }
    }
    if !stack.is_empty() {
        return Err(SexprError::Unclosed {
            missing: stack.len(),
        });
    }
    Ok(out)
}

fn push(stack: &mut [Vec<Sexpr>], top: &mut Vec<Sexpr>, e: Sexpr) {
    match stack.last_mut() {
        Some(l) => l.push(e),
        None => top.push(e),
    }
}
