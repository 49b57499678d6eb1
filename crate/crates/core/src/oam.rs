//! Object-affordance mapping generation via LLM prompting, and scoring
//! against labelled ground truth.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::llm::{parse_list, parse_yes_no, slots, templates, LlmError, LlmHandle};
use crate::model::{AffordanceCatalog, ModelError, ObjectClass, Oam};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OamError {
    #[error("the affordance catalog is empty")]
    EmptyCatalog,
    #[error("class sets differ: only predicted {only_predicted:?}, only truth {only_truth:?}")]
    ClassMismatch {
        only_predicted: Vec<String>,
        only_truth: Vec<String>,
    },
    #[error("strategy has no question for affordance '{0}'")]
    MissingQuestion(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    ListAffordances,
    YesNo,
    YesNoLogical,
}

impl std::str::FromStr for StrategyKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "list" | "list-affordances" => Ok(StrategyKind::ListAffordances),
            "yes-no" => Ok(StrategyKind::YesNo),
            "yes-no-logical" => Ok(StrategyKind::YesNoLogical),
            _ => Err(format!("unknown strategy '{s}' (list, yes-no, yes-no-logical)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Combiner {
    And,
    Or,
}

/// Atomic yes/no questions for one affordance and how their answers combine.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuestionSet {
    pub combiner: Combiner,
    pub questions: Vec<String>,
}

impl QuestionSet {
    pub fn single(question: impl Into<String>) -> Self {
        QuestionSet {
            combiner: Combiner::And,
            questions: vec![question.into()],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OamStrategy {
    pub kind: StrategyKind,
    /// One entry per catalog affordance for the yes/no kinds; unused by the list kind.
    pub questions: BTreeMap<String, QuestionSet>,
}

fn description_question(description: &str) -> String {
    format!("Is the following true for this object? {description}.")
}

impl OamStrategy {
    pub fn list() -> Self {
        OamStrategy {
            kind: StrategyKind::ListAffordances,
            questions: BTreeMap::new(),
        }
    }

    /// One question per affordance, derived from its catalog description.
    pub fn yes_no(catalog: &AffordanceCatalog) -> Self {
        let questions = catalog
            .entries()
            .iter()
            .map(|a| (a.name.clone(), QuestionSet::single(description_question(&a.description))))
            .collect();
        OamStrategy {
            kind: StrategyKind::YesNo,
            questions,
        }
    }

    /// Like [`OamStrategy::yes_no`] but affordances listed in `logical` are
    /// replaced by their combined question sets.
    pub fn yes_no_logical(catalog: &AffordanceCatalog, logical: &str) -> Result<Self, OamError> {
        let mut s = Self::yes_no(catalog);
        s.kind = StrategyKind::YesNoLogical;
        for (aff, set) in parse_question_sets(logical)? {
            if !catalog.contains(&aff) {
                return Err(OamError::Model(ModelError::UnknownAffordance(aff)));
            }
            s.questions.insert(aff, set);
        }
        Ok(s)
    }

    pub fn builtin(kind: StrategyKind, catalog: &AffordanceCatalog) -> Self {
        match kind {
            StrategyKind::ListAffordances => Self::list(),
            StrategyKind::YesNo => Self::yes_no(catalog),
            StrategyKind::YesNoLogical => Self::yes_no_logical(catalog, crate::data::OAM_LOGICAL)
                .expect("builtin logical questions are valid"),
        }
    }
}

/// Parses `affordance: and|or: q1 | q2 ...` lines.
pub fn parse_question_sets(text: &str) -> Result<BTreeMap<String, QuestionSet>, OamError> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: &str| OamError::Parse {
            line: i + 1,
            message: message.to_string(),
        };
        let mut parts = line.splitn(3, ':');
        let (Some(aff), Some(comb), Some(qs)) = (parts.next(), parts.next(), parts.next()) else {
            return Err(err("expected 'affordance: and|or: question | question'"));
        };
        let combiner = match comb.trim() {
            "and" => Combiner::And,
            "or" => Combiner::Or,
            _ => return Err(err("combiner must be 'and' or 'or'")),
        };
        let questions: Vec<String> = qs
            .split('|')
            .map(str::trim)
            .filter(|q| !q.is_empty())
            .map(str::to_string)
            .collect();
        if questions.is_empty() {
            return Err(err("no questions"));
        }
        if out.insert(aff.trim().to_string(), QuestionSet { combiner, questions }).is_some() {
            return Err(err("duplicate affordance"));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GeneratedOam {
    pub oam: Oam,
    pub warnings: Vec<String>,
}

enum Job {
    List(usize),
    YesNo(usize, String),
}

fn catalog_listing(catalog: &AffordanceCatalog) -> String {
    catalog
        .entries()
        .iter()
        .map(|a| format!("{}: {}", a.name, a.description))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Queries the LLM for the affordances of every class. Queries run on up
/// to `parallelism` threads; results are assembled in input order, so the
/// outcome does not depend on scheduling.
pub fn generate_oam(
    classes: &[ObjectClass],
    catalog: &AffordanceCatalog,
    strategy: &OamStrategy,
    llm: &LlmHandle,
    parallelism: usize,
) -> Result<GeneratedOam, OamError> {
    if catalog.is_empty() {
        return Err(OamError::EmptyCatalog);
    }
    let jobs: Vec<Job> = match strategy.kind {
        StrategyKind::ListAffordances => (0..classes.len()).map(Job::List).collect(),
        StrategyKind::YesNo | StrategyKind::YesNoLogical => {
            let mut jobs = Vec::new();
            for ci in 0..classes.len() {
                for a in catalog.entries() {
                    if !strategy.questions.contains_key(&a.name) {
                        return Err(OamError::MissingQuestion(a.name.clone()));
                    }
                    jobs.push(Job::YesNo(ci, a.name.clone()));
                }
            }
            jobs
        }
    };
    let listing = catalog_listing(catalog);

    let run = |job: &Job| -> Result<(BTreeSet<String>, Vec<String>), LlmError> {
        let mut warnings = Vec::new();
        match job {
            Job::List(ci) => {
                let class = &classes[*ci];
                let s = slots([("catalog", listing.clone()), ("class", class.to_string())]);
                let answer = llm.complete(templates::OAM_LIST, &s)?;
                let mut affs = BTreeSet::new();
                for name in parse_list(&answer) {
                    if catalog.contains(&name) {
                        affs.insert(name);
                    } else {
                        warnings.push(format!("{class}: dropped unknown affordance '{name}'"));
                    }
                }
                Ok((affs, warnings))
            }
            Job::YesNo(ci, aff) => {
                let class = &classes[*ci];
                let set = &strategy.questions[aff];
                let mut answers = Vec::with_capacity(set.questions.len());
                for q in &set.questions {
                    let s = slots([("class", class.to_string()), ("question", q.clone())]);
                    let answer = llm.complete(templates::OAM_YESNO, &s)?;
                    let yes = parse_yes_no(&answer).unwrap_or_else(|| {
                        warnings.push(format!("{class}/{aff}: unparseable answer {answer:?} read as no"));
                        false
                    });
                    answers.push(yes);
                    // short-circuit like the combiner would
                    match (set.combiner, yes) {
                        (Combiner::And, false) | (Combiner::Or, true) => break,
                        _ => {}
                    }
                }
                let holds = match set.combiner {
                    Combiner::And => answers.iter().all(|&b| b),
                    Combiner::Or => answers.iter().any(|&b| b),
                };
                Ok((if holds { BTreeSet::from([aff.clone()]) } else { BTreeSet::new() }, warnings))
            }
        }
    };

    let workers = parallelism.max(1).min(jobs.len().max(1));
    let results: Vec<Result<(BTreeSet<String>, Vec<String>), LlmError>> = if workers == 1 {
        jobs.iter().map(run).collect()
    } else {
        let next = std::sync::atomic::AtomicUsize::new(0);
        let slots_out: Vec<std::sync::Mutex<Option<_>>> = jobs.iter().map(|_| std::sync::Mutex::new(None)).collect();
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                    if i >= jobs.len() {
                        break;
                    }
                    let r = run(&jobs[i]);
                    *slots_out[i].lock().expect("result lock") = Some(r);
                });
            }
        });
        slots_out
            .into_iter()
            .map(|m| m.into_inner().expect("result lock").expect("every job ran"))
            .collect()
    };

    let mut out = GeneratedOam::default();
    for c in classes {
        out.oam.entries.entry(c.clone()).or_default();
    }
    for (job, r) in jobs.iter().zip(results) {
        let (affs, warnings) = r?;
        let ci = match job {
            Job::List(ci) | Job::YesNo(ci, _) => *ci,
        };
        out.oam.entries.entry(classes[ci].clone()).or_default().extend(affs);
        for w in warnings {
            log::warn!("{w}");
            out.warnings.push(w);
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OamMetrics {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl OamMetrics {
    /// Zero denominators yield 0.
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let ratio = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        OamMetrics {
            tp,
            fp,
            fn_,
            precision,
            recall,
            f1,
        }
    }
}

/// Counts (class, affordance) pairs of `predicted` against `truth`.
pub fn score_oam(predicted: &Oam, truth: &Oam) -> Result<OamMetrics, OamError> {
    let p = predicted.classes();
    let t = truth.classes();
    if p != t {
        return Err(OamError::ClassMismatch {
            only_predicted: p.difference(&t).map(ToString::to_string).collect(),
            only_truth: t.difference(&p).map(ToString::to_string).collect(),
        });
    }
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for (class, pred) in &predicted.entries {
        let gold = &truth.entries[class];
        tp += pred.intersection(gold).count();
        fp += pred.difference(gold).count();
        fn_ += gold.difference(pred).count();
    }
    Ok(OamMetrics::from_counts(tp, fp, fn_))
}
