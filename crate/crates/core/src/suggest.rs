//! Substitutes for objects the task needs but the scene lacks, chosen by
//! the affordances the task actually relies on.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::llm::{parse_choice, parse_list, slots, templates, LlmError, LlmHandle};
use crate::model::{AffordanceCatalog, Memory, ObjectClass, Oam, Scene};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SuggestError {
    #[error("'{0}' is already present in the scene")]
    AlreadyPresent(String),
    #[error("rarest affordance of an empty set")]
    EmptyAffordanceSet,
    #[error("no alternative for '{missing}': the answer {answer:?} names no object in the scene")]
    Failed { missing: String, answer: String },
    #[error("no objects in the scene to substitute '{0}' with")]
    EmptyScene(String),
    #[error(transparent)]
    Llm(#[from] LlmError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuggestionPath {
    Guided,
    FallbackEmptyFilter,
    FallbackBadChoice,
}

impl SuggestionPath {
    pub fn as_str(self) -> &'static str {
        match self {
            SuggestionPath::Guided => "guided",
            SuggestionPath::FallbackEmptyFilter => "fallback-empty-filter",
            SuggestionPath::FallbackBadChoice => "fallback-bad-choice",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SuggestionOutcome {
    pub missing: ObjectClass,
    pub chosen: ObjectClass,
    pub path: SuggestionPath,
    pub relevant: BTreeSet<String>,
}

/// What "rarest" counts: distinct classes (default) or instances.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RarityCount {
    #[default]
    Classes,
    Instances,
}

fn join<T: std::fmt::Display>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

/// Asks which affordances of `missing` the task needs. Names outside
/// OAM(missing) are dropped.
pub fn relevant_affordances(
    missing: &ObjectClass,
    task: &str,
    oam: &Oam,
    llm: &LlmHandle,
) -> Result<BTreeSet<String>, SuggestError> {
    let empty = BTreeSet::new();
    let own = oam.get(missing).unwrap_or(&empty);
    let s = slots([
        ("task", task.to_string()),
        ("missing", missing.to_string()),
        ("affordances", join(own)),
    ]);
    let answer = llm.complete(templates::AFFORDANCE_RELEVANCE, &s)?;
    let mut out = BTreeSet::new();
    for name in parse_list(&answer) {
        if own.contains(&name) {
            out.insert(name);
        } else {
            log::warn!("dropping affordance '{name}': not an affordance of {missing}");
        }
    }
    Ok(out)
}

fn class_affordances(scene: &Scene, class: &ObjectClass) -> BTreeSet<String> {
    scene
        .pairs
        .iter()
        .filter(|p| &p.instance.class == class)
        .map(|p| p.affordance.clone())
        .collect()
}

/// Scene classes having every affordance in `aff_rel`.
pub fn filter_candidates(scene: &Scene, aff_rel: &BTreeSet<String>, missing: &ObjectClass) -> BTreeSet<ObjectClass> {
    scene
        .classes()
        .into_iter()
        .filter(|c| c != missing && aff_rel.is_subset(&class_affordances(scene, c)))
        .collect()
}

/// The affordance of `aff_rel` held by the fewest scene classes (or
/// instances); ties go to the smaller name.
pub fn rarest_affordance(
    aff_rel: &BTreeSet<String>,
    scene: &Scene,
    count: RarityCount,
) -> Result<String, SuggestError> {
    let tally = |aff: &str| -> usize {
        match count {
            RarityCount::Classes => scene
                .pairs
                .iter()
                .filter(|p| p.affordance == aff)
                .map(|p| &p.instance.class)
                .collect::<BTreeSet<_>>()
                .len(),
            RarityCount::Instances => scene.pairs.iter().filter(|p| p.affordance == aff).count(),
        }
    };
    // BTreeSet iterates in name order and min_by_key keeps the first minimum
    aff_rel
        .iter()
        .min_by_key(|a| tally(a))
        .cloned()
        .ok_or(SuggestError::EmptyAffordanceSet)
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SuggestConfig {
    pub rarity: RarityCount,
}

/// Finds a substitute for `missing` and records it in `memory.alternatives`.
pub fn suggest_alternative(
    missing: &ObjectClass,
    task: &str,
    memory: &mut Memory,
    oam: &Oam,
    catalog: &AffordanceCatalog,
    llm: &LlmHandle,
    config: SuggestConfig,
) -> Result<SuggestionOutcome, SuggestError> {
    let scene = &memory.scene;
    if scene.has_class(missing) {
        return Err(SuggestError::AlreadyPresent(missing.to_string()));
    }
    let all: Vec<String> = scene.classes().iter().map(ToString::to_string).collect();
    if all.is_empty() {
        return Err(SuggestError::EmptyScene(missing.to_string()));
    }

    let relevant = if oam.contains(missing) {
        relevant_affordances(missing, task, oam, llm)?
    } else {
        log::warn!("'{missing}' has no OAM entry; asking for a substitute directly");
        BTreeSet::new()
    };
    let filtered = filter_candidates(scene, &relevant, missing);

    let mut path = SuggestionPath::FallbackEmptyFilter;
    let mut chosen = None;
    if !relevant.is_empty() && !filtered.is_empty() {
        let rarest = rarest_affordance(&relevant, scene, config.rarity)?;
        let description = catalog.get(&rarest).map(|a| a.description.clone()).unwrap_or_default();
        let names: Vec<String> = filtered.iter().map(ToString::to_string).collect();
        let s = slots([
            ("task", task.to_string()),
            ("missing", missing.to_string()),
            ("affordance", rarest),
            ("description", description),
            ("candidates", names.join(", ")),
        ]);
        let answer = llm.complete(templates::SUGGEST_WITH_AFFORDANCE, &s)?;
        match parse_choice(&answer, &names) {
            Some(c) => {
                chosen = Some(c);
                path = SuggestionPath::Guided;
            }
            None => {
                log::info!("guided answer {answer:?} is not a candidate; asking directly");
                path = SuggestionPath::FallbackBadChoice;
            }
        }
    }
    let chosen = match chosen {
        Some(c) => c,
        None => {
            let s = slots([
                ("task", task.to_string()),
                ("missing", missing.to_string()),
                ("candidates", all.join(", ")),
            ]);
            let answer = llm.complete(templates::SUGGEST_DIRECT, &s)?;
            parse_choice(&answer, &all).ok_or_else(|| SuggestError::Failed {
                missing: missing.to_string(),
                answer: answer.trim().to_string(),
            })?
        }
    };
    let chosen = ObjectClass::new(chosen);
    memory.alternatives.insert(missing.clone(), chosen.clone());
    Ok(SuggestionOutcome {
        missing: missing.clone(),
        chosen,
        path,
        relevant,
    })
}
