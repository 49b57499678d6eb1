//! Symbolic scene, affordance and memory types shared by the whole pipeline.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pddl::Atom;
use crate::planner::Plan;

/// A scene relation such as `on sponge0 table0`.
pub type Relation = Atom;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("unknown object class '{0}'")]
    UnknownClass(String),
    #[error("instance name '{name}' is claimed by classes '{existing}' and '{incoming}'")]
    Conflict {
        name: String,
        existing: String,
        incoming: String,
    },
    #[error("invalid identifier '{0}'")]
    InvalidName(String),
    #[error("bounding box coordinate {0} is outside [0, 1]")]
    InvalidBBox(f64),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("affordance '{0}' is not in the catalog")]
    UnknownAffordance(String),
    #[error("agent '{0}': {1}")]
    InvalidAgent(String, String),
}

fn valid_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-' || c == '_')
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Affordance {
    pub name: String,
    pub description: String,
    /// Part of the subset used by the planning domain.
    pub planning: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AffordanceCatalog {
    entries: Vec<Affordance>,
}

impl AffordanceCatalog {
    pub fn new(entries: Vec<Affordance>) -> Result<Self, ModelError> {
        let mut seen = BTreeSet::new();
        for e in &entries {
            if !valid_identifier(&e.name) || !seen.insert(e.name.clone()) {
                return Err(ModelError::InvalidName(e.name.clone()));
            }
        }
        Ok(AffordanceCatalog { entries })
    }

    /// Parses `name<TAB>planning|-<TAB>description` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let mut cols = line.splitn(3, '\t');
            let (Some(name), Some(flag), Some(desc)) = (cols.next(), cols.next(), cols.next())
            else {
                return Err(ModelError::Parse {
                    line: i + 1,
                    message: "expected three tab-separated columns".into(),
                });
            };
            let planning = match flag.trim() {
                "planning" => true,
                "-" => false,
                other => {
                    return Err(ModelError::Parse {
                        line: i + 1,
                        message: format!("unknown flag '{other}'"),
                    })
                }
            };
            entries.push(Affordance {
                name: name.trim().to_string(),
                description: desc.trim().to_string(),
                planning,
            });
        }
        Self::new(entries)
    }

    pub fn builtin() -> Self {
        Self::parse(crate::data::AFFORDANCES).expect("builtin affordance catalog is valid")
    }

    pub fn entries(&self) -> &[Affordance] {
        &self.entries
    }

    pub fn planning_subset(&self) -> AffordanceCatalog {
        AffordanceCatalog {
            entries: self.entries.iter().filter(|a| a.planning).cloned().collect(),
        }
    }

    pub fn get(&self, name: &str) -> Option<&Affordance> {
        self.entries.iter().find(|a| a.name == name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.get(name).is_some()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectClass(String);

impl ObjectClass {
    pub fn new(name: impl Into<String>) -> Self {
        ObjectClass(name.into())
    }

    /// Class names may not end in a digit so that `<class><index>` stays unambiguous.
    pub fn parse(name: &str) -> Result<Self, ModelError> {
        if valid_identifier(name) && !name.ends_with(|c: char| c.is_ascii_digit()) {
            Ok(ObjectClass(name.to_string()))
        } else {
            Err(ModelError::InvalidName(name.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ObjectClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ObjectInstance {
    pub class: ObjectClass,
    pub index: u32,
}

impl ObjectInstance {
    pub fn new(class: impl Into<String>, index: u32) -> Self {
        ObjectInstance {
            class: ObjectClass::new(class),
            index,
        }
    }

    pub fn name(&self) -> String {
        format!("{}{}", self.class, self.index)
    }

    /// Splits `coffee_cup0` into class `coffee_cup` and index `0`.
    pub fn parse(name: &str) -> Result<Self, ModelError> {
        let split = name.trim_end_matches(|c: char| c.is_ascii_digit()).len();
        if split == name.len() || split == 0 {
            return Err(ModelError::InvalidName(name.to_string()));
        }
        let class = ObjectClass::parse(&name[..split])?;
        let index = name[split..]
            .parse()
            .map_err(|_| ModelError::InvalidName(name.to_string()))?;
        Ok(ObjectInstance { class, index })
    }
}

impl fmt::Display for ObjectInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.class, self.index)
    }
}

/// Normalized `x, y, w, h`. Carried through for completeness; planning ignores it.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BBox(pub [f64; 4]);

impl BBox {
    pub fn new(coords: [f64; 4]) -> Result<Self, ModelError> {
        for c in coords {
            if !(0.0..=1.0).contains(&c) {
                return Err(ModelError::InvalidBBox(c));
            }
        }
        Ok(BBox(coords))
    }
}

impl PartialEq for BBox {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for BBox {}

impl PartialOrd for BBox {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for BBox {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    }
}

/// Identity is `(instance, affordance)`; the bounding box is payload.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ObjectAffordancePair {
    pub instance: ObjectInstance,
    pub affordance: String,
    pub bbox: Option<BBox>,
}

impl ObjectAffordancePair {
    pub fn new(instance: ObjectInstance, affordance: impl Into<String>) -> Self {
        ObjectAffordancePair {
            instance,
            affordance: affordance.into(),
            bbox: None,
        }
    }

    fn key(&self) -> (&ObjectInstance, &str) {
        (&self.instance, &self.affordance)
    }
}

impl PartialEq for ObjectAffordancePair {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for ObjectAffordancePair {}

impl PartialOrd for ObjectAffordancePair {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ObjectAffordancePair {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scene {
    pub pairs: BTreeSet<ObjectAffordancePair>,
}

impl Scene {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn instances(&self) -> BTreeSet<ObjectInstance> {
        self.pairs.iter().map(|p| p.instance.clone()).collect()
    }

    pub fn instance_names(&self) -> BTreeSet<String> {
        self.pairs.iter().map(|p| p.instance.name()).collect()
    }

    pub fn classes(&self) -> BTreeSet<ObjectClass> {
        self.pairs.iter().map(|p| p.instance.class.clone()).collect()
    }

    pub fn has_class(&self, class: &ObjectClass) -> bool {
        self.pairs.iter().any(|p| &p.instance.class == class)
    }

    pub fn contains_instance(&self, name: &str) -> bool {
        self.pairs.iter().any(|p| p.instance.name() == name)
    }

    pub fn affordances_of(&self, instance: &ObjectInstance) -> BTreeSet<String> {
        self.pairs
            .iter()
            .filter(|p| &p.instance == instance)
            .map(|p| p.affordance.clone())
            .collect()
    }
}

/// `S <- S ∪ observed`. Fails when one rendered name would denote two classes.
pub fn merge_observation(
    scene: &Scene,
    observed: impl IntoIterator<Item = ObjectAffordancePair>,
) -> Result<Scene, ModelError> {
    let mut by_name: BTreeMap<String, ObjectClass> = scene
        .pairs
        .iter()
        .map(|p| (p.instance.name(), p.instance.class.clone()))
        .collect();
    let mut out = scene.clone();
    for pair in observed {
        let name = pair.instance.name();
        match by_name.get(&name) {
            Some(c) if c != &pair.instance.class => {
                return Err(ModelError::Conflict {
                    name,
                    existing: c.to_string(),
                    incoming: pair.instance.class.to_string(),
                })
            }
            Some(_) => {}
            None => {
                by_name.insert(name, pair.instance.class.clone());
            }
        }
        if !out.pairs.contains(&pair) {
            out.pairs.insert(pair);
        }
    }
    Ok(out)
}

/// One pair per `(instance, affordance)` with the affordance taken from the OAM.
pub fn instantiate_scene(instances: &[ObjectInstance], oam: &Oam) -> Result<Scene, ModelError> {
    let mut scene = Scene::new();
    for inst in instances {
        for aff in oam.get(&inst.class)? {
            scene
                .pairs
                .insert(ObjectAffordancePair::new(inst.clone(), aff.clone()));
        }
    }
    Ok(scene)
}

/// Object-affordance mapping: class -> affordance names.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Oam {
    pub entries: BTreeMap<ObjectClass, BTreeSet<String>>,
}

impl Oam {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert<I, S>(&mut self, class: impl Into<String>, affordances: I)
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.entries.insert(
            ObjectClass::new(class),
            affordances.into_iter().map(Into::into).collect(),
        );
    }

    pub fn get(&self, class: &ObjectClass) -> Result<&BTreeSet<String>, ModelError> {
        self.entries
            .get(class)
            .ok_or_else(|| ModelError::UnknownClass(class.to_string()))
    }

    pub fn contains(&self, class: &ObjectClass) -> bool {
        self.entries.contains_key(class)
    }

    pub fn classes(&self) -> BTreeSet<ObjectClass> {
        self.entries.keys().cloned().collect()
    }

    /// Entries of `other` replace entries of `self` with the same class.
    pub fn overlay(&mut self, other: &Oam) {
        for (k, v) in &other.entries {
            self.entries.insert(k.clone(), v.clone());
        }
    }

    pub fn validate(&self, catalog: &AffordanceCatalog) -> Result<(), ModelError> {
        for affs in self.entries.values() {
            if let Some(a) = affs.iter().find(|a| !catalog.contains(a)) {
                return Err(ModelError::UnknownAffordance(a.clone()));
            }
        }
        Ok(())
    }

    /// One record per class: `class: aff1, aff2`.
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let mut oam = Oam::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (class, rest) = line.split_once(':').ok_or_else(|| ModelError::Parse {
                line: i + 1,
                message: "expected 'class: aff1, aff2'".into(),
            })?;
            let class = ObjectClass::parse(class.trim()).map_err(|e| ModelError::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            let affs: BTreeSet<String> = rest
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect();
            if oam.entries.insert(class.clone(), affs).is_some() {
                return Err(ModelError::Parse {
                    line: i + 1,
                    message: format!("duplicate class '{class}'"),
                });
            }
        }
        Ok(oam)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (class, affs) in &self.entries {
            out.push_str(class.as_str());
            out.push(':');
            let list: Vec<&str> = affs.iter().map(String::as_str).collect();
            if !list.is_empty() {
                out.push(' ');
                out.push_str(&list.join(", "));
            }
            out.push('\n');
        }
        out
    }

    pub fn builtin() -> Self {
        Self::parse(crate::data::OAM).expect("builtin OAM is valid")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Location {
    pub name: String,
    pub explored: bool,
    /// Class of the location when it is itself an object (e.g. a table).
    pub class: Option<ObjectClass>,
}

impl Location {
    pub fn new(name: impl Into<String>) -> Self {
        Location {
            name: name.into(),
            explored: false,
            class: None,
        }
    }

    pub fn instance(&self) -> Option<ObjectInstance> {
        self.class.as_ref()?;
        ObjectInstance::parse(&self.name).ok()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    Robot,
    Human,
}

impl AgentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::Robot => "robot",
            AgentKind::Human => "human",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentProfile {
    pub name: String,
    pub kind: AgentKind,
    pub capabilities: BTreeSet<String>,
    pub cost: u64,
    /// Hand identifiers in order of preference.
    pub hands: Vec<String>,
}

impl AgentProfile {
    pub fn new<I, S>(name: &str, kind: AgentKind, capabilities: I, cost: u64) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        AgentProfile {
            name: name.to_string(),
            kind,
            capabilities: capabilities.into_iter().map(Into::into).collect(),
            cost,
            hands: vec!["left".into(), "right".into()],
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.cost < 1 {
            return Err(ModelError::InvalidAgent(self.name.clone(), "cost must be >= 1".into()));
        }
        if self.capabilities.is_empty() {
            return Err(ModelError::InvalidAgent(
                self.name.clone(),
                "at least one capability is required".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "origin", content = "text", rename_all = "lowercase")]
pub enum HistoryEntry {
    User(String),
    System(String),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Memory {
    pub scene: Scene,
    pub relations: BTreeSet<Relation>,
    pub locations: Vec<Location>,
    pub agent_locations: BTreeMap<String, String>,
    pub instruction_history: Vec<HistoryEntry>,
    /// missing class -> substitute present in the scene
    pub alternatives: BTreeMap<ObjectClass, ObjectClass>,
    pub last_plan: Option<Plan>,
}

impl Memory {
    pub fn location(&self, name: &str) -> Option<&Location> {
        self.locations.iter().find(|l| l.name == name)
    }

    pub fn location_mut(&mut self, name: &str) -> Option<&mut Location> {
        self.locations.iter_mut().find(|l| l.name == name)
    }

    pub fn is_location(&self, name: &str) -> bool {
        self.location(name).is_some() || self.agent_locations.contains_key(name)
    }

    /// Every entity name memory knows about: scene instances, locations, agents.
    pub fn known_entities(&self) -> BTreeSet<String> {
        let mut out = self.scene.instance_names();
        out.extend(self.locations.iter().map(|l| l.name.clone()));
        out.extend(self.agent_locations.keys().cloned());
        out.extend(self.agent_locations.values().cloned());
        out
    }

    /// Where an instance currently is, following on/in/liquid_in/inhand chains.
    pub fn placement_of(&self, entity: &str) -> Option<String> {
        let mut current = entity.to_string();
        for _ in 0..16 {
            if current != entity && (self.location(&current).is_some()) {
                return Some(current);
            }
            if current != entity && self.agent_locations.contains_key(&current) {
                return Some(format!("held by {current}"));
            }
            let next = self.relations.iter().find_map(|r| match r.predicate.as_str() {
                "on" | "in" | "liquid_in" | "inhand" if r.args.len() == 2 && r.args[0] == current => {
                    Some(r.args[1].clone())
                }
                _ => None,
            })?;
            current = next;
        }
        None
    }
}

/// Deterministic natural-language rendering of memory for prompts.
pub fn verbalize_memory(memory: &Memory, agents: &[AgentProfile]) -> String {
    let mut out = String::new();
    let location_names: BTreeSet<&str> = memory.locations.iter().map(|l| l.name.as_str()).collect();
    let mut grouped: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for inst in memory.scene.instance_names() {
        if location_names.contains(inst.as_str()) {
            continue;
        }
        let place = memory
            .placement_of(&inst)
            .unwrap_or_else(|| "unknown location".to_string());
        grouped.entry(place).or_default().insert(inst);
    }
    out.push_str("Objects:\n");
    if grouped.is_empty() {
        out.push_str("  No objects observed.\n");
    }
    for (place, insts) in &grouped {
        let list: Vec<&str> = insts.iter().map(String::as_str).collect();
        out.push_str(&format!("  {place}: {}\n", list.join(", ")));
    }

    out.push_str("Relations:\n");
    if memory.relations.is_empty() {
        out.push_str("  None\n");
    }
    for r in &memory.relations {
        out.push_str(&format!("  {}\n", r.to_plain()));
    }

    out.push_str("Locations:\n");
    let mut locs: Vec<&Location> = memory.locations.iter().collect();
    locs.sort_by(|a, b| a.name.cmp(&b.name));
    if locs.is_empty() {
        out.push_str("  None\n");
    }
    for l in locs {
        let state = if l.explored { "explored" } else { "unexplored" };
        out.push_str(&format!("  {} ({state})\n", l.name));
    }

    out.push_str("Agents:\n");
    let mut sorted: Vec<&AgentProfile> = agents.iter().collect();
    sorted.sort_by(|a, b| a.name.cmp(&b.name));
    for a in sorted {
        let caps: Vec<&str> = a.capabilities.iter().map(String::as_str).collect();
        match memory.agent_locations.get(&a.name) {
            Some(l) => out.push_str(&format!(
                "  {} is at {l} ({}; capabilities: {})\n",
                a.name,
                a.kind.as_str(),
                caps.join(", ")
            )),
            None => out.push_str(&format!(
                "  {} has no known position ({}; capabilities: {})\n",
                a.name,
                a.kind.as_str(),
                caps.join(", ")
            )),
        }
    }

    out.push_str("Known alternatives:\n");
    if memory.alternatives.is_empty() {
        out.push_str("  None\n");
    }
    for (missing, alt) in &memory.alternatives {
        out.push_str(&format!("  {missing} -> {alt}\n"));
    }

    out.push_str("Last plan:\n");
    match &memory.last_plan {
        None => out.push_str("  None\n"),
        Some(p) if p.steps.is_empty() => out.push_str("  (empty plan)\n"),
        Some(p) => {
            for s in &p.steps {
                out.push_str(&format!("  {s}\n"));
            }
        }
    }

    let notes: Vec<&str> = memory
        .instruction_history
        .iter()
        .filter_map(|h| match h {
            HistoryEntry::System(s) => Some(s.as_str()),
            HistoryEntry::User(_) => None,
        })
        .collect();
    if !notes.is_empty() {
        out.push_str("Notes:\n");
        for n in notes {
            out.push_str(&format!("  {n}\n"));
        }
    }
    out
}
