//! Line-oriented scenario files.
//!
//! ```text
//! [ID]            b1-pick-and-place
//! [TASK]          free text
//! [SUBSET]        optional evaluation subset
//! [LOCATIONS]     <name> [<class>]            one per line
//! [EXPLORED]      location names known from the start
//! [AGENTS]        <name> robot|human cost=<n> caps=a,b [hands=l,r] [at=<location>]
//! [OBJECTS]       <location>: <instance> ...  hidden world contents
//! [RELATIONS]     one atom per line, e.g. `on sponge0 table0`
//! [GOAL]          reference goal formula
//! [OPTIMAL_TOOLS] annotated minimal tool count
//! [ALTERNATIVES]  <missing>: <allowed>, ...
//! [OAM]           <class>: <aff>, ...         overrides of the default OAM
//! [SCRIPT]        @<template> [contains="..."] [reusable], response on the following lines
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use thiserror::Error;

use crate::llm::ScriptEntry;
use crate::model::{
    instantiate_scene, AgentKind, AgentProfile, Location, Memory, ModelError, ObjectClass, ObjectInstance, Oam,
};
use crate::pddl::{parse_plain_formula, Atom, Formula};
use crate::simulator::World;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line} [{section}]: {message}")]
    Parse {
        line: usize,
        section: String,
        message: String,
    },
    #[error("[{field}]: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        field: field.to_string(),
        message: message.into(),
    }
}

const SECTIONS: [&str; 13] = [
    "ID",
    "TASK",
    "SUBSET",
    "LOCATIONS",
    "EXPLORED",
    "AGENTS",
    "OBJECTS",
    "RELATIONS",
    "GOAL",
    "OPTIMAL_TOOLS",
    "ALTERNATIVES",
    "OAM",
    "SCRIPT",
];

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub id: String,
    pub task: String,
    pub subset: Option<String>,
    /// Declared locations; `explored` marks those known from the start.
    pub locations: Vec<Location>,
    pub agents: Vec<AgentProfile>,
    pub agent_starts: BTreeMap<String, String>,
    pub placement: BTreeMap<String, Vec<ObjectInstance>>,
    pub relations: BTreeSet<Atom>,
    pub goal: Formula,
    pub optimal_tools: Option<usize>,
    pub alternatives: BTreeMap<ObjectClass, BTreeSet<ObjectClass>>,
    pub oam: Oam,
    pub script: Vec<ScriptEntry>,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn save(&self, path: &Path) -> Result<(), ScenarioError> {
        std::fs::write(path, self.render()).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// Full scenario: task and reference goal are required.
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        parse(text, true)
    }

    /// World-only file (for interactive use): task and goal may be absent.
    pub fn parse_world(text: &str) -> Result<Self, ScenarioError> {
        parse(text, false)
    }

    /// Default OAM with this scenario's overrides.
    pub fn effective_oam(&self) -> Oam {
        let mut oam = Oam::builtin();
        oam.overlay(&self.oam);
        oam
    }

    /// Hidden ground truth, including empty hands for every agent hand not
    /// holding something.
    pub fn world(&self) -> World {
        let mut relations = self.relations.clone();
        for a in &self.agents {
            for h in &a.hands {
                let busy = self
                    .relations
                    .iter()
                    .any(|r| r.predicate == "holding" && r.args.len() == 3 && r.args[0] == a.name && &r.args[1] == h);
                if !busy {
                    relations.insert(Atom::new("handempty", [a.name.as_str(), h.as_str()]));
                }
            }
        }
        World {
            placement: self.placement.clone(),
            relations,
            agent_starts: self.agent_starts.clone(),
            oam: self.effective_oam(),
        }
    }

    fn location_instances(&self) -> Vec<ObjectInstance> {
        self.locations.iter().filter_map(Location::instance).collect()
    }

    /// Memory at the start of a run: location objects and the contents of
    /// explored locations are visible; relations among visible entities are known.
    pub fn initial_memory(&self) -> Result<Memory, ModelError> {
        let explored: BTreeSet<&str> = self
            .locations
            .iter()
            .filter(|l| l.explored)
            .map(|l| l.name.as_str())
            .collect();
        self.memory_with(|loc| explored.contains(loc), self.locations.clone(), self.agent_starts.clone())
    }

    /// Everything revealed, agents at the given positions.
    pub fn revealed_memory(&self, agent_locations: BTreeMap<String, String>) -> Result<Memory, ModelError> {
        let mut locations = self.locations.clone();
        for l in &mut locations {
            l.explored = true;
        }
        self.memory_with(|_| true, locations, agent_locations)
    }

    fn memory_with(
        &self,
        visible: impl Fn(&str) -> bool,
        locations: Vec<Location>,
        agent_locations: BTreeMap<String, String>,
    ) -> Result<Memory, ModelError> {
        let world = self.world();
        let mut seen = self.location_instances();
        for (loc, insts) in &self.placement {
            if visible(loc) {
                seen.extend(insts.iter().cloned());
            }
        }
        let mut memory = Memory {
            scene: instantiate_scene(&seen, &world.oam)?,
            locations,
            agent_locations,
            ..Memory::default()
        };
        let mut known = memory.known_entities();
        known.extend(self.agents.iter().map(|a| a.name.clone()));
        known.extend(self.agents.iter().flat_map(|a| a.hands.iter().cloned()));
        memory.relations = world
            .relations
            .iter()
            .filter(|r| r.args.iter().all(|a| known.contains(a)))
            .cloned()
            .collect();
        Ok(memory)
    }

    /// Every entity name of the world: objects, locations, agents and hands.
    pub fn entities(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self.placement.values().flatten().map(ObjectInstance::name).collect();
        out.extend(self.locations.iter().map(|l| l.name.clone()));
        out.extend(self.agents.iter().map(|a| a.name.clone()));
        out.extend(self.agents.iter().flat_map(|a| a.hands.iter().cloned()));
        out
    }

    /// Classes that occur in the world.
    pub fn classes(&self) -> BTreeSet<ObjectClass> {
        self.placement
            .values()
            .flatten()
            .map(|i| i.class.clone())
            .chain(self.locations.iter().filter_map(|l| l.class.clone()))
            .collect()
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let loc_names: BTreeSet<&str> = self.locations.iter().map(|l| l.name.as_str()).collect();
        if loc_names.len() != self.locations.len() {
            return Err(invalid("LOCATIONS", "duplicate location"));
        }
        if self.agents.is_empty() {
            return Err(invalid("AGENTS", "at least one agent is required"));
        }
        let agent_names: BTreeSet<&str> = self.agents.iter().map(|a| a.name.as_str()).collect();
        for a in &self.agents {
            a.validate().map_err(|e| invalid("AGENTS", e.to_string()))?;
        }
        for (agent, at) in &self.agent_starts {
            if !loc_names.contains(at.as_str()) && !agent_names.contains(at.as_str()) {
                return Err(invalid("AGENTS", format!("{agent} starts at unknown location '{at}'")));
            }
        }
        let mut seen = BTreeSet::new();
        for (loc, insts) in &self.placement {
            if !loc_names.contains(loc.as_str()) {
                return Err(invalid("OBJECTS", format!("unknown location '{loc}'")));
            }
            for i in insts {
                if !seen.insert(i.name()) || loc_names.contains(i.name().as_str()) {
                    return Err(invalid("OBJECTS", format!("'{i}' is declared twice")));
                }
            }
        }
        let oam = self.effective_oam();
        for c in self.classes() {
            if !oam.contains(&c) {
                return Err(invalid("OAM", format!("class '{c}' has no OAM entry")));
            }
        }
        let entities = self.entities();
        for r in &self.relations {
            if let Some(a) = r.args.iter().find(|a| !entities.contains(*a)) {
                return Err(invalid("RELATIONS", format!("'{a}' in {r} is not part of the world")));
            }
        }
        let classes = self.classes();
        for (missing, allowed) in &self.alternatives {
            if classes.contains(missing) {
                return Err(invalid("ALTERNATIVES", format!("'{missing}' is present in the world")));
            }
            if let Some(a) = allowed.iter().find(|a| !classes.contains(*a)) {
                return Err(invalid("ALTERNATIVES", format!("allowed class '{a}' is not in the world")));
            }
        }
        for atom in self.goal.atoms() {
            for arg in &atom.args {
                let stands_in = ObjectInstance::parse(arg)
                    .map(|i| self.alternatives.contains_key(&i.class))
                    .unwrap_or(false);
                if !entities.contains(arg) && !stands_in {
                    return Err(invalid("GOAL", format!("'{arg}' is not part of the world")));
                }
            }
        }
        Ok(())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut section = |name: &str, body: String| {
            out.push_str(&format!("[{name}]\n{body}"));
            if !body.is_empty() && !body.ends_with('\n') {
                out.push('\n');
            }
            out.push('\n');
        };
        section("ID", self.id.clone());
        section("TASK", self.task.clone());
        if let Some(s) = &self.subset {
            section("SUBSET", s.clone());
        }
        section(
            "LOCATIONS",
            self.locations
                .iter()
                .map(|l| match &l.class {
                    Some(c) => format!("{} {c}\n", l.name),
                    None => format!("{}\n", l.name),
                })
                .collect(),
        );
        let explored: Vec<&str> = self
            .locations
            .iter()
            .filter(|l| l.explored)
            .map(|l| l.name.as_str())
            .collect();
        if !explored.is_empty() {
            section("EXPLORED", explored.join(" "));
        }
        section(
            "AGENTS",
            self.agents
                .iter()
                .map(|a| {
                    let caps: Vec<&str> = a.capabilities.iter().map(String::as_str).collect();
                    let mut line = format!(
                        "{} {} cost={} caps={} hands={}",
                        a.name,
                        a.kind.as_str(),
                        a.cost,
                        caps.join(","),
                        a.hands.join(",")
                    );
                    if let Some(at) = self.agent_starts.get(&a.name) {
                        line.push_str(&format!(" at={at}"));
                    }
                    line + "\n"
                })
                .collect(),
        );
        if !self.placement.is_empty() {
            section(
                "OBJECTS",
                self.placement
                    .iter()
                    .map(|(l, insts)| {
                        let names: Vec<String> = insts.iter().map(ObjectInstance::name).collect();
                        format!("{l}: {}\n", names.join(" "))
                    })
                    .collect(),
            );
        }
        if !self.relations.is_empty() {
            section(
                "RELATIONS",
                self.relations.iter().map(|r| format!("{}\n", r.to_plain())).collect(),
            );
        }
        section("GOAL", self.goal.to_pddl());
        if let Some(n) = self.optimal_tools {
            section("OPTIMAL_TOOLS", n.to_string());
        }
        if !self.alternatives.is_empty() {
            section(
                "ALTERNATIVES",
                self.alternatives
                    .iter()
                    .map(|(m, allowed)| {
                        let list: Vec<&str> = allowed.iter().map(ObjectClass::as_str).collect();
                        format!("{m}: {}\n", list.join(", "))
                    })
                    .collect(),
            );
        }
        if !self.oam.entries.is_empty() {
            section("OAM", self.oam.render());
        }
        if !self.script.is_empty() {
            let mut body = String::new();
            for e in &self.script {
                body.push('@');
                body.push_str(&e.template);
                for c in &e.contains {
                    body.push_str(&format!(" contains=\"{}\"", c.replace('\\', "\\\\").replace('"', "\\\"")));
                }
                if !e.consume_once {
                    body.push_str(" reusable");
                }
                body.push('\n');
                for line in e.response.split('\n') {
                    if line.starts_with(['@', '[', '\\']) {
                        body.push('\\');
                    }
                    body.push_str(line);
                    body.push('\n');
                }
            }
            section("SCRIPT", body);
        }
        out
    }
}

fn section_header(line: &str) -> Option<&'static str> {
    let name = line.trim().strip_prefix('[')?.strip_suffix(']')?;
    SECTIONS.iter().find(|s| **s == name).copied()
}

struct Body<'a> {
    name: &'static str,
    lines: Vec<(usize, &'a str)>,
}

impl Body<'_> {
    fn err(&self, line: usize, message: impl Into<String>) -> ScenarioError {
        ScenarioError::Parse {
            line,
            section: self.name.to_string(),
            message: message.into(),
        }
    }

    /// Non-empty, non-comment lines.
    fn content(&self) -> impl Iterator<Item = (usize, &str)> {
        self.lines
            .iter()
            .map(|(n, l)| (*n, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
    }

    fn text(&self) -> String {
        self.content().map(|(_, l)| l).collect::<Vec<_>>().join(" ")
    }

    fn first_line(&self) -> usize {
        self.lines.first().map(|(n, _)| *n).unwrap_or(0)
    }
}

fn split_sections(text: &str) -> Result<BTreeMap<&'static str, Body<'_>>, ScenarioError> {
    let mut out: BTreeMap<&'static str, Body> = BTreeMap::new();
    let mut current: Option<&'static str> = None;
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        if let Some(name) = section_header(line) {
            if out.contains_key(name) {
                return Err(ScenarioError::Parse {
                    line: n,
                    section: name.into(),
                    message: "section appears twice".into(),
                });
            }
            out.insert(name, Body { name, lines: Vec::new() });
            current = Some(name);
            continue;
        }
        match current {
            Some(name) => out.get_mut(name).expect("section exists").lines.push((n, line)),
            None if line.trim().is_empty() || line.trim().starts_with('#') => {}
            None => {
                return Err(ScenarioError::Parse {
                    line: n,
                    section: "-".into(),
                    message: format!("text outside any section: '{}'", line.trim()),
                })
            }
        }
    }
    Ok(out)
}

fn parse_agent(body: &Body, n: usize, line: &str) -> Result<(AgentProfile, Option<String>), ScenarioError> {
    let mut words = line.split_whitespace();
    let name = words.next().ok_or_else(|| body.err(n, "missing agent name"))?;
    let kind = match words.next() {
        Some("robot") => AgentKind::Robot,
        Some("human") => AgentKind::Human,
        other => return Err(body.err(n, format!("agent kind must be robot or human, found {other:?}"))),
    };
    let mut agent = AgentProfile::new(name, kind, Vec::<String>::new(), 1);
    let mut at = None;
    for w in words {
        let (k, v) = w
            .split_once('=')
            .ok_or_else(|| body.err(n, format!("expected key=value, found '{w}'")))?;
        let list = || v.split(',').filter(|s| !s.is_empty()).map(str::to_string);
        match k {
            "cost" => agent.cost = v.parse().map_err(|_| body.err(n, format!("bad cost '{v}'")))?,
            "caps" => agent.capabilities = list().collect(),
            "hands" => agent.hands = list().collect(),
            "at" => at = Some(v.to_string()),
            _ => return Err(body.err(n, format!("unknown agent field '{k}'"))),
        }
    }
    Ok((agent, at))
}

fn parse_atom_line(body: &Body, n: usize, line: &str) -> Result<Atom, ScenarioError> {
    match parse_plain_formula(line) {
        Ok(Formula::Atom(a)) => Ok(a),
        Ok(_) => Err(body.err(n, "expected a single atom")),
        Err(e) => Err(body.err(n, e.to_string())),
    }
}

fn unquote_args(body: &Body, n: usize, rest: &str) -> Result<(Vec<String>, bool), ScenarioError> {
    let mut contains = Vec::new();
    let mut reusable = false;
    let mut chars = rest.chars().peekable();
    loop {
        while chars.peek().is_some_and(|c| c.is_whitespace()) {
            chars.next();
        }
        if chars.peek().is_none() {
            break;
        }
        let word: String = std::iter::from_fn(|| chars.next_if(|c| !c.is_whitespace() && *c != '=')).collect();
        match word.as_str() {
            "reusable" => reusable = true,
            "contains" => {
                if chars.next() != Some('=') || chars.next() != Some('"') {
                    return Err(body.err(n, "expected contains=\"...\""));
                }
                let mut value = String::new();
                loop {
                    match chars.next() {
                        Some('\\') => value.extend(chars.next()),
                        Some('"') => break,
                        Some(c) => value.push(c),
                        None => return Err(body.err(n, "unterminated quote")),
                    }
                }
                contains.push(value);
            }
            other => return Err(body.err(n, format!("unknown script option '{other}'"))),
        }
    }
    Ok((contains, reusable))
}

fn parse_script(body: &Body) -> Result<Vec<ScriptEntry>, ScenarioError> {
    let mut entries: Vec<(ScriptEntry, Vec<&str>)> = Vec::new();
    for (n, line) in &body.lines {
        if let Some(header) = line.strip_prefix('@') {
            let (template, rest) = header.split_once(char::is_whitespace).unwrap_or((header, ""));
            let (contains, reusable) = unquote_args(body, *n, rest)?;
            let mut e = ScriptEntry::new(template.trim(), "");
            e.contains = contains;
            e.consume_once = !reusable;
            entries.push((e, Vec::new()));
        } else if let Some((_, lines)) = entries.last_mut() {
            lines.push(line.strip_prefix('\\').unwrap_or(line));
        } else if !line.trim().is_empty() && !line.trim().starts_with('#') {
            return Err(body.err(*n, "response text before the first @template line"));
        }
    }
    Ok(entries
        .into_iter()
        .map(|(mut e, mut lines)| {
            while lines.last().is_some_and(|l| l.trim().is_empty()) {
                lines.pop();
            }
            e.response = lines.join("\n");
            e
        })
        .collect())
}

/// Parses a standalone LLM script in the `[SCRIPT]` section syntax.
pub fn parse_script_text(text: &str) -> Result<Vec<ScriptEntry>, ScenarioError> {
    let body = Body {
        name: "SCRIPT",
        lines: text.lines().enumerate().map(|(i, l)| (i + 1, l)).collect(),
    };
    parse_script(&body)
}

fn parse(text: &str, require_task: bool) -> Result<Scenario, ScenarioError> {
    let sections = split_sections(text)?;
    let get = |name: &str| sections.get(name);

    let id = get("ID").map(Body::text).unwrap_or_default();
    if id.is_empty() && require_task {
        return Err(invalid("ID", "missing scenario id"));
    }
    let task = get("TASK").map(Body::text).unwrap_or_default();
    if task.is_empty() && require_task {
        return Err(invalid("TASK", "missing task"));
    }
    let subset = get("SUBSET").map(Body::text).filter(|s| !s.is_empty());

    let mut locations = Vec::new();
    if let Some(b) = get("LOCATIONS") {
        for (n, line) in b.content() {
            let mut words = line.split_whitespace();
            let name = words.next().expect("content lines are non-empty");
            let mut loc = Location::new(name);
            if let Some(class) = words.next() {
                let class = ObjectClass::parse(class).map_err(|e| b.err(n, e.to_string()))?;
                let inst = ObjectInstance::parse(name).map_err(|e| b.err(n, e.to_string()))?;
                if inst.class != class {
                    return Err(b.err(n, format!("'{name}' is not an instance of '{class}'")));
                }
                loc.class = Some(class);
            }
            if words.next().is_some() {
                return Err(b.err(n, "expected '<name> [<class>]'"));
            }
            locations.push(loc);
        }
    }
    if locations.is_empty() {
        return Err(invalid("LOCATIONS", "at least one location is required"));
    }
    if let Some(b) = get("EXPLORED") {
        for (n, line) in b.content() {
            for name in line.split_whitespace() {
                let loc = locations
                    .iter_mut()
                    .find(|l| l.name == name)
                    .ok_or_else(|| b.err(n, format!("unknown location '{name}'")))?;
                loc.explored = true;
            }
        }
    }

    let mut agents = Vec::new();
    let mut agent_starts = BTreeMap::new();
    if let Some(b) = get("AGENTS") {
        for (n, line) in b.content() {
            let (agent, at) = parse_agent(b, n, line)?;
            if let Some(at) = at {
                agent_starts.insert(agent.name.clone(), at);
            }
            agents.push(agent);
        }
    }

    let mut placement: BTreeMap<String, Vec<ObjectInstance>> = BTreeMap::new();
    if let Some(b) = get("OBJECTS") {
        for (n, line) in b.content() {
            let (loc, rest) = line
                .split_once(':')
                .ok_or_else(|| b.err(n, "expected '<location>: <instance> ...'"))?;
            let insts = placement.entry(loc.trim().to_string()).or_default();
            for name in rest.split_whitespace() {
                insts.push(ObjectInstance::parse(name).map_err(|e| b.err(n, e.to_string()))?);
            }
        }
    }

    let mut relations = BTreeSet::new();
    if let Some(b) = get("RELATIONS") {
        for (n, line) in b.content() {
            relations.insert(parse_atom_line(b, n, line)?);
        }
    }

    let goal = match get("GOAL").map(|b| (b, b.text())) {
        Some((b, text)) if !text.is_empty() => {
            parse_plain_formula(&text).map_err(|e| b.err(b.first_line(), e.to_string()))?
        }
        _ if require_task => return Err(invalid("GOAL", "missing reference goal")),
        _ => Formula::truth(),
    };

    let optimal_tools = match get("OPTIMAL_TOOLS").map(|b| (b, b.text())) {
        Some((b, text)) if !text.is_empty() => Some(
            text.parse()
                .map_err(|_| b.err(b.first_line(), format!("expected a count, found '{text}'")))?,
        ),
        _ => None,
    };

    let mut alternatives = BTreeMap::new();
    if let Some(b) = get("ALTERNATIVES") {
        for (n, line) in b.content() {
            let (missing, rest) = line
                .split_once(':')
                .ok_or_else(|| b.err(n, "expected '<missing>: <allowed>, ...'"))?;
            let missing = ObjectClass::parse(missing.trim()).map_err(|e| b.err(n, e.to_string()))?;
            let allowed = rest
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| ObjectClass::parse(s).map_err(|e| b.err(n, e.to_string())))
                .collect::<Result<BTreeSet<_>, _>>()?;
            alternatives.insert(missing, allowed);
        }
    }

    let oam = match get("OAM") {
        Some(b) => {
            let text: String = b.lines.iter().map(|(_, l)| format!("{l}\n")).collect();
            Oam::parse(&text).map_err(|e| b.err(b.first_line(), e.to_string()))?
        }
        None => Oam::new(),
    };
    let script = match get("SCRIPT") {
        Some(b) => parse_script(b)?,
        None => Vec::new(),
    };

    let s = Scenario {
        id,
        task,
        subset,
        locations,
        agents,
        agent_starts,
        placement,
        relations,
        goal,
        optimal_tools,
        alternatives,
        oam,
        script,
    };
    s.validate()?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "\
[ID]
small
[TASK]
Put the sponge on table1
[LOCATIONS]
table0 table
table1 table
[EXPLORED]
table1
[AGENTS]
robot0 robot cost=1 caps=grasp,place,move at=table1
[OBJECTS]
table0: sponge0
[RELATIONS]
on sponge0 table0
[GOAL]
on sponge0 table1
[SCRIPT]
@tool-selection contains=\"say \\\"hi\\\"\"
TOOL EXPLORE table0
\\[GOAL]
@goal reusable
GOAL: on sponge0 table1
";

    #[test]
    fn parses_sections_and_script() {
        let s = Scenario::parse(SMALL).unwrap();
        assert_eq!(s.locations.len(), 2);
        assert!(s.locations[1].explored);
        assert_eq!(s.agent_starts["robot0"], "table1");
        assert_eq!(s.script.len(), 2);
        assert_eq!(s.script[0].contains, vec!["say \"hi\"".to_string()]);
        assert_eq!(s.script[0].response, "TOOL EXPLORE table0\n[GOAL]");
        assert!(!s.script[1].consume_once);
    }

    #[test]
    fn render_round_trips() {
        let s = Scenario::parse(SMALL).unwrap();
        assert_eq!(Scenario::parse(&s.render()).unwrap(), s);
    }

    #[test]
    fn missing_goal_is_named() {
        let text = SMALL.replace("[GOAL]\non sponge0 table1\n", "");
        match Scenario::parse(&text) {
            Err(ScenarioError::Invalid { field, .. }) => assert_eq!(field, "GOAL"),
            other => panic!("{other:?}"),
        }
        assert!(Scenario::parse_world(&text).is_ok());
    }

    #[test]
    fn bad_lines_carry_their_number() {
        let text = SMALL.replace("robot0 robot", "robot0 android");
        match Scenario::parse(&text) {
            Err(ScenarioError::Parse { line, section, .. }) => assert_eq!((line, section.as_str()), (11, "AGENTS")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn initial_memory_hides_unexplored_contents() {
        let s = Scenario::parse(SMALL).unwrap();
        let m = s.initial_memory().unwrap();
        assert!(!m.scene.contains_instance("sponge0"));
        assert!(m.scene.contains_instance("table0"));
        assert!(m.relations.contains(&Atom::new("handempty", ["robot0", "left"])));
        assert!(!m.relations.contains(&Atom::new("on", ["sponge0", "table0"])));
    }
}
