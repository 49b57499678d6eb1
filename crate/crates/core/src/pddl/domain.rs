use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::capability::{CapabilityLibrary, PredicateDecl, TypedParam, AGENT_VAR};
use super::formula::{Atom, Formula};
use super::types::{capability_type, TypeTree, AGENT, HAND, OBJECT};
use super::PddlError;
use crate::model::{AgentProfile, Oam, Scene};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionSchema {
    pub name: String,
    pub params: Vec<TypedParam>,
    pub precondition: Formula,
    pub add: Vec<Atom>,
    pub del: Vec<Atom>,
    /// Parameter whose `(cost ?x)` is added to `total-cost`.
    pub cost_of: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Domain {
    pub name: String,
    pub types: TypeTree,
    pub predicates: Vec<PredicateDecl>,
    pub actions: Vec<ActionSchema>,
    pub cost_function: bool,
    /// Alternative spellings accepted for predicates in goals.
    pub aliases: BTreeMap<String, String>,
}

impl Domain {
    pub fn predicate(&self, name: &str) -> Option<&PredicateDecl> {
        self.predicates.iter().find(|p| p.name == name)
    }

    pub fn action(&self, name: &str) -> Option<&ActionSchema> {
        self.actions.iter().find(|a| a.name == name)
    }

    pub fn resolve_predicate(&self, name: &str) -> Option<&PredicateDecl> {
        let canonical = self.aliases.get(name).map(String::as_str).unwrap_or(name);
        self.predicate(canonical)
    }
}

pub const DOMAIN_NAME: &str = "affordance-world";

/// Affordances become object subtypes whose members are the classes having
/// them; capabilities become agent subtypes whose members are the agents
/// having them.
pub fn build_type_hierarchy(
    scene: &Scene,
    oam: &Oam,
    agents: &[AgentProfile],
) -> Result<TypeTree, PddlError> {
    let mut tree = TypeTree::new();
    for class in scene.classes() {
        let affs = oam.get(&class)?;
        if affs.is_empty() {
            return Err(PddlError::EmptyAffordances(class.to_string()));
        }
        for a in affs {
            tree.add_type(a, OBJECT)?;
            tree.add_member(a, class.as_str());
        }
    }
    if !agents.is_empty() {
        tree.add_root(HAND);
    }
    for agent in agents {
        tree.add_type(agent.kind.as_str(), AGENT)?;
        tree.add_member(agent.kind.as_str(), &agent.name);
        for cap in &agent.capabilities {
            let ty = capability_type(cap);
            tree.add_type(&ty, AGENT)?;
            tree.add_member(&ty, &agent.name);
        }
    }
    Ok(tree)
}

/// One action per capability some agent has, in library order.
pub fn build_domain(
    scene: &Scene,
    oam: &Oam,
    agents: &[AgentProfile],
    library: &CapabilityLibrary,
) -> Result<Domain, PddlError> {
    library.validate()?;
    let mut types = build_type_hierarchy(scene, oam, agents)?;
    let available: BTreeSet<&str> = agents
        .iter()
        .flat_map(|a| a.capabilities.iter().map(String::as_str))
        .collect();
    for cap in &available {
        if library.capability(cap).is_none() {
            return Err(PddlError::Invalid(format!("capability '{cap}' is not defined")));
        }
    }

    // Types referenced by signatures but absent from the scene stay empty.
    let referenced = library
        .predicates
        .iter()
        .flat_map(|p| p.params.iter())
        .chain(
            library
                .capabilities
                .iter()
                .filter(|c| available.contains(c.name.as_str()))
                .flat_map(|c| c.params.iter()),
        )
        .map(|p| p.ty.clone())
        .collect::<BTreeSet<_>>();
    for ty in referenced {
        if !types.contains(&ty) {
            if ty == HAND {
                types.add_root(HAND);
            } else {
                types.add_type(&ty, OBJECT)?;
                types.ensure_members(&ty);
            }
        }
    }

    let mut actions = Vec::new();
    for cap in &library.capabilities {
        if !available.contains(cap.name.as_str()) {
            continue;
        }
        let mut params = vec![TypedParam::new(AGENT_VAR, &capability_type(&cap.name))];
        params.extend(cap.params.iter().cloned());
        actions.push(ActionSchema {
            name: cap.name.clone(),
            params,
            precondition: cap.precondition.clone(),
            add: cap.add.clone(),
            del: cap.del.clone(),
            cost_of: Some(AGENT_VAR.to_string()),
        });
    }
    Ok(Domain {
        name: DOMAIN_NAME.to_string(),
        types,
        predicates: library.predicates.clone(),
        actions,
        cost_function: true,
        aliases: library.aliases.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{instantiate_scene, AgentKind, ObjectInstance};

    #[test]
    fn cup_is_member_of_each_affordance_type() {
        let mut oam = Oam::new();
        oam.insert("cup", ["grasp", "liquid-contain"]);
        let scene = instantiate_scene(&[ObjectInstance::new("cup", 0)], &oam).unwrap();
        let t = build_type_hierarchy(&scene, &oam, &[]).unwrap();
        assert!(t.sub("grasp").contains("cup"));
        assert!(t.sub("liquid-contain").contains("cup"));
        assert_eq!(t.parent_of("grasp"), Some(OBJECT));
    }

    #[test]
    fn agents_are_members_of_their_capability_types() {
        let robot = AgentProfile::new("robot0", AgentKind::Robot, ["grasp", "move"], 1);
        let human = AgentProfile::new("human0", AgentKind::Human, ["open"], 1000);
        let t = build_type_hierarchy(&Scene::new(), &Oam::new(), &[robot, human]).unwrap();
        let sub_agent = t.sub(AGENT);
        for c in ["grasp-cap", "move-cap", "open-cap", "robot", "human"] {
            assert!(sub_agent.contains(c), "{c}");
        }
        assert_eq!(t.sub("open-cap"), ["human0".to_string()].into_iter().collect());
        assert!(!t.sub("grasp-cap").contains("human0"));
    }

    #[test]
    fn empty_inputs_give_only_roots() {
        let t = build_type_hierarchy(&Scene::new(), &Oam::new(), &[]).unwrap();
        assert_eq!(
            t.types(),
            ["agent", "location", "object"].iter().map(|s| s.to_string()).collect()
        );
    }

    #[test]
    fn class_without_affordances_is_rejected() {
        let mut oam = Oam::new();
        oam.insert("rock", Vec::<String>::new());
        let mut scene = Scene::new();
        scene.pairs.insert(crate::model::ObjectAffordancePair::new(
            ObjectInstance::new("rock", 0),
            "grasp",
        ));
        assert!(matches!(
            build_type_hierarchy(&scene, &oam, &[]),
            Err(PddlError::EmptyAffordances(c)) if c == "rock"
        ));
    }

    #[test]
    fn single_move_capability_gives_single_action() {
        let lib = CapabilityLibrary::parse(
            "predicate at ?a - agent ?l - location\n\
             capability move\n  params ?from - location ?to - location\n  \
             pre (at ?agent ?from)\n  add (at ?agent ?to)\n  del (at ?agent ?from)\nend\n",
        )
        .unwrap();
        let robot = AgentProfile::new("robot0", AgentKind::Robot, ["move"], 1);
        let d = build_domain(&Scene::new(), &Oam::new(), &[robot], &lib).unwrap();
        assert_eq!(d.actions.len(), 1);
        let a = &d.actions[0];
        assert_eq!(a.params.len(), 3);
        assert_eq!(a.params[0].ty, "move-cap");
        assert_eq!(a.cost_of.as_deref(), Some("?agent"));
    }

    #[test]
    fn unused_capability_emits_no_action() {
        let lib = CapabilityLibrary::builtin();
        let robot = AgentProfile::new("robot0", AgentKind::Robot, ["move", "grasp"], 1);
        let d = build_domain(&Scene::new(), &Oam::new(), &[robot], &lib).unwrap();
        let names: Vec<&str> = d.actions.iter().map(|a| a.name.as_str()).collect();
        assert_eq!(names, vec!["grasp", "move"]);
    }
}
