mod common;

use affplan_core::harness::Scenario;
use affplan_core::orchestrator::{build_task, OrchestratorConfig};
use affplan_core::pddl::parse_plain_formula;
use affplan_core::planner::{plan, Plan, PlanLimits, PlannerError};
use rand::SeedableRng;

fn pouring_plan(human_cost: u64) -> Plan {
    let mut scenario: Scenario = common::load("b3-pouring");
    for a in &mut scenario.agents {
        if a.name == "human0" {
            a.cost = human_cost;
        }
    }
    let memory = scenario.revealed_memory(scenario.agent_starts.clone()).unwrap();
    let (domain, sk) = build_task(&memory, &scenario.agents, &OrchestratorConfig::default()).unwrap();
    let goal = parse_plain_formula("liquid_in milk0 coffee_cup0").unwrap();
    plan(&domain, &sk, &goal, &PlanLimits::default()).unwrap()
}

#[test]
fn expensive_human_only_opens_the_box() {
    let p = pouring_plan(1000);
    let agents: Vec<(&str, &str)> = p.steps.iter().map(|s| (s.name.as_str(), s.args[0].as_str())).collect();
    assert_eq!(agents, [("open", "human0"), ("grasp", "robot0"), ("pour", "robot0")]);
    assert_eq!(p.total_cost, 1002);
}

#[test]
fn cheaper_human_never_costs_more() {
    let expensive = pouring_plan(1000);
    let cheap = pouring_plan(1);
    assert!(cheap.total_cost <= expensive.total_cost);
    assert_eq!(cheap.total_cost, 3);
}

/// Lowering any agent's cost can only lower the optimum.
#[test]
fn optimal_cost_is_monotone_in_agent_costs() {
    let mut checked = 0;
    for seed in 20_000..20_120u64 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let inst = common::random::instance(&mut rng);
        let limits = PlanLimits {
            max_nodes: 300_000,
            ..PlanLimits::default()
        };
        let Ok(before) = plan(&inst.domain, &inst.sk, &inst.goal, &limits) else { continue };
        let mut sk = inst.sk.clone();
        for cost in sk.costs.values_mut() {
            *cost = 1;
        }
        match plan(&inst.domain, &sk, &inst.goal, &limits) {
            Ok(after) => assert!(after.total_cost <= before.total_cost, "seed {seed}"),
            Err(PlannerError::Unsolvable) => panic!("seed {seed}: cheaper agents made the goal unsolvable"),
            Err(e) => panic!("seed {seed}: {e}"),
        }
        checked += 1;
    }
    assert!(checked >= 60, "only {checked} solvable instances");
}
