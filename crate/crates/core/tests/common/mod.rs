#![allow(dead_code)]

use std::path::PathBuf;

use affplan_core::harness::{run_scenario, Scenario};
use affplan_core::llm::LlmHandle;
use affplan_core::orchestrator::{LoopOutcome, OrchestratorConfig};

pub fn scenarios_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

pub fn load(id: &str) -> Scenario {
    Scenario::load(&scenarios_dir().join(format!("{id}.scn"))).expect("shipped scenario loads")
}

pub fn run_shipped(id: &str) -> (Scenario, LoopOutcome) {
    let scenario = load(id);
    let llm = LlmHandle::scripted(scenario.script.clone());
    let outcome = run_scenario(&scenario, &llm, &OrchestratorConfig::default()).expect("scenario runs");
    (scenario, outcome)
}

pub fn plan_lines(outcome: &LoopOutcome) -> Vec<String> {
    outcome
        .plans
        .iter()
        .flat_map(|p| p.steps.iter().map(|s| s.to_string()))
        .collect()
}

pub fn tool_lines(outcome: &LoopOutcome) -> Vec<String> {
    outcome.trace.iter().map(|t| t.to_string()).collect()
}

pub mod random {
    use affplan_core::harness::Scenario;
    use affplan_core::model::Memory;
    use affplan_core::orchestrator::{build_task, OrchestratorConfig};
    use affplan_core::pddl::{parse_plain_formula, Domain, Formula, ProblemSkeleton};
    use rand::seq::SliceRandom;
    use rand::Rng;

    const GRASPABLE: &[&str] = &[
        "apple", "banana", "bottle", "bowl", "coffee_cup", "cup", "knife", "milk_box", "plate", "screw_box",
        "sponge", "tea_packaging", "soap",
    ];
    const CONTAINERS: &[&str] = &["bottle", "bowl", "coffee_cup", "milk_box", "screw_box", "tea_packaging", "trash_can"];
    const ENCLOSED: &[&str] = &["bottle", "milk_box", "screw_box", "tea_packaging"];
    const LIQUID_HOLDERS: &[&str] = &["bottle", "bowl", "coffee_cup", "cup", "milk_box"];
    const ALL_CAPS: &str = "open,close,grasp,place,put_in,take_out,move,handover,pour,wipe";
    const HUMAN_CAPS: &[&str] = &["open", "close", "grasp", "place", "handover", "pour"];

    pub struct Instance {
        pub scenario: Scenario,
        pub memory: Memory,
        pub domain: Domain,
        pub sk: ProblemSkeleton,
        pub goal: Formula,
    }

    fn class_of(inst: &str) -> &str {
        inst.trim_end_matches(|c: char| c.is_ascii_digit())
    }

    /// A fully explored world of at most 8 objects on at most 3 tables with a
    /// robot, maybe a human, and a goal of one or two literals.
    pub fn instance<R: Rng>(rng: &mut R) -> Instance {
        let n_tables = rng.gen_range(1..=3);
        let tables: Vec<String> = (0..n_tables).map(|i| format!("table{i}")).collect();
        let n_objects = rng.gen_range(1..=8);

        let mut objects: Vec<String> = Vec::new();
        let mut counts = std::collections::BTreeMap::<&str, u32>::new();
        let mut fresh = |class: &'static str, objects: &mut Vec<String>| {
            let c = counts.entry(class).or_default();
            let name = format!("{class}{c}");
            *c += 1;
            objects.push(name.clone());
            name
        };
        let has_liquid = n_objects >= 2 && rng.gen_bool(0.4);
        let n_solid = if has_liquid { n_objects - 1 } else { n_objects };
        for _ in 0..n_solid {
            let class = if rng.gen_bool(0.15) {
                "trash_can"
            } else {
                *GRASPABLE.choose(rng).expect("non-empty")
            };
            fresh(class, &mut objects);
        }

        let mut placement: std::collections::BTreeMap<String, Vec<String>> = Default::default();
        let mut relations = Vec::new();
        for o in &objects {
            let t = tables.choose(rng).expect("tables").clone();
            relations.push(format!("on {o} {t}"));
            if ENCLOSED.contains(&class_of(o)) && rng.gen_bool(0.5) {
                relations.push(format!("closed {o}"));
            }
            placement.entry(t).or_default().push(o.clone());
        }
        if has_liquid {
            let holders: Vec<String> = objects
                .iter()
                .filter(|o| LIQUID_HOLDERS.contains(&class_of(o)))
                .cloned()
                .collect();
            if let Some(h) = holders.choose(rng).cloned() {
                let liquid = fresh(if rng.gen_bool(0.5) { "milk" } else { "water" }, &mut objects);
                let t = placement
                    .iter()
                    .find(|(_, os)| os.contains(&h))
                    .map(|(t, _)| t.clone())
                    .expect("holder placed");
                relations.push(format!("liquid_in {liquid} {h}"));
                placement.entry(t).or_default().push(liquid);
            }
        }

        let robot_cost = rng.gen_range(1..=3);
        let robot_at = tables.choose(rng).expect("tables").clone();
        let mut agents = format!("robot0 robot cost={robot_cost} caps={ALL_CAPS} at={robot_at}\n");
        let with_human = rng.gen_bool(0.5);
        if with_human {
            let mut caps: Vec<&str> = HUMAN_CAPS.iter().copied().filter(|_| rng.gen_bool(0.6)).collect();
            if caps.is_empty() {
                caps.push("open");
            }
            let human_at = tables.choose(rng).expect("tables");
            agents.push_str(&format!(
                "human0 human cost={} caps={} at={human_at}\n",
                rng.gen_range(1..=4),
                caps.join(",")
            ));
        }

        let goal = random_goal(rng, &objects, &tables, with_human);
        let text = format!(
            "[ID]\nrandom\n[TASK]\nrandom task\n[LOCATIONS]\n{}\n[EXPLORED]\n{}\n[AGENTS]\n{agents}[OBJECTS]\n{}\n[RELATIONS]\n{}\n[GOAL]\n{goal}\n",
            tables.iter().map(|t| format!("{t} table")).collect::<Vec<_>>().join("\n"),
            tables.join("\n"),
            placement
                .iter()
                .map(|(t, os)| format!("{t}: {}", os.join(" ")))
                .collect::<Vec<_>>()
                .join("\n"),
            relations.join("\n"),
        );
        let scenario = Scenario::parse(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
        let memory = scenario
            .revealed_memory(scenario.agent_starts.clone())
            .expect("memory");
        let (domain, sk) = build_task(&memory, &scenario.agents, &OrchestratorConfig::default()).expect("task");
        let goal = parse_plain_formula(&goal).expect("goal");
        Instance {
            scenario,
            memory,
            domain,
            sk,
            goal,
        }
    }

    fn literal<R: Rng>(rng: &mut R, objects: &[String], tables: &[String], with_human: bool) -> Option<String> {
        let of = |classes: &[&str]| -> Vec<&String> {
            objects.iter().filter(|o| classes.contains(&class_of(o))).collect()
        };
        let grasp = of(GRASPABLE);
        let table = tables.choose(rng).expect("tables");
        match rng.gen_range(0..6) {
            0 => grasp.choose(rng).map(|o| format!("on {o} {table}")),
            1 => {
                let o = grasp.choose(rng)?;
                let c = of(CONTAINERS).into_iter().filter(|c| c != o).collect::<Vec<_>>();
                c.choose(rng).map(|c| format!("in {o} {c}"))
            }
            2 => {
                let who = if with_human && rng.gen_bool(0.5) { "human0" } else { "robot0" };
                grasp.choose(rng).map(|o| format!("inhand {o} {who}"))
            }
            3 => {
                let l = of(&["milk", "water"]);
                let l = l.choose(rng)?;
                of(LIQUID_HOLDERS).choose(rng).map(|c| format!("liquid_in {l} {c}"))
            }
            4 => of(&["sponge"]).first().map(|_| format!("clean {table}")),
            _ => {
                let e = of(ENCLOSED);
                e.choose(rng).map(|o| {
                    if rng.gen_bool(0.5) {
                        format!("closed {o}")
                    } else {
                        format!("not (closed {o})")
                    }
                })
            }
        }
    }

    fn random_goal<R: Rng>(rng: &mut R, objects: &[String], tables: &[String], with_human: bool) -> String {
        let mut lits = Vec::new();
        let want = rng.gen_range(1..=2);
        for _ in 0..20 {
            if lits.len() == want {
                break;
            }
            if let Some(l) = literal(rng, objects, tables, with_human) {
                if !lits.contains(&l) {
                    lits.push(l);
                }
            }
        }
        if lits.is_empty() {
            lits.push(format!("at robot0 {}", tables.last().expect("tables")));
        }
        let wrap = |l: &String| format!("({l})");
        match (lits.len(), rng.gen_range(0..3)) {
            (1, _) => lits[0].clone(),
            (_, 0) => format!("or {}", lits.iter().map(wrap).collect::<Vec<_>>().join(" ")),
            _ => format!("and {}", lits.iter().map(wrap).collect::<Vec<_>>().join(" ")),
        }
    }

    /// Outcome of comparing the planner with the oracle on one instance.
    pub enum Check {
        Solved { cost: u64 },
        Unsolvable,
    }

    /// Planner cost must equal the oracle's optimum, and the plan must
    /// replay and reach the goal. A plan of cost C has at most C / (cheapest
    /// agent cost) steps, so that bound covers every plan that could be cheaper.
    pub fn check_against_oracle(seed: u64) -> Result<Check, String> {
        use affplan_core::planner::{oracle_plan, plan, OracleError, OracleMetric, PlanLimits, PlannerError};
        use affplan_core::simulator::{goal_satisfied, replay};
        use rand::SeedableRng;

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let inst = instance(&mut rng);
        let ctx = |msg: String| format!("seed {seed}, goal {}: {msg}", inst.goal.to_pddl());
        let limits = PlanLimits {
            max_nodes: 300_000,
            ..PlanLimits::default()
        };
        match plan(&inst.domain, &inst.sk, &inst.goal, &limits) {
            Ok(p) => {
                let trace = replay(&inst.sk.init, &p).map_err(|e| ctx(e.to_string()))?;
                if !goal_satisfied(&trace.final_state, &inst.goal) {
                    return Err(ctx("plan does not reach the goal".into()));
                }
                let sum: u64 = p.steps.iter().map(|s| s.cost).sum();
                if sum != p.total_cost {
                    return Err(ctx(format!("total cost {} but steps sum to {sum}", p.total_cost)));
                }
                let cheapest = inst.sk.costs.values().copied().min().unwrap_or(1).max(1);
                let bound = (p.total_cost / cheapest) as usize;
                let best = oracle_plan(&inst.domain, &inst.sk, &inst.goal, bound, OracleMetric::Cost)
                    .map_err(|e| ctx(format!("oracle: {e}")))?;
                if best.total_cost != p.total_cost {
                    return Err(ctx(format!(
                        "planner cost {} ({:?}) but oracle cost {} ({:?})",
                        p.total_cost,
                        p.lines(),
                        best.total_cost,
                        best.lines()
                    )));
                }
                Ok(Check::Solved { cost: p.total_cost })
            }
            // Exhausting the node cap only happens on unsatisfiable goals
            // here; the oracle must not find a short plan either.
            Err(PlannerError::Unsolvable) | Err(PlannerError::ResourceExhausted { .. }) => {
                match oracle_plan(&inst.domain, &inst.sk, &inst.goal, 6, OracleMetric::Cost) {
                    Err(OracleError::UnsolvableWithinBound { .. }) | Err(OracleError::StateLimit { .. }) => {
                        Ok(Check::Unsolvable)
                    }
                    Ok(p) => Err(ctx(format!("planner found nothing, oracle found {:?}", p.lines()))),
                }
            }
            Err(e) => Err(ctx(format!("planner: {e}"))),
        }
    }
}

/// Hand-computed scoring cases: predicted, truth, (tp, fp, fn), (precision, recall, f1).
pub const OAM_CASES: &[(&str, &str, (usize, usize, usize), (f64, f64, f64))] = &[
    ("a: x", "a: x", (1, 0, 0), (1.0, 1.0, 1.0)),
    ("a: x, y", "a: x", (1, 1, 0), (0.5, 1.0, 2.0 / 3.0)),
    ("a: x", "a: x, y", (1, 0, 1), (1.0, 0.5, 2.0 / 3.0)),
    ("a: y", "a: x", (0, 1, 1), (0.0, 0.0, 0.0)),
    ("a:", "a: x", (0, 0, 1), (0.0, 0.0, 0.0)),
    ("a: x", "a:", (0, 1, 0), (0.0, 0.0, 0.0)),
    ("a:", "a:", (0, 0, 0), (0.0, 0.0, 0.0)),
    ("a: x, y, z", "a: x, y, w", (2, 1, 1), (2.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0)),
    ("a: x\nb: y", "a: x\nb: z", (1, 1, 1), (0.5, 0.5, 0.5)),
    ("a: x, y\nb: y", "a: x, y\nb: y", (3, 0, 0), (1.0, 1.0, 1.0)),
    ("a: x, y, z, w", "a: x", (1, 3, 0), (0.25, 1.0, 0.4)),
    ("a: x", "a: x, y, z, w", (1, 0, 3), (1.0, 0.25, 0.4)),
    ("a: x, y\nb: z", "a: x\nb: z, w", (2, 1, 1), (2.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0)),
    ("a: p, q\nb: r, s\nc: t", "a: p\nb: r, s, u\nc: v", (3, 2, 2), (0.6, 0.6, 0.6)),
    ("a:\nb:", "a: x\nb: y", (0, 0, 2), (0.0, 0.0, 0.0)),
    ("a: x\nb:", "a: x\nb: y", (1, 0, 1), (1.0, 0.5, 2.0 / 3.0)),
    ("a: x, y, z", "a: x, y, z", (3, 0, 0), (1.0, 1.0, 1.0)),
    ("a: x, y, z", "a: w", (0, 3, 1), (0.0, 0.0, 0.0)),
    ("a: x, y", "a: x, y, z, w, v", (2, 0, 3), (1.0, 0.4, 4.0 / 7.0)),
    ("a: x, y, z, w, v", "a: x, y", (2, 3, 0), (0.4, 1.0, 4.0 / 7.0)),
    ("a: x\nb: x\nc: x\nd: x", "a: x\nb: y\nc: x\nd: y", (2, 2, 2), (0.5, 0.5, 0.5)),
    ("a: x, y\nb: x, y", "a: x\nb: x, y, z", (3, 1, 1), (0.75, 0.75, 0.75)),
    ("a: grasp, contain\nb: support", "a: grasp\nb: support, stack", (2, 1, 1), (2.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0)),
];

/// Runs every case; returns the descriptions of mismatches.
pub fn oam_case_mismatches() -> Vec<String> {
    use affplan_core::model::Oam;
    use affplan_core::oam::score_oam;
    let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
    let mut out = Vec::new();
    for (i, (pred, truth, counts, ratios)) in OAM_CASES.iter().enumerate() {
        let m = score_oam(&Oam::parse(pred).unwrap(), &Oam::parse(truth).unwrap()).unwrap();
        if (m.tp, m.fp, m.fn_) != *counts
            || !close(m.precision, ratios.0)
            || !close(m.recall, ratios.1)
            || !close(m.f1, ratios.2)
        {
            out.push(format!("case {i}: got {m:?}, expected {counts:?} {ratios:?}"));
        }
    }
    out
}

/// Five rows over two subsets with known aggregate rates.
pub fn sample_rows() -> Vec<affplan_core::harness::ScenarioRow> {
    let row = |id: &str, subset: &str, success: bool, plan_minimal: Option<bool>, tools_minimal: Option<bool>| {
        affplan_core::harness::ScenarioRow {
            id: id.into(),
            subset: subset.into(),
            status: if success { "success".into() } else { "loop-limit".into() },
            success,
            reason: None,
            plan_length: 3,
            optimal_length: plan_minimal.map(|m| if m { 3 } else { 2 }),
            plan_minimal,
            tool_count: 2,
            optimal_tools: tools_minimal.map(|m| if m { 2 } else { 1 }),
            tools_minimal,
            tools: Vec::new(),
            plan: Vec::new(),
            elapsed_ms: 0,
        }
    };
    vec![
        row("r1", "a", true, Some(true), Some(true)),
        row("r2", "a", true, Some(false), Some(true)),
        row("r3", "a", false, None, None),
        row("r4", "b", true, None, Some(false)),
        row("r5", "b", false, None, None),
    ]
}

/// Hand-computed (n, successes, success, min-plan, min-plan over all, min-tools)
/// for [`sample_rows`]: subset a, subset b, overall.
pub const SAMPLE_RATES: [(usize, usize, f64, f64, f64, f64); 3] = [
    (3, 2, 2.0 / 3.0, 0.5, 1.0 / 3.0, 1.0),
    (2, 1, 0.5, 0.0, 0.0, 0.0),
    (5, 3, 0.6, 0.5, 0.2, 2.0 / 3.0),
];

pub fn rates_mismatches() -> Vec<String> {
    use affplan_core::harness::{EvalReport, Rates};
    let report = EvalReport::from_rows(sample_rows(), 0);
    let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
    let check = |name: &str, r: &Rates, e: &(usize, usize, f64, f64, f64, f64)| -> Option<String> {
        let ok = r.scenarios == e.0
            && r.successes == e.1
            && close(r.success_rate, e.2)
            && close(r.minimal_plan_rate, e.3)
            && close(r.minimal_plan_rate_all, e.4)
            && close(r.minimal_tools_rate, e.5);
        (!ok).then(|| format!("{name}: got {r:?}, expected {e:?}"))
    };
    [
        check("a", &report.subsets["a"], &SAMPLE_RATES[0]),
        check("b", &report.subsets["b"], &SAMPLE_RATES[1]),
        check("overall", &report.overall, &SAMPLE_RATES[2]),
    ]
    .into_iter()
    .flatten()
    .collect()
}
