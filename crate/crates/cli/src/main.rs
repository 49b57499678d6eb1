use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use affplan_core::harness::{
    baseline_llm_as_planner, baseline_prompt, check_success, compute_minimality, evaluate_suite, parse_script_text,
    scenario_config, Backend, Repl, Scenario,
};
use affplan_core::llm::{HttpConfig, LlmHandle};
use affplan_core::model::{AffordanceCatalog, ObjectClass, Oam};
use affplan_core::oam::{generate_oam, score_oam, OamStrategy, StrategyKind};
use affplan_core::orchestrator::{build_task, run, OrchestratorConfig, PlannerBackend};
use affplan_core::pddl::{render_domain, render_skeleton};
use affplan_core::planner::ExternalPlanner;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "affplan", version, about = "Affordance-based task planning with an LLM in the loop")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the tool loop on one scenario.
    Run(RunArgs),
    /// Evaluate every scenario in a directory.
    Eval(EvalArgs),
    /// Generate or score object-affordance mappings.
    Oam {
        #[command(subcommand)]
        command: OamCommand,
    },
    /// Let the LLM write the whole plan in one answer.
    Baseline(BaselineArgs),
    /// Interactive session over one world.
    Repl(ReplArgs),
    /// Print the PDDL domain and problem for a scenario.
    Pddl(PddlArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendKind {
    /// Answers from the scenario's script.
    Scripted,
    /// OpenAI-compatible endpoint configured through the environment.
    Http,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlannerKind {
    Embedded,
    External,
}

#[derive(Args)]
struct LlmArgs {
    #[arg(long, value_enum, default_value = "scripted")]
    backend: BackendKind,
    /// Model name for the http backend (overrides the environment).
    #[arg(long)]
    model: Option<String>,
    /// JSON settings file for the http backend.
    #[arg(long)]
    llm_config: Option<PathBuf>,
}

fn http_config(file: Option<&PathBuf>, model: Option<&String>) -> Result<HttpConfig, String> {
    let mut c = HttpConfig::load(file.map(PathBuf::as_path)).map_err(|e| e.to_string())?;
    if let Some(m) = model {
        c.model = m.clone();
    }
    Ok(c)
}

impl LlmArgs {
    fn eval_backend(&self) -> Result<Backend, String> {
        Ok(match self.backend {
            BackendKind::Scripted => Backend::Scripted,
            BackendKind::Http => Backend::Http(http_config(self.llm_config.as_ref(), self.model.as_ref())?),
        })
    }

    fn handle(&self, scenario: &Scenario) -> Result<LlmHandle, String> {
        self.eval_backend()?.handle_for(scenario).map_err(|e| e.to_string())
    }
}

#[derive(Args)]
struct PlannerArgs {
    #[arg(long, value_enum, default_value = "embedded")]
    planner: PlannerKind,
    /// Command template with {domain} and {problem} for the external planner.
    #[arg(long)]
    planner_cmd: Option<String>,
}

impl PlannerArgs {
    fn config(&self) -> Result<OrchestratorConfig, String> {
        let mut config = OrchestratorConfig::default();
        if let PlannerKind::External = self.planner {
            let planner = match &self.planner_cmd {
                Some(cmd) => ExternalPlanner::new(cmd.clone()),
                None => ExternalPlanner::from_env()
                    .ok_or("the external planner needs --planner-cmd or AFFPLAN_EXTERNAL_PLANNER")?,
            };
            config.planner = PlannerBackend::External(planner);
        }
        Ok(config)
    }
}

#[derive(Args)]
struct RunArgs {
    scenario: PathBuf,
    /// Replace the scenario's task text.
    #[arg(long)]
    task: Option<String>,
    #[command(flatten)]
    llm: LlmArgs,
    #[command(flatten)]
    planner: PlannerArgs,
    /// Write a JSON report here.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    dir: PathBuf,
    /// Only scenarios of this subset.
    #[arg(long)]
    subset: Option<String>,
    #[command(flatten)]
    llm: LlmArgs,
    #[command(flatten)]
    planner: PlannerArgs,
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum OamCommand {
    /// Ask the LLM for the affordances of each class.
    Gen(OamGenArgs),
    /// Precision, recall and F1 of a predicted mapping against ground truth.
    Score {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
    },
}

#[derive(Args)]
struct OamGenArgs {
    /// One class per line.
    #[arg(long)]
    classes: PathBuf,
    /// list, yes-no or yes-no-logical.
    #[arg(long, default_value = "list")]
    strategy: StrategyKind,
    #[arg(long, default_value_t = 4)]
    parallelism: usize,
    #[arg(long, value_enum, default_value = "http")]
    backend: BackendKind,
    #[arg(long)]
    model: Option<String>,
    /// JSON settings file for the http backend.
    #[arg(long)]
    llm_config: Option<PathBuf>,
    /// Scripted answers (SCRIPT section syntax) for the scripted backend.
    #[arg(long)]
    script: Option<PathBuf>,
    /// Question sets for the yes-no-logical strategy.
    #[arg(long)]
    questions: Option<PathBuf>,
    /// Write the mapping here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BaselineArgs {
    scenario: PathBuf,
    /// Include the object affordances in the prompt.
    #[arg(long)]
    affordances: bool,
    /// Only print the prompt.
    #[arg(long)]
    print_prompt: bool,
    #[command(flatten)]
    llm: LlmArgs,
}

#[derive(Args)]
struct ReplArgs {
    /// Scenario file describing the world; task and goal are optional.
    world: PathBuf,
    #[command(flatten)]
    llm: LlmArgs,
    #[command(flatten)]
    planner: PlannerArgs,
}

#[derive(Args)]
struct PddlArgs {
    scenario: PathBuf,
    /// Use the fully explored world instead of the initial memory.
    #[arg(long)]
    revealed: bool,
}

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), String> {
    let text = serde_json::to_string_pretty(value).map_err(|e| e.to_string())?;
    fs::write(path, text + "\n").map_err(|e| format!("{}: {e}", path.display()))
}

fn load(path: &Path) -> Result<Scenario, String> {
    Scenario::load(path).map_err(|e| e.to_string())
}

fn cmd_run(args: RunArgs) -> Result<(), String> {
    let mut scenario = load(&args.scenario)?;
    if let Some(t) = &args.task {
        scenario.task = t.clone();
    }
    let llm = args.llm.handle(&scenario)?;
    let config = scenario_config(&scenario, &args.planner.config()?);
    let memory = scenario.initial_memory().map_err(|e| e.to_string())?;
    let outcome = run(&scenario.task, memory, &scenario.world(), &scenario.agents, &config, &llm);

    println!("task: {}", scenario.task);
    for (tool, rec) in outcome.trace.iter().zip(&outcome.records) {
        println!("tool: {tool} ({})", rec.note);
    }
    for step in outcome.plans.iter().flat_map(|p| p.steps.iter()) {
        println!("step: {step}");
    }
    println!("status: {}", outcome.status);
    if let Some(e) = &outcome.error {
        println!("error: {e}");
    }
    if args.task.is_none() {
        let verdict = check_success(&scenario, &outcome);
        println!("success: {}", verdict.success);
        if let Some(r) = &verdict.reason {
            println!("reason: {r}");
        }
        let m = compute_minimality(&scenario, &outcome, &config);
        if let Some(opt) = m.optimal_length {
            println!("optimal plan length: {opt}");
        }
    }
    if let Some(path) = &args.report {
        write_json(path, &outcome.report())?;
    }
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<(), String> {
    let base = args.planner.config()?;
    let report = evaluate_suite(
        &args.dir,
        args.subset.as_deref(),
        &args.llm.eval_backend()?,
        &base,
        args.jobs.max(1),
    )
    .map_err(|e| e.to_string())?;
    print!("{}", report.table());
    if let Some(path) = &args.report {
        write_json(path, &report)?;
    }
    Ok(())
}

fn cmd_oam_gen(args: OamGenArgs) -> Result<(), String> {
    let classes = read(&args.classes)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| ObjectClass::parse(l).map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    let catalog = AffordanceCatalog::builtin();
    let strategy = match (args.strategy, &args.questions) {
        (StrategyKind::YesNoLogical, Some(path)) => {
            OamStrategy::yes_no_logical(&catalog, &read(path)?).map_err(|e| e.to_string())?
        }
        (kind, _) => OamStrategy::builtin(kind, &catalog),
    };
    let llm = match args.backend {
        BackendKind::Scripted => {
            let path = args.script.as_ref().ok_or("the scripted backend needs --script")?;
            LlmHandle::scripted(parse_script_text(&read(path)?).map_err(|e| e.to_string())?)
        }
        BackendKind::Http => {
            LlmHandle::http(http_config(args.llm_config.as_ref(), args.model.as_ref())?).map_err(|e| e.to_string())?
        }
    };
    let generated =
        generate_oam(&classes, &catalog, &strategy, &llm, args.parallelism.max(1)).map_err(|e| e.to_string())?;
    let text = generated.oam.render();
    match &args.out {
        Some(path) => fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_oam_score(pred: &Path, truth: &Path) -> Result<(), String> {
    let pred = Oam::parse(&read(pred)?).map_err(|e| format!("predicted: {e}"))?;
    let truth = Oam::parse(&read(truth)?).map_err(|e| format!("truth: {e}"))?;
    let m = score_oam(&pred, &truth).map_err(|e| e.to_string())?;
    println!("{}", serde_json::to_string_pretty(&m).map_err(|e| e.to_string())?);
    Ok(())
}

fn cmd_baseline(args: BaselineArgs) -> Result<(), String> {
    let scenario = load(&args.scenario)?;
    let base = OrchestratorConfig::default();
    if args.print_prompt {
        println!("{}", baseline_prompt(&scenario, args.affordances, &base)?);
        return Ok(());
    }
    let llm = args.llm.handle(&scenario)?;
    let verdict = baseline_llm_as_planner(&scenario, &llm, args.affordances, &base);
    for step in &verdict.plan {
        println!("step: {step}");
    }
    println!("success: {}", verdict.success);
    if let Some(e) = &verdict.error {
        println!("error: {e}");
    }
    Ok(())
}

fn cmd_repl(args: ReplArgs) -> Result<(), String> {
    let text = read(&args.world)?;
    let world = Scenario::parse_world(&text).map_err(|e| e.to_string())?;
    let llm = args.llm.handle(&world)?;
    let mut repl = Repl::new(world, llm, &args.planner.config()?)?;
    let stdin = io::stdin();
    let mut stdout = io::stdout();
    println!("{}", affplan_core::harness::HELP);
    loop {
        print!("> ");
        stdout.flush().map_err(|e| e.to_string())?;
        let mut line = String::new();
        if stdin.lock().read_line(&mut line).map_err(|e| e.to_string())? == 0 {
            return Ok(());
        }
        let reply = repl.handle(&line);
        if !reply.text.is_empty() {
            println!("{}", reply.text);
        }
        if reply.quit {
            return Ok(());
        }
    }
}

fn cmd_pddl(args: PddlArgs) -> Result<(), String> {
    let scenario = load(&args.scenario)?;
    let memory = if args.revealed {
        scenario.revealed_memory(scenario.agent_starts.clone())
    } else {
        scenario.initial_memory()
    }
    .map_err(|e| e.to_string())?;
    let config = scenario_config(&scenario, &OrchestratorConfig::default());
    let (domain, sk) = build_task(&memory, &scenario.agents, &config).map_err(|e| e.to_string())?;
    println!("{}", render_domain(&domain));
    println!("{}", render_skeleton(&sk, &domain.name));
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Oam { command } => match command {
            OamCommand::Gen(a) => cmd_oam_gen(a),
            OamCommand::Score { pred, truth } => cmd_oam_score(&pred, &truth),
        },
        Command::Baseline(a) => cmd_baseline(a),
        Command::Repl(a) => cmd_repl(a),
        Command::Pddl(a) => cmd_pddl(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
