use std::fs;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use thiserror::Error;

use super::ground::ground_actions;
use super::{GroundAction, Plan};
use crate::pddl::{render_domain, render_problem, Domain, Formula, ProblemSkeleton};

/// Environment variable that enables tests against a real external planner.
pub const ENABLE_ENV: &str = "AFFPLAN_EXTERNAL_PLANNER";

/// Shell command template with `{domain}` and `{problem}` placeholders; it
/// runs in a scratch directory and must leave its plan in `sas_plan` there.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExternalPlanner {
    pub command: String,
    pub timeout: Duration,
}

impl ExternalPlanner {
    pub fn new(command: impl Into<String>) -> Self {
        ExternalPlanner {
            command: command.into(),
            timeout: Duration::from_secs(300),
        }
    }

    /// Reads the command from [`ENABLE_ENV`], if set.
    pub fn from_env() -> Option<Self> {
        std::env::var(ENABLE_ENV)
            .ok()
            .filter(|c| !c.trim().is_empty())
            .map(Self::new)
    }
}

#[derive(Debug, Error)]
pub enum ExternalError {
    #[error("could not prepare planner files: {0}")]
    Io(#[from] std::io::Error),
    #[error("could not render PDDL: {0}")]
    Render(String),
    #[error("planner exited with {status}: {stderr}")]
    Failed { status: String, stderr: String },
    #[error("planner timed out after {0:?}")]
    Timeout(Duration),
    #[error("planner produced no plan file")]
    NoPlan,
    #[error("plan line {line}: cannot parse '{text}'")]
    Parse { line: usize, text: String },
    #[error("plan line {line}: '{text}' is not a ground action of this problem")]
    UnknownAction { line: usize, text: String },
}

/// Parses `(name arg ...)` lines; `;` comments such as `; cost = 3` are skipped.
pub fn parse_plan_output(text: &str) -> Result<Vec<Vec<String>>, ExternalError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with(';') {
            continue;
        }
        let inner = line
            .strip_prefix('(')
            .and_then(|l| l.strip_suffix(')'))
            .filter(|l| !l.contains(['(', ')']))
            .ok_or_else(|| ExternalError::Parse {
                line: i + 1,
                text: line.to_string(),
            })?;
        let words: Vec<String> = inner.split_whitespace().map(|w| w.to_ascii_lowercase()).collect();
        if words.is_empty() {
            return Err(ExternalError::Parse {
                line: i + 1,
                text: line.to_string(),
            });
        }
        out.push(words);
    }
    Ok(out)
}

/// Renders the task, runs the external planner and maps its output back to
/// ground actions. Never falls back to the embedded planner.
pub fn external_plan(
    domain: &Domain,
    sk: &ProblemSkeleton,
    goal: &Formula,
    planner: &ExternalPlanner,
) -> Result<Plan, ExternalError> {
    let dir = tempfile::tempdir()?;
    let domain_path = dir.path().join("domain.pddl");
    let problem_path = dir.path().join("problem.pddl");
    fs::write(&domain_path, render_domain(domain))?;
    let problem = render_problem(sk, &domain.name, goal).map_err(|e| ExternalError::Render(e.to_string()))?;
    fs::write(&problem_path, problem)?;

    let cmd = planner
        .command
        .replace("{domain}", &domain_path.to_string_lossy())
        .replace("{problem}", &problem_path.to_string_lossy());
    log::info!("running external planner: {cmd}");
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(&cmd)
        .current_dir(dir.path())
        .stdout(Stdio::null())
        .stderr(fs::File::create(dir.path().join("stderr.txt"))?)
        .spawn()?;
    let started = Instant::now();
    let status = loop {
        if let Some(s) = child.try_wait()? {
            break s;
        }
        if started.elapsed() > planner.timeout {
            let _ = child.kill();
            let _ = child.wait();
            return Err(ExternalError::Timeout(planner.timeout));
        }
        std::thread::sleep(Duration::from_millis(10));
    };
    let plan_path = dir.path().join("sas_plan");
    if !status.success() {
        let stderr = fs::read_to_string(dir.path().join("stderr.txt")).unwrap_or_default();
        return Err(ExternalError::Failed {
            status: status.to_string(),
            stderr: stderr.trim().to_string(),
        });
    }
    if !plan_path.exists() {
        return Err(ExternalError::NoPlan);
    }
    let text = fs::read_to_string(&plan_path)?;
    let lines = parse_plan_output(&text)?;
    let actions = ground_actions(domain, sk).map_err(|e| ExternalError::Render(e.to_string()))?;
    let mut steps: Vec<GroundAction> = Vec::new();
    for (i, words) in lines.iter().enumerate() {
        let found = actions
            .iter()
            .find(|a| a.name == words[0] && a.args == words[1..])
            .ok_or_else(|| ExternalError::UnknownAction {
                line: i + 1,
                text: words.join(" "),
            })?;
        steps.push(found.clone());
    }
    Ok(Plan::new(steps))
}
