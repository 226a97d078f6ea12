use std::path::PathBuf;
use std::process::Command;
use std::thread;
use std::time::{Duration, Instant};

use super::{Planner, PlannerError};
use crate::pddl::{parse_plan, Plan, Task};

/// Runs `{program} {args..} domain.pddl problem.pddl out.plan` and parses the
/// plan it writes.
#[derive(Debug, Clone)]
pub struct ExternalPlanner {
    pub program: PathBuf,
    pub args: Vec<String>,
}

impl ExternalPlanner {
    /// Whitespace-separated command line; the first word is the program.
    pub fn from_command(cmd: &str) -> Option<Self> {
        let mut words = cmd.split_whitespace();
        let program = PathBuf::from(words.next()?);
        Some(ExternalPlanner {
            program,
            args: words.map(str::to_string).collect(),
        })
    }
}

impl Planner for ExternalPlanner {
    fn solve(&self, task: &Task, timeout: Duration) -> Result<Plan, PlannerError> {
        let io = |e: std::io::Error| PlannerError::External(e.to_string());
        let dir = tempfile::tempdir().map_err(io)?;
        let domain = dir.path().join("domain.pddl");
        let problem = dir.path().join("problem.pddl");
        let out = dir.path().join("out.plan");
        std::fs::write(&domain, task.domain.to_string()).map_err(io)?;
        std::fs::write(&problem, task.problem.to_string()).map_err(io)?;

        let mut child = Command::new(&self.program)
            .args(&self.args)
            .arg(&domain)
            .arg(&problem)
            .arg(&out)
            .stdout(std::process::Stdio::null())
            .stderr(std::process::Stdio::null())
            .spawn()
            .map_err(io)?;
        let start = Instant::now();
        let status = loop {
            if let Some(s) = child.try_wait().map_err(io)? {
                break s;
            }
            if start.elapsed() > timeout {
                let _ = child.kill();
                let _ = child.wait();
                return Err(PlannerError::Timeout { incumbent: None });
            }
            thread::sleep(Duration::from_millis(5));
        };
        if !status.success() {
            return Err(PlannerError::External(format!("planner exited with {status}")));
        }
        let text = std::fs::read_to_string(&out).map_err(io)?;
        parse_plan(&text, task).map_err(|e| PlannerError::External(e.to_string()))
    }
}
