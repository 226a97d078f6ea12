use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use plan_eval::pddl::parse_plan;
use plan_eval::report::{
    aggregate, evaluate_batch, read_records, to_csv, BatchError, Config, EvaluationRecord, GroupKey, GtSource,
    InstanceInput, Pipeline,
};
use plan_eval::simulator;

#[derive(Parser)]
#[command(name = "plan-eval", version, about = "Evaluate and recover candidate PDDL plans")]
struct Cli {
    /// `key = value` constants file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct TaskArgs {
    #[arg(long)]
    domain: PathBuf,
    #[arg(long)]
    problem: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Print an optimal plan
    Solve {
        #[command(flatten)]
        task: TaskArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate one plan
    Validate {
        #[command(flatten)]
        task: TaskArgs,
        #[arg(long)]
        plan: PathBuf,
        /// Print every visited state
        #[arg(long)]
        trace: bool,
    },
    /// Run the full pipeline on one instance and print its record
    Eval {
        #[command(flatten)]
        task: TaskArgs,
        #[arg(long)]
        plan: PathBuf,
        #[arg(long, conflicts_with = "gt_solve", required_unless_present = "gt_solve")]
        gt_plan: Option<PathBuf>,
        #[arg(long)]
        gt_solve: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate every row of a manifest
    Batch {
        #[arg(long)]
        manifest: PathBuf,
        /// CSV report path
        #[arg(long)]
        out: PathBuf,
        /// JSONL records path
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Rebuild the CSV report from JSONL records
    Report {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let pipeline = Pipeline::new(config)?;
    match cli.command {
        Command::Solve { task, out } => {
            let t = pipeline.load_task(&read(&task.domain)?, &read(&task.problem)?)?;
            let plan = pipeline.planner().solve(&t, pipeline.config.planner_timeout)?;
            emit(out.as_deref(), &format!("{plan}; cost = {}\n", plan.len()))?;
        }
        Command::Validate { task, plan, trace } => {
            let t = pipeline.load_task(&read(&task.domain)?, &read(&task.problem)?)?;
            let p = parse_plan(&read(&plan)?, &t)?;
            let sim = simulator::simulate(&p, &t.problem);
            println!("valid: {}", sim.valid());
            println!("executable: {}", sim.executable);
            println!("goal reached: {}", sim.goal_reached);
            println!("lea: {}", sim.lea);
            if let Some(f) = &sim.failure {
                let action = &p.actions[f.index()];
                println!("failure: step {} {action}: {}", f.index() + 1, serde_json::to_string(f)?);
            }
            if trace {
                print!("{}", simulator::dump_trace(&sim.trace));
            }
        }
        Command::Eval {
            task,
            plan,
            gt_plan,
            gt_solve,
            out,
        } => {
            let gt = match (gt_plan, gt_solve) {
                (Some(p), false) => GtSource::Plan(read(&p)?),
                (None, true) => GtSource::Solve,
                _ => bail!("give exactly one of --gt-plan and --gt-solve"),
            };
            let input = InstanceInput {
                domain: read(&task.domain)?,
                problem: read(&task.problem)?,
                plan: Some(read(&plan)?),
                gt,
            };
            let e = pipeline.evaluate(&input)?;
            let id = task.problem.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let key = GroupKey {
                domain: e.task.domain.name.clone(),
                ..GroupKey::default()
            };
            let record = EvaluationRecord::ok(&id, key, e.metrics);
            emit(out.as_deref(), &(serde_json::to_string_pretty(&record)? + "\n"))?;
        }
        Command::Batch {
            manifest,
            out,
            records,
            jobs,
        } => match evaluate_batch(&manifest, &pipeline, jobs, records.as_deref(), Some(&out)) {
            Ok(result) => {
                for r in result.records.iter().filter(|r| r.error.is_some()) {
                    eprintln!("{}: {}", r.instance_id, r.error.as_ref().expect("filtered"));
                }
                eprintln!("{} records, {} groups", result.records.len(), result.report.groups.len());
                if result.has_errors() {
                    return Ok(ExitCode::from(2));
                }
            }
            Err(BatchError::Manifest { error, .. }) => {
                eprintln!("error: {error} (earlier rows were written)");
                return Ok(ExitCode::from(1));
            }
            Err(e) => return Err(e.into()),
        },
        Command::Report { records, out } => {
            let recs = read_records(&read(&records)?)?;
            emit(out.as_deref(), &to_csv(&aggregate(&recs)))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
