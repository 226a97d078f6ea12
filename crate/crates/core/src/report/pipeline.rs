use num_traits::Zero;

use super::config::{Config, ConfigError};
use super::record::{InstanceError, InstanceMetrics, PlanMetrics, Stage};
use crate::lcs::{best_subplan_from, lcs_analyze};
use crate::pddl::{parse_domain, parse_plan, parse_problem, Plan, Task};
use crate::planner::Planner;
use crate::recovery::{recover, steps_to_validity, RepairStep, RepairStepEntry};
use crate::score::{to_f64, Score};
use crate::scoring::{normalize_score, plan_score, potential, PotentialScore};
use crate::similarity::{aqm_score, non_positional_aqm, pair_actions, NameSimilarity};
use crate::simulator::{self, SimulationResult};
use crate::transform::{find_best_variant, TransformError};

/// Where the ground-truth plan comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GtSource {
    Plan(String),
    Solve,
}

#[derive(Debug, Clone)]
pub struct InstanceInput {
    pub domain: String,
    pub problem: String,
    /// `None` when no generation exists; treated as the empty plan.
    pub plan: Option<String>,
    pub gt: GtSource,
}

/// All plans of one pipeline run alongside the record metrics.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub task: Task,
    pub gt: Plan,
    pub pi0: Plan,
    pub pi1: Plan,
    pub pi2: Plan,
    pub pi3: Plan,
    pub corr: Plan,
    pub comp: Option<Plan>,
    pub pi4: Option<Plan>,
    pub stv0: Vec<RepairStep>,
    pub metrics: InstanceMetrics,
}

pub struct Pipeline {
    pub config: Config,
    sigma: Box<dyn NameSimilarity>,
    planner: Box<dyn Planner>,
}

impl Pipeline {
    pub fn new(config: Config) -> Result<Self, ConfigError> {
        Ok(Pipeline {
            sigma: config.name_similarity()?,
            planner: config.planner()?,
            config,
        })
    }

    pub fn sigma(&self) -> &dyn NameSimilarity {
        self.sigma.as_ref()
    }

    pub fn planner(&self) -> &dyn Planner {
        self.planner.as_ref()
    }

    pub fn load_task(&self, domain: &str, problem: &str) -> Result<Task, InstanceError> {
        let d = parse_domain(domain).map_err(|e| InstanceError::new(Stage::ParseDomain, e))?;
        let p = parse_problem(problem, &d).map_err(|e| InstanceError::new(Stage::ParseProblem, e))?;
        Ok(Task::new(d, p))
    }

    pub fn ground_truth(&self, task: &Task, source: &GtSource) -> Result<Plan, InstanceError> {
        let gt = match source {
            GtSource::Plan(text) => parse_plan(text, task).map_err(|e| InstanceError::new(Stage::GroundTruth, e))?,
            GtSource::Solve => self
                .planner
                .solve(task, self.config.planner_timeout)
                .map_err(|e| InstanceError::new(Stage::GroundTruth, e))?,
        };
        let sim = simulator::simulate(&gt, &task.problem);
        if !sim.valid() {
            return Err(InstanceError::new(Stage::GroundTruth, "ground-truth plan is not valid"));
        }
        Ok(gt)
    }

    fn stv(&self, plan: &Plan, gt: &Plan, task: &Task) -> Vec<RepairStep> {
        let (pairing, aqm) = pair_actions(plan, gt, self.sigma());
        steps_to_validity(plan, &aqm, &pairing, gt, task)
    }

    /// simulate π₀ → pairing/AQM → LCS → score → π₁ → π₂/π₃ → StV → π₄.
    pub fn evaluate(&self, input: &InstanceInput) -> Result<Evaluation, InstanceError> {
        let task = self.load_task(&input.domain, &input.problem)?;
        let gt = self.ground_truth(&task, &input.gt)?;
        let pi0 = match &input.plan {
            Some(text) => parse_plan(text, &task).map_err(|e| InstanceError::new(Stage::ParsePlan, e))?,
            None => Plan::default(),
        };
        let generation_missing = pi0.is_empty();
        let sigma = self.sigma();

        let sim0 = simulator::simulate(&pi0, &task.problem);
        let (pairing, aqm) = pair_actions(&pi0, &gt, sigma);
        let np_aqm = non_positional_aqm(&aqm, &pi0, &gt, sigma);
        let lcs0 = lcs_analyze(&pi0, &gt);
        let score = plan_score(&pi0, &gt, &pairing, &lcs0, sim0.valid());
        let normalized = normalize_score(&score, pi0.len());

        let (variant, budget_exceeded) =
            match find_best_variant(&pi0, &gt, &task, &self.config.transform, sigma) {
                Ok((_, v)) => (v, false),
                Err(TransformError::SearchBudgetExceeded { best, .. }) => (*best, true),
                Err(TransformError::NonBijectiveMapping) => unreachable!("enumerated mappings are bijections"),
            };
        let pi1 = variant.plan.clone();

        let pot = match potential(score.total, variant.penalized, pi0.len(), sim0.valid(), self.config.validity_reward) {
            Ok(p) => p,
            Err(_) => PotentialScore {
                score0: score.total,
                score1: variant.penalized,
                potential: if sim0.valid() { self.config.validity_reward } else { Score::zero() },
                validity_reward: sim0.valid(),
            },
        };

        let sub2 = best_subplan_from(&pi0, &lcs0, &task.problem);
        let sub3 = best_subplan_from(&pi1, &lcs_analyze(&pi1, &gt), &task.problem);

        let stv0 = steps_to_validity(&pi0, &aqm, &pairing, &gt, &task);
        let stv1 = self.stv(&pi1, &gt, &task);
        let stv3 = self.stv(&sub3.plan, &gt, &task);

        let rec = recover(&pi0, &gt, &task, self.planner(), self.config.planner_timeout);
        let (corr, comp, divergence, replan_error) = match rec {
            Ok(r) => (r.corr, Some(r.comp), r.divergence_state_index, None),
            Err(e) => {
                let trace = sim0.trace.clone();
                let gt_trace = simulator::simulate(&gt, &task.problem).trace;
                let (k, prefix) = crate::recovery::divergence_point(&trace, &gt_trace);
                (pi0.select(0..prefix), None, k, Some(e.to_string()))
            }
        };
        let pi4 = comp.as_ref().map(|c| corr.concat(c));

        let metrics_of = |plan: &Plan, sim: &SimulationResult, stv: Option<usize>| PlanMetrics {
            valid: sim.valid(),
            executable: sim.executable,
            length: plan.len(),
            lea: sim.lea,
            stv,
            actions: plan.iter().map(ToString::to_string).collect(),
        };
        let sim = |p: &Plan| simulator::simulate(p, &task.problem);
        let metrics = InstanceMetrics {
            generation_missing,
            gt_length: gt.len(),
            pi0: metrics_of(&pi0, &sim0, Some(stv0.len())),
            pi1: metrics_of(&pi1, &sim(&pi1), Some(stv1.len())),
            pi2: metrics_of(&sub2.plan, &sim(&sub2.plan), None),
            pi3: metrics_of(&sub3.plan, &sim(&sub3.plan), Some(stv3.len())),
            pi4: pi4.as_ref().map(|p| metrics_of(p, &sim(p), None)),
            score_value: to_f64(&score.total),
            score,
            normalized_score_value: to_f64(&normalized),
            normalized_score: normalized,
            aqm_score: aqm_score(&aqm),
            aqm_score_value: to_f64(&aqm_score(&aqm)),
            np_aqm_score: aqm_score(&np_aqm),
            np_aqm_score_value: to_f64(&aqm_score(&np_aqm)),
            aqm,
            np_aqm,
            potential_value: to_f64(&pot.potential),
            potential: pot,
            transform: variant,
            transform_budget_exceeded: budget_exceeded,
            pi2_source: sub2.source,
            pi3_source: sub3.source,
            stv_steps: stv0.iter().map(RepairStepEntry::from).collect(),
            corr_length: corr.len(),
            comp_length: comp.as_ref().map(Plan::len),
            divergence_state_index: divergence,
            replan_failed: replan_error.is_some(),
            replan_error,
        };
        Ok(Evaluation {
            task,
            gt,
            pi0,
            pi1,
            pi2: sub2.plan,
            pi3: sub3.plan,
            corr,
            comp,
            pi4,
            stv0,
            metrics,
        })
    }
}

/// Runs the full pipeline on one instance.
pub fn evaluate_instance(pipeline: &Pipeline, input: &InstanceInput) -> Result<InstanceMetrics, InstanceError> {
    pipeline.evaluate(input).map(|e| e.metrics)
}
