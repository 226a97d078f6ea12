//! Repair effort (steps to validity) and plan recovery by replanning from
//! the last state shared with the ground truth.

use std::time::Duration;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::pddl::{GroundAction, Plan, State, Task};
use crate::planner::{Planner, PlannerError};
use crate::similarity::{ActionQualityMap, PairingResult, QualityLabel};
use crate::simulator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepairKind {
    RemoveAction,
    ReorderAction,
    RepairAction,
    ReplaceAction,
    AddAction,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RepairTarget {
    /// 0-based position in the candidate plan.
    Index(usize),
    GtAction(GroundAction),
}

/// Serialized as `{"kind": .., "index": n}` (1-based) or
/// `{"kind": .., "gt_action": "(..)"}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairStep {
    pub kind: RepairKind,
    pub target: RepairTarget,
}

/// Report form of a [`RepairStep`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairStepEntry {
    pub kind: RepairKind,
    /// 1-based.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gt_action: Option<String>,
}

impl From<&RepairStep> for RepairStepEntry {
    fn from(step: &RepairStep) -> Self {
        let (index, gt_action) = match &step.target {
            RepairTarget::Index(i) => (Some(i + 1), None),
            RepairTarget::GtAction(a) => (None, Some(a.to_string())),
        };
        RepairStepEntry {
            kind: step.kind,
            index,
            gt_action,
        }
    }
}

impl Serialize for RepairStep {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        RepairStepEntry::from(self).serialize(s)
    }
}

/// Label for a phase-2 fix; `None` for labels that need none.
pub fn fix_for(label: QualityLabel) -> Option<RepairKind> {
    match label {
        QualityLabel::Misplaced => Some(RepairKind::ReorderAction),
        QualityLabel::SameAct => Some(RepairKind::RepairAction),
        QualityLabel::DiffAct => Some(RepairKind::ReplaceAction),
        QualityLabel::Redundant => Some(RepairKind::RemoveAction),
        QualityLabel::Correct => None,
    }
}

/// Label-driven edit script.
///
/// Redundant actions are removed first; if what is left is a valid plan the
/// script ends there. Otherwise every remaining non-correct action gets its
/// fix, and each fix of an action with positive similarity may stand in for
/// one missing GT action. Missing GT actions not covered that way are added.
pub fn steps_to_validity(
    plan: &Plan,
    aqm: &ActionQualityMap,
    pairing: &PairingResult,
    gt: &Plan,
    task: &Task,
) -> Vec<RepairStep> {
    let mut steps = Vec::new();
    let mut kept = Vec::new();
    for (i, label) in aqm.labels.iter().enumerate() {
        if *label == QualityLabel::Redundant {
            steps.push(RepairStep {
                kind: RepairKind::RemoveAction,
                target: RepairTarget::Index(i),
            });
        } else {
            kept.push(i);
        }
    }
    let pruned = plan.select(kept.iter().copied());
    if simulator::is_valid(&pruned, &task.problem) {
        return steps;
    }

    let mut repairs = 0usize;
    for &i in &kept {
        let Some(kind) = fix_for(aqm.labels[i]) else { continue };
        steps.push(RepairStep {
            kind,
            target: RepairTarget::Index(i),
        });
        if pairing.per_action_scores[i] > Zero::zero() {
            repairs += 1;
        }
    }

    for g in gt.iter() {
        if pruned.actions.contains(g) {
            continue;
        }
        if repairs > 0 {
            repairs -= 1;
        } else {
            steps.push(RepairStep {
                kind: RepairKind::AddAction,
                target: RepairTarget::GtAction(g.clone()),
            });
        }
    }
    steps
}

/// `(k, prefix)`: `k` is the largest GT trace position whose state appears
/// in the plan trace, `prefix` the earliest plan trace position holding it.
pub fn divergence_point(plan_trace: &[State], gt_trace: &[State]) -> (usize, usize) {
    for (k, s) in gt_trace.iter().enumerate().rev() {
        if let Some(p) = plan_trace.iter().position(|t| t == s) {
            return (k, p);
        }
    }
    (0, 0)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("recovery failed: {0}")]
pub struct RecoveryFailed(#[from] pub PlannerError);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecoveryOutcome {
    /// π_corr, the plan prefix reaching the last shared state.
    pub corr: Plan,
    /// π_comp, the optimal plan from there to the goal.
    pub comp: Plan,
    /// π₄ = π_corr ++ π_comp.
    pub final_plan: Plan,
    pub divergence_state_index: usize,
}

pub fn recover(
    plan: &Plan,
    gt: &Plan,
    task: &Task,
    planner: &dyn Planner,
    timeout: Duration,
) -> Result<RecoveryOutcome, RecoveryFailed> {
    let plan_trace = simulator::simulate(plan, &task.problem).trace;
    let gt_trace = simulator::simulate(gt, &task.problem).trace;
    let (k, prefix) = divergence_point(&plan_trace, &gt_trace);
    let corr = plan.select(0..prefix);
    let comp = planner.replan_from(&plan_trace[prefix], task, timeout)?;
    Ok(RecoveryOutcome {
        final_plan: corr.concat(&comp),
        corr,
        comp,
        divergence_state_index: k,
    })
}
