use serde::{Deserialize, Serialize};

use crate::lcs::SubplanSource;
use crate::recovery::RepairStepEntry;
use crate::score::Score;
use crate::scoring::{exact_serde, PotentialScore, ScoreBreakdown};
use crate::similarity::ActionQualityMap;
use crate::transform::VariantScore;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Read,
    ParseDomain,
    ParseProblem,
    GroundTruth,
    ParsePlan,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("{stage:?}: {message}")]
pub struct InstanceError {
    pub stage: Stage,
    pub message: String,
}

impl InstanceError {
    pub fn new(stage: Stage, message: impl ToString) -> Self {
        InstanceError {
            stage,
            message: message.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanMetrics {
    pub valid: bool,
    pub executable: bool,
    pub length: usize,
    pub lea: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stv: Option<usize>,
    pub actions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceMetrics {
    pub generation_missing: bool,
    pub gt_length: usize,
    pub pi0: PlanMetrics,
    pub pi1: PlanMetrics,
    pub pi2: PlanMetrics,
    pub pi3: PlanMetrics,
    /// Absent when replanning failed.
    pub pi4: Option<PlanMetrics>,
    pub score: ScoreBreakdown,
    pub score_value: f64,
    #[serde(with = "exact_serde")]
    pub normalized_score: Score,
    pub normalized_score_value: f64,
    pub aqm: ActionQualityMap,
    pub np_aqm: ActionQualityMap,
    #[serde(with = "exact_serde")]
    pub aqm_score: Score,
    pub aqm_score_value: f64,
    #[serde(with = "exact_serde")]
    pub np_aqm_score: Score,
    pub np_aqm_score_value: f64,
    pub potential: PotentialScore,
    pub potential_value: f64,
    pub transform: VariantScore,
    pub transform_budget_exceeded: bool,
    pub pi2_source: SubplanSource,
    pub pi3_source: SubplanSource,
    pub stv_steps: Vec<RepairStepEntry>,
    pub corr_length: usize,
    pub comp_length: Option<usize>,
    pub divergence_state_index: usize,
    pub replan_failed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replan_error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordStatus {
    Ok,
    Error,
}

/// One JSONL line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub schema: u32,
    pub instance_id: String,
    pub model: String,
    pub prompt_type: String,
    pub domain: String,
    pub status: RecordStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<InstanceError>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<Box<InstanceMetrics>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GroupKey {
    pub model: String,
    pub prompt_type: String,
    pub domain: String,
}

impl EvaluationRecord {
    pub fn ok(id: &str, key: GroupKey, metrics: InstanceMetrics) -> Self {
        EvaluationRecord {
            schema: SCHEMA_VERSION,
            instance_id: id.to_string(),
            model: key.model,
            prompt_type: key.prompt_type,
            domain: key.domain,
            status: RecordStatus::Ok,
            error: None,
            metrics: Some(Box::new(metrics)),
        }
    }

    pub fn failed(id: &str, key: GroupKey, error: InstanceError) -> Self {
        EvaluationRecord {
            schema: SCHEMA_VERSION,
            instance_id: id.to_string(),
            model: key.model,
            prompt_type: key.prompt_type,
            domain: key.domain,
            status: RecordStatus::Error,
            error: Some(error),
            metrics: None,
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("records serialize")
    }
}

#[derive(Debug, thiserror::Error)]
#[error("records line {line}: {message}")]
pub struct RecordsError {
    pub line: usize,
    pub message: String,
}

/// Parses JSONL, skipping blank lines.
pub fn read_records(text: &str) -> Result<Vec<EvaluationRecord>, RecordsError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: EvaluationRecord = serde_json::from_str(line).map_err(|e| RecordsError {
            line: i + 1,
            message: e.to_string(),
        })?;
        if rec.schema != SCHEMA_VERSION {
            return Err(RecordsError {
                line: i + 1,
                message: format!("unsupported schema {}", rec.schema),
            });
        }
        out.push(rec);
    }
    Ok(out)
}
