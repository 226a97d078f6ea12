use std::collections::BTreeMap;

use super::record::{EvaluationRecord, InstanceMetrics};

/// Report columns after the group keys and counts.
pub const METRIC_COLUMNS: &[&str] = &[
    "π₀ SR",
    "Score",
    "AQM",
    "StV",
    "LEA",
    "π₁ SR",
    "π₂ SR",
    "π₃ SR",
    "π₃ StV",
    "π₃ LEA",
    "π₄ SR",
    "|π_corr|",
    "π₁ StV",
    "π₂ LEA",
    "NP-AQM",
    "Potential",
    "|π_comp|",
];

#[derive(Debug, Clone, PartialEq)]
pub struct GroupReport {
    pub model: String,
    pub prompt_type: String,
    pub domain: String,
    pub instances: usize,
    pub errors: usize,
    /// Means in [`METRIC_COLUMNS`] order; `None` when nothing to average.
    pub metrics: Vec<Option<f64>>,
}

impl GroupReport {
    pub fn metric(&self, column: &str) -> Option<f64> {
        let i = METRIC_COLUMNS.iter().position(|c| *c == column)?;
        self.metrics[i]
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentReport {
    pub groups: Vec<GroupReport>,
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn row(m: &InstanceMetrics) -> [Option<f64>; 17] {
    [
        Some(flag(m.pi0.valid)),
        Some(m.normalized_score_value),
        Some(m.aqm_score_value),
        m.pi0.stv.map(|s| s as f64),
        Some(m.pi0.lea as f64),
        Some(flag(m.pi1.valid)),
        Some(flag(m.pi2.valid)),
        Some(flag(m.pi3.valid)),
        m.pi3.stv.map(|s| s as f64),
        Some(m.pi3.lea as f64),
        Some(flag(m.pi4.as_ref().is_some_and(|p| p.valid))),
        Some(m.corr_length as f64),
        m.pi1.stv.map(|s| s as f64),
        Some(m.pi2.lea as f64),
        Some(m.np_aqm_score_value),
        Some(m.potential_value),
        m.comp_length.map(|c| c as f64),
    ]
}

/// Groups by (model, prompt type, domain) in sorted key order. Means run
/// over every evaluated record of the group, including defaulted empty
/// generations; records that failed with an instance error are only
/// counted in `errors`.
pub fn aggregate(records: &[EvaluationRecord]) -> ExperimentReport {
    let mut groups: BTreeMap<(&str, &str, &str), Vec<&EvaluationRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.model.as_str(), r.prompt_type.as_str(), r.domain.as_str()))
            .or_default()
            .push(r);
    }
    let groups = groups
        .into_iter()
        .map(|((model, prompt_type, domain), recs)| {
            let mut sums = [0.0f64; 17];
            let mut counts = [0usize; 17];
            for m in recs.iter().filter_map(|r| r.metrics.as_deref()) {
                for (k, v) in row(m).into_iter().enumerate() {
                    if let Some(v) = v {
                        sums[k] += v;
                        counts[k] += 1;
                    }
                }
            }
            GroupReport {
                model: model.to_string(),
                prompt_type: prompt_type.to_string(),
                domain: domain.to_string(),
                instances: recs.len(),
                errors: recs.iter().filter(|r| r.metrics.is_none()).count(),
                metrics: (0..17)
                    .map(|k| (counts[k] > 0).then(|| sums[k] / counts[k] as f64))
                    .collect(),
            }
        })
        .collect();
    ExperimentReport { groups }
}

pub fn to_csv(report: &ExperimentReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["model", "prompt_type", "domain", "instances", "errors"];
    header.extend_from_slice(METRIC_COLUMNS);
    w.write_record(&header).expect("in-memory write");
    for g in &report.groups {
        let mut fields = vec![
            g.model.clone(),
            g.prompt_type.clone(),
            g.domain.clone(),
            g.instances.to_string(),
            g.errors.to_string(),
        ];
        fields.extend(g.metrics.iter().map(|m| m.map(|v| format!("{v:.6}")).unwrap_or_default()));
        w.write_record(&fields).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}
