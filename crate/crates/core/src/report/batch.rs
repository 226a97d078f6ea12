use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;

use super::aggregate::{aggregate, to_csv, ExperimentReport};
use super::pipeline::{GtSource, InstanceInput, Pipeline};
use super::record::{EvaluationRecord, GroupKey, InstanceError, Stage};
use crate::pddl::parse_domain;

/// One manifest row; relative paths resolve against the manifest's directory.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct ManifestRow {
    pub instance_id: String,
    pub domain_path: PathBuf,
    pub problem_path: PathBuf,
    pub plan_path: PathBuf,
    #[serde(default)]
    pub gt_plan_path: Option<PathBuf>,
    #[serde(default)]
    pub model: String,
    #[serde(default)]
    pub prompt_type: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("manifest row {row}: {cause}")]
pub struct ManifestError {
    /// 1-based data row; 0 for the header or the file itself.
    pub row: usize,
    pub cause: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutput {
    pub records: Vec<EvaluationRecord>,
    pub report: ExperimentReport,
}

impl BatchOutput {
    pub fn has_errors(&self) -> bool {
        self.records.iter().any(|r| r.error.is_some())
    }

    pub fn jsonl(&self) -> String {
        records_to_jsonl(&self.records)
    }

    pub fn csv(&self) -> String {
        to_csv(&self.report)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BatchError {
    /// Rows before the bad one were still evaluated and written.
    #[error("{error}")]
    Manifest {
        error: ManifestError,
        partial: Box<BatchOutput>,
    },
    #[error("{0}")]
    Io(String),
}

pub fn records_to_jsonl(records: &[EvaluationRecord]) -> String {
    records.iter().map(|r| r.to_json_line() + "\n").collect()
}

/// Reads rows up to the first bad one.
pub fn read_manifest(path: &Path) -> (Vec<ManifestRow>, Option<ManifestError>) {
    let mut reader = match csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path) {
        Ok(r) => r,
        Err(e) => {
            return (
                Vec::new(),
                Some(ManifestError {
                    row: 0,
                    cause: e.to_string(),
                }),
            )
        }
    };
    let base = path.parent().unwrap_or(Path::new(""));
    let mut rows = Vec::new();
    for (i, rec) in reader.deserialize::<ManifestRow>().enumerate() {
        match rec {
            Ok(mut row) => {
                row.gt_plan_path = row.gt_plan_path.filter(|p| !p.as_os_str().is_empty());
                for p in [&mut row.domain_path, &mut row.problem_path, &mut row.plan_path] {
                    *p = base.join(&*p);
                }
                if let Some(g) = &mut row.gt_plan_path {
                    *g = base.join(&*g);
                }
                rows.push(row);
            }
            Err(e) => {
                return (
                    rows,
                    Some(ManifestError {
                        row: i + 1,
                        cause: e.to_string(),
                    }),
                )
            }
        }
    }
    (rows, None)
}

fn read(path: &Path) -> Result<String, InstanceError> {
    fs::read_to_string(path).map_err(|e| InstanceError::new(Stage::Read, format!("{}: {e}", path.display())))
}

fn domain_key(row: &ManifestRow, text: Option<&str>) -> String {
    text.and_then(|t| parse_domain(t).ok())
        .map(|d| d.name)
        .or_else(|| row.domain_path.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .unwrap_or_default()
}

pub fn evaluate_row(pipeline: &Pipeline, row: &ManifestRow) -> EvaluationRecord {
    let domain = read(&row.domain_path);
    let key = GroupKey {
        model: row.model.clone(),
        prompt_type: row.prompt_type.clone(),
        domain: domain_key(row, domain.as_deref().ok()),
    };
    let input = (|| {
        Ok::<_, InstanceError>(InstanceInput {
            domain: domain.clone()?,
            problem: read(&row.problem_path)?,
            // a missing generation is scored as the empty plan
            plan: fs::read_to_string(&row.plan_path).ok(),
            gt: match &row.gt_plan_path {
                Some(p) => GtSource::Plan(read(p)?),
                None => GtSource::Solve,
            },
        })
    })();
    match input.and_then(|i| pipeline.evaluate(&i)) {
        Ok(e) => EvaluationRecord::ok(&row.instance_id, key, e.metrics),
        Err(err) => EvaluationRecord::failed(&row.instance_id, key, err),
    }
}

/// Evaluates rows on up to `jobs` threads; records keep manifest order.
pub fn evaluate_rows(pipeline: &Pipeline, rows: &[ManifestRow], jobs: usize) -> BatchOutput {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .expect("thread pool");
    let records: Vec<EvaluationRecord> = pool.install(|| rows.par_iter().map(|r| evaluate_row(pipeline, r)).collect());
    let report = aggregate(&records);
    BatchOutput { records, report }
}

/// Runs a manifest and writes JSONL records and the CSV report when paths
/// are given.
pub fn evaluate_batch(
    manifest: &Path,
    pipeline: &Pipeline,
    jobs: usize,
    records_out: Option<&Path>,
    csv_out: Option<&Path>,
) -> Result<BatchOutput, BatchError> {
    let (rows, manifest_error) = read_manifest(manifest);
    let out = evaluate_rows(pipeline, &rows, jobs);
    let write = |path: Option<&Path>, text: String| -> Result<(), BatchError> {
        match path {
            Some(p) => fs::write(p, text).map_err(|e| BatchError::Io(format!("{}: {e}", p.display()))),
            None => Ok(()),
        }
    };
    write(records_out, out.jsonl())?;
    write(csv_out, out.csv())?;
    match manifest_error {
        Some(error) => Err(BatchError::Manifest {
            error,
            partial: Box::new(out),
        }),
        None => Ok(out),
    }
}
