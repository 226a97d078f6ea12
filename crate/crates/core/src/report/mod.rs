//! Pipeline driver over single instances and manifests, per-instance
//! records and grouped reports.

mod aggregate;
mod batch;
mod config;
mod pipeline;
mod record;

pub use aggregate::{aggregate, to_csv, ExperimentReport, GroupReport, METRIC_COLUMNS};
pub use batch::{
    evaluate_batch, evaluate_row, evaluate_rows, read_manifest, records_to_jsonl, BatchError, BatchOutput,
    ManifestError, ManifestRow,
};
pub use config::{Config, ConfigError, SimilarityProvider};
pub use pipeline::{evaluate_instance, Evaluation, GtSource, InstanceInput, Pipeline};
pub use record::{
    read_records, EvaluationRecord, GroupKey, InstanceError, InstanceMetrics, PlanMetrics, RecordStatus,
    RecordsError, Stage, SCHEMA_VERSION,
};
