//! Metrics, summaries, checkpoints, and the experiment runner.

mod boxplot;
mod checkpoint;
mod experiment;
mod gradcheck;
mod metrics;
mod record;
mod schema;

pub use boxplot::{boxplot_stats, quantile, BoxStats};
pub use checkpoint::{config_hash, Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use experiment::{
    checkpoint_path, curves_path, manifest_path, record_path, run_experiment, run_seed, summarize,
    summarize_dir, summary_path, write_curves, write_summary, ExperimentOptions, Seeds, SplitScale,
    Summary, MIN_SUMMARY_RUNS, SUMMARY_SCHEMA_VERSION,
};
pub use gradcheck::{
    adjoint_vs_parameter_shift, gradcheck_suite, model_cases, CheckCase, CheckModule, FD_TOL,
    HYBRID_FD_TOL, SHIFT_TOL,
};
pub use metrics::{auc_pair_count, confusion, prf1, roc_auc, Confusion, Metrics, THRESHOLD};
pub use record::{RunRecord, SplitSizes, RECORD_SCHEMA_VERSION};
pub use schema::{RUN_RECORD_SCHEMA, SPLIT_MANIFEST_SCHEMA, SUMMARY_SCHEMA};
