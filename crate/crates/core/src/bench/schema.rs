//! JSON schemas of the output files, versioned alongside the code.

pub const RUN_RECORD_SCHEMA: &str = include_str!("../../schemas/run_record.v1.schema.json");
pub const SUMMARY_SCHEMA: &str = include_str!("../../schemas/summary.v1.schema.json");
pub const SPLIT_MANIFEST_SCHEMA: &str = include_str!("../../schemas/split_manifest.v1.schema.json");
