//! The seeded run protocol and its output files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::boxplot::{boxplot_stats, BoxStats};
use super::checkpoint::Checkpoint;
use super::record::{RunRecord, RECORD_SCHEMA_VERSION};
use crate::data::{make_splits, Dataset, SplitManifest, SplitSpec};
use crate::error::{Error, Result};
use crate::models::{build_model, prepare_data, train_model, ModelKind};

pub const SUMMARY_SCHEMA_VERSION: u32 = 1;
/// Fewest runs a boxplot summary is computed from.
pub const MIN_SUMMARY_RUNS: usize = 4;

/// Seeds given as `a..b` (inclusive), `a..=b`, or a comma-separated list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Seeds(pub Vec<u64>);

impl FromStr for Seeds {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("cannot parse seeds {s:?}"));
        let num = |t: &str| t.trim().parse::<u64>().map_err(|_| bad());
        let seeds = if let Some((a, b)) = s.split_once("..") {
            let (a, b) = (num(a)?, num(b.strip_prefix('=').unwrap_or(b))?);
            if a > b {
                return Err(bad());
            }
            (a..=b).collect()
        } else {
            s.split(',').map(num).collect::<Result<Vec<_>>>()?
        };
        Ok(Seeds(seeds))
    }
}

/// Split sizes to use for every seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitScale {
    /// Full protocol sizes, for the real dataset.
    Protocol,
    /// Proportionally smaller sizes that fit the bundled fixture.
    Fixture,
}

#[derive(Clone, Debug)]
pub struct ExperimentOptions {
    pub model: ModelKind,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub scale: SplitScale,
}

impl ExperimentOptions {
    pub fn new(model: ModelKind, seeds: Vec<u64>, out: impl Into<PathBuf>) -> Self {
        Self {
            model,
            seeds,
            out: out.into(),
            epochs: None,
            batch_size: None,
            scale: SplitScale::Protocol,
        }
    }
}

pub fn record_path(dir: &Path, model: ModelKind, seed: u64) -> PathBuf {
    dir.join(format!("run_{}_{seed}.json", model.id()))
}

pub fn manifest_path(dir: &Path, model: ModelKind, seed: u64) -> PathBuf {
    dir.join(format!("split_{}_{seed}.json", model.id()))
}

pub fn checkpoint_path(dir: &Path, model: ModelKind, seed: u64) -> PathBuf {
    dir.join(format!("checkpoint_{}_{seed}.qbck", model.id()))
}

pub fn summary_path(dir: &Path, model: ModelKind) -> PathBuf {
    dir.join(format!("summary_{}.json", model.id()))
}

pub fn curves_path(dir: &Path, model: ModelKind) -> PathBuf {
    dir.join(format!("curves_{}.csv", model.id()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Trains and evaluates one seed, writing its record, split manifest and checkpoint.
pub fn run_seed(ds: &Dataset, opts: &ExperimentOptions, seed: u64) -> Result<RunRecord> {
    let kind = opts.model;
    let mut cfg = kind.train_config();
    if let Some(e) = opts.epochs {
        cfg = cfg.with_epochs(e);
    }
    if let Some(b) = opts.batch_size {
        cfg = cfg.with_batch_size(b);
    }
    let spec = match opts.scale {
        SplitScale::Protocol => SplitSpec::protocol(cfg.regime, seed),
        SplitScale::Fixture => SplitSpec::fixture(cfg.regime, seed),
    };
    let splits = make_splits(ds, &spec)?;
    write_json(
        &manifest_path(&opts.out, kind, seed),
        &SplitManifest::new(cfg.regime, &spec, &splits),
    )?;
    let data = prepare_data(ds, &splits, cfg.preprocessing)?;
    let mut model = build_model(kind, seed);
    let rec = train_model(model.as_mut(), &cfg, &data, seed)?;
    Checkpoint::capture(model.as_ref(), seed, rec.epochs)
        .save(&checkpoint_path(&opts.out, kind, seed))?;
    write_json(&record_path(&opts.out, kind, seed), &rec)?;
    Ok(rec)
}

/// Runs every seed in parallel, then writes the learning curves and, with at
/// least four seeds, the boxplot summary. Each seed's files are written as
/// soon as that seed completes.
pub fn run_experiment(
    ds: &Dataset,
    opts: &ExperimentOptions,
) -> Result<(Vec<RunRecord>, Option<Summary>)> {
    if opts.seeds.is_empty() {
        return Err(Error::Config("no seeds given".into()));
    }
    fs::create_dir_all(&opts.out).map_err(|e| Error::io(&opts.out, e))?;
    let mut records = opts
        .seeds
        .par_iter()
        .map(|&seed| run_seed(ds, opts, seed))
        .collect::<Result<Vec<_>>>()?;
    records.sort_by_key(|r| r.seed);
    write_curves(&curves_path(&opts.out, opts.model), &records)?;
    let summary = if records.len() >= MIN_SUMMARY_RUNS {
        Some(write_summary(&opts.out, opts.model, &records)?)
    } else {
        None
    };
    Ok((records, summary))
}

/// Boxplot statistics of each metric across seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub model: String,
    pub seeds: Vec<u64>,
    pub f1: BoxStats,
    pub auc: BoxStats,
    pub precision: BoxStats,
    pub recall: BoxStats,
}

pub fn summarize(records: &[RunRecord]) -> Result<Summary> {
    let first = records
        .first()
        .ok_or_else(|| Error::Config("no run records to summarize".into()))?;
    if let Some(r) = records.iter().find(|r| r.model != first.model) {
        return Err(Error::Config(format!(
            "mixed models {} and {}",
            first.model, r.model
        )));
    }
    let stats =
        |f: fn(&RunRecord) -> f64| boxplot_stats(&records.iter().map(f).collect::<Vec<_>>());
    Ok(Summary {
        schema_version: SUMMARY_SCHEMA_VERSION,
        model: first.model.clone(),
        seeds: records.iter().map(|r| r.seed).collect(),
        f1: stats(|r| r.metrics.f1)?,
        auc: stats(|r| r.metrics.auc)?,
        precision: stats(|r| r.metrics.precision)?,
        recall: stats(|r| r.metrics.recall)?,
    })
}

#[derive(Serialize)]
struct CurveRow<'a> {
    epoch: usize,
    seed: u64,
    phase: &'a str,
    train_loss: f64,
    val_loss: f64,
}

pub fn write_curves(path: &Path, records: &[RunRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        for (e, (&tl, &vl)) in r.train_loss.iter().zip(&r.val_loss).enumerate() {
            w.serialize(CurveRow {
                epoch: e + 1,
                seed: r.seed,
                phase: &r.phase[e],
                train_loss: tl,
                val_loss: vl,
            })?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `summary_<model>.json` and `curves_<model>.csv` for records of one model.
pub fn write_summary(dir: &Path, model: ModelKind, records: &[RunRecord]) -> Result<Summary> {
    let mut sorted = records.to_vec();
    sorted.sort_by_key(|r| r.seed);
    let summary = summarize(&sorted)?;
    write_json(&summary_path(dir, model), &summary)?;
    write_curves(&curves_path(dir, model), &sorted)?;
    Ok(summary)
}

/// Reads every `run_*.json` in `dir` and rewrites the per-model summaries.
pub fn summarize_dir(dir: &Path) -> Result<Vec<Summary>> {
    let mut by_model: BTreeMap<String, Vec<RunRecord>> = BTreeMap::new();
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if !(name.starts_with("run_") && name.ends_with(".json")) {
            continue;
        }
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let rec: RunRecord = serde_json::from_str(&text)?;
        if rec.schema_version != RECORD_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "{} has record schema version {}",
                path.display(),
                rec.schema_version
            )));
        }
        by_model.entry(rec.model.clone()).or_default().push(rec);
    }
    if by_model.is_empty() {
        return Err(Error::Config(format!(
            "no run records in {}",
            dir.display()
        )));
    }
    by_model
        .into_iter()
        .map(|(id, recs)| write_summary(dir, id.parse()?, &recs))
        .collect()
}
