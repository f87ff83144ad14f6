use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Classical,
    Quantum,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub seed: u64,
    pub train_fraud: usize,
    pub train_nonfraud: usize,
    pub test_fraud: usize,
    pub test_nonfraud: usize,
    pub validation_fraction: f64,
}

impl SplitSpec {
    /// Full-data protocol: test 101 + 999; train 390 + 5000 (classical) or 390 + 1000 (quantum).
    pub fn protocol(regime: Regime, seed: u64) -> Self {
        Self {
            seed,
            train_fraud: 390,
            train_nonfraud: match regime {
                Regime::Classical => 5000,
                Regime::Quantum => 1000,
            },
            test_fraud: 101,
            test_nonfraud: 999,
            validation_fraction: 0.2,
        }
    }

    /// Reduced counts that fit the bundled 2000-row fixture (100 positives).
    pub fn fixture(regime: Regime, seed: u64) -> Self {
        Self {
            seed,
            train_fraud: 78,
            train_nonfraud: match regime {
                Regime::Classical => 1000,
                Regime::Quantum => 200,
            },
            test_fraud: 20,
            test_nonfraud: 200,
            validation_fraction: 0.2,
        }
    }
}

/// Row indices of each split, sorted ascending.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Audit record of one split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub regime: Regime,
    pub spec: SplitSpec,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitManifest {
    pub fn new(regime: Regime, spec: &SplitSpec, splits: &Splits) -> Self {
        Self {
            seed: spec.seed,
            regime,
            spec: spec.clone(),
            train: splits.train.clone(),
            validation: splits.validation.clone(),
            test: splits.test.clone(),
        }
    }
}

/// Samples the test rows first, then training rows from the remainder, then
/// moves a per-class `validation_fraction` of the training rows to validation.
pub fn make_splits(ds: &Dataset, spec: &SplitSpec) -> Result<Splits> {
    if !(0.0..1.0).contains(&spec.validation_fraction) {
        return Err(Error::Config(format!(
            "validation fraction {} outside [0, 1)",
            spec.validation_fraction
        )));
    }
    let mut fraud: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels[i] == 1).collect();
    let mut normal: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels[i] == 0).collect();
    let need_f = spec.test_fraud + spec.train_fraud;
    let need_n = spec.test_nonfraud + spec.train_nonfraud;
    if fraud.len() < need_f || normal.len() < need_n {
        return Err(Error::Config(format!(
            "split needs {need_f} fraud and {need_n} non-fraud rows; data has {} and {}",
            fraud.len(),
            normal.len()
        )));
    }
    let mut rng = SplitMix64::derive(spec.seed, "split");
    rng.shuffle(&mut fraud);
    rng.shuffle(&mut normal);

    let mut test: Vec<usize> = fraud[..spec.test_fraud]
        .iter()
        .chain(&normal[..spec.test_nonfraud])
        .copied()
        .collect();
    let train_f = &fraud[spec.test_fraud..need_f];
    let train_n = &normal[spec.test_nonfraud..need_n];
    let n_val = |n: usize| (n as f64 * spec.validation_fraction).round() as usize;
    let (vf, vn) = (n_val(train_f.len()), n_val(train_n.len()));
    let mut validation: Vec<usize> = train_f[..vf]
        .iter()
        .chain(&train_n[..vn])
        .copied()
        .collect();
    let mut train: Vec<usize> = train_f[vf..]
        .iter()
        .chain(&train_n[vn..])
        .copied()
        .collect();
    test.sort_unstable();
    validation.sort_unstable();
    train.sort_unstable();
    if train.is_empty() {
        return Err(Error::Config("empty training split".into()));
    }
    Ok(Splits {
        train,
        validation,
        test,
    })
}

/// Mini-batches of `rows` in an order fixed by `(seed, epoch)`; the last batch may be short.
pub fn batch_iterator(rows: &[usize], batch_size: usize, seed: u64, epoch: u64) -> Vec<Vec<usize>> {
    assert!(batch_size >= 1, "batch size must be positive");
    let mut order = rows.to_vec();
    SplitMix64::derive(seed, "batches")
        .fork(epoch)
        .shuffle(&mut order);
    order.chunks(batch_size).map(<[usize]>::to_vec).collect()
}
