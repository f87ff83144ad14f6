use std::time::Instant;

use super::hybrid::{Hybrid, HybridPhase, HybridStage};
use super::{Model, ModelKind, TrainConfig};
use crate::autodiff::{Tape, Tensor};
use crate::bench::{Metrics, RunRecord, SplitSizes, RECORD_SCHEMA_VERSION};
use crate::data::{batch_iterator, Dataset, Preprocessing, Splits};
use crate::error::{Error, Result};
use crate::nn::{Optimizer, OptimizerKind, ParamId, PlateauScheduler};

/// Rows evaluated per forward pass outside training.
const EVAL_CHUNK: usize = 512;

/// Scaled features and labels of the three splits.
#[derive(Clone, Debug, PartialEq)]
pub struct PreparedData {
    pub train: (Tensor, Vec<u8>),
    pub validation: (Tensor, Vec<u8>),
    pub test: (Tensor, Vec<u8>),
}

impl PreparedData {
    pub fn sizes(&self) -> SplitSizes {
        let count = |y: &[u8]| {
            let pos = y.iter().filter(|&&v| v == 1).count();
            (pos, y.len() - pos)
        };
        let (tf, tn) = count(&self.train.1);
        let (vf, vn) = count(&self.validation.1);
        let (sf, sn) = count(&self.test.1);
        SplitSizes {
            train_fraud: tf,
            train_nonfraud: tn,
            validation_fraud: vf,
            validation_nonfraud: vn,
            test_fraud: sf,
            test_nonfraud: sn,
        }
    }
}

/// Selects the split rows and fits `pre` on the training rows only.
pub fn prepare_data(ds: &Dataset, splits: &Splits, pre: Preprocessing) -> Result<PreparedData> {
    let (xtr, ytr) = ds.subset(&splits.train)?;
    let (xva, yva) = ds.subset(&splits.validation)?;
    let (xte, yte) = ds.subset(&splits.test)?;
    let mut scaled = pre.apply(&xtr, &[&xva, &xte])?.into_iter();
    let mut next = || scaled.next().expect("three tensors");
    Ok(PreparedData {
        train: (next(), ytr),
        validation: (next(), yva),
        test: (next(), yte),
    })
}

/// Loss curves with the phase of each entry.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Curves {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub phase: Vec<String>,
}

impl Curves {
    fn push(&mut self, train: f64, val: f64, phase: &str) {
        self.train_loss.push(train);
        self.val_loss.push(val);
        self.phase.push(phase.to_string());
    }
}

/// Mean loss and positive-class scores of `model` on `(x, y)`, without gradients.
pub fn evaluate(model: &dyn Model, x: &Tensor, y: &[u8]) -> Result<(f64, Vec<f64>)> {
    let n = y.len();
    if n == 0 {
        return Err(Error::Config("cannot evaluate an empty split".into()));
    }
    let mut scores = Vec::with_capacity(n);
    let mut total = 0.0;
    for start in (0..n).step_by(EVAL_CHUNK) {
        let idx: Vec<usize> = (start..(start + EVAL_CHUNK).min(n)).collect();
        let mut tape = Tape::new();
        let p = model.params().bind_frozen(&mut tape);
        let xv = tape.constant(x.select_rows(&idx)?);
        let head = model.forward(&mut tape, &p, xv)?;
        let loss = head.loss(&mut tape, &y[start..start + idx.len()])?;
        total += tape.value(loss).item() * idx.len() as f64;
        scores.extend(head.scores(&tape));
    }
    Ok((total / n as f64, scores))
}

/// Positive-class scores of `model` on `x`.
pub fn predict(model: &dyn Model, x: &Tensor) -> Result<Vec<f64>> {
    let (n, _) = x.dims2()?;
    let mut scores = Vec::with_capacity(n);
    for start in (0..n).step_by(EVAL_CHUNK) {
        let idx: Vec<usize> = (start..(start + EVAL_CHUNK).min(n)).collect();
        let mut tape = Tape::new();
        let p = model.params().bind_frozen(&mut tape);
        let xv = tape.constant(x.select_rows(&idx)?);
        let head = model.forward(&mut tape, &p, xv)?;
        scores.extend(head.scores(&tape));
    }
    Ok(scores)
}

/// One pass over the training rows; returns the sample-weighted mean loss and
/// the number of samples seen.
fn train_epoch(
    model: &mut dyn Model,
    optimizers: &mut [&mut Optimizer],
    data: &PreparedData,
    batch_size: usize,
    seed: u64,
    epoch_key: u64,
) -> Result<(f64, usize)> {
    let (x, y) = &data.train;
    let rows: Vec<usize> = (0..y.len()).collect();
    let trainable: Vec<ParamId> = optimizers
        .iter()
        .flat_map(|o| o.params().to_vec())
        .collect();
    let mut total = 0.0;
    let mut seen = 0;
    for batch in batch_iterator(&rows, batch_size, seed, epoch_key) {
        let mut tape = Tape::new();
        let p = model.params().bind_only(&mut tape, &trainable);
        let xv = tape.constant(x.select_rows(&batch)?);
        let yb: Vec<u8> = batch.iter().map(|&i| y[i]).collect();
        let head = model.forward(&mut tape, &p, xv)?;
        let loss = head.loss(&mut tape, &yb)?;
        let lv = tape.value(loss).item();
        if !lv.is_finite() {
            return Err(Error::Domain(format!("training loss became {lv}")));
        }
        tape.backward(loss)?;
        let grads = p.grads(&tape);
        for o in optimizers.iter_mut() {
            o.step(model.params_mut(), &grads)?;
        }
        total += lv * batch.len() as f64;
        seen += batch.len();
    }
    Ok((total / seen as f64, seen))
}

fn check_data(data: &PreparedData) -> Result<()> {
    for (name, (_, y)) in [
        ("training", &data.train),
        ("validation", &data.validation),
        ("test", &data.test),
    ] {
        if y.is_empty() {
            return Err(Error::Config(format!("empty {name} split")));
        }
    }
    Ok(())
}

fn record(
    model: &dyn Model,
    cfg: &TrainConfig,
    data: &PreparedData,
    seed: u64,
    curves: Curves,
    started: Instant,
) -> Result<RunRecord> {
    let scores = predict(model, &data.test.0)?;
    Ok(RunRecord {
        schema_version: RECORD_SCHEMA_VERSION,
        model: model.kind().id().to_string(),
        seed,
        param_count: model.param_count(),
        config: cfg.clone(),
        split: data.sizes(),
        epochs: curves.train_loss.len(),
        train_loss: curves.train_loss,
        val_loss: curves.val_loss,
        phase: curves.phase,
        metrics: Metrics::compute(&scores, &data.test.1)?,
        wall_clock_secs: started.elapsed().as_secs_f64(),
    })
}

/// Trains with the configured optimizer and optional plateau scheduler, then
/// scores the test split. The hybrid runs its three phases.
pub fn train_model(
    model: &mut dyn Model,
    cfg: &TrainConfig,
    data: &PreparedData,
    seed: u64,
) -> Result<RunRecord> {
    if model.kind() == ModelKind::QsnnQlstm {
        let h = model.as_hybrid_mut().expect("hybrid model");
        return train_hybrid_three_phase(h, cfg, data, seed);
    }
    cfg.validate()?;
    check_data(data)?;
    let started = Instant::now();
    let all: Vec<ParamId> = model.params().ids().collect();
    let mut opt = Optimizer::new(cfg.optimizer.kind, cfg.optimizer.lr, all, model.params());
    let mut sched = cfg.plateau_patience.map(PlateauScheduler::new);
    let mut curves = Curves::default();
    for epoch in 0..cfg.epochs {
        let (train, _) = train_epoch(
            model,
            &mut [&mut opt],
            data,
            cfg.batch_size,
            seed,
            epoch as u64,
        )?;
        let (val, _) = evaluate(model, &data.validation.0, &data.validation.1)?;
        if let Some(s) = sched.as_mut() {
            s.step(val, &mut [&mut opt]);
        }
        curves.push(train, val, "train");
    }
    record(model, cfg, data, seed, curves, started)
}

/// Outcome of one hybrid phase.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseReport {
    pub epochs: usize,
    /// Training samples processed, summed over epochs.
    pub samples_seen: usize,
}

fn expect_phase(m: &Hybrid, want: HybridPhase, name: &str) -> Result<()> {
    if m.phase != want {
        return Err(Error::Contract(format!(
            "{name} requires the model in state {want:?}, found {:?}",
            m.phase
        )));
    }
    Ok(())
}

fn phase_epochs(cfg: &TrainConfig) -> Result<[usize; 2]> {
    cfg.validate()?;
    cfg.phase_epochs
        .ok_or_else(|| Error::Config("hybrid training needs phase epochs".into()))
}

// Epoch keys for the batch order, disjoint across phases.
const PHASE_TWO_KEY: u64 = 1 << 32;
const PHASE_THREE_BASE: u64 = 2 << 32;

/// Phase I: the QSNN (front, QLIF, head) alone with the count loss.
pub fn hybrid_phase_one(
    m: &mut Hybrid,
    cfg: &TrainConfig,
    data: &PreparedData,
    seed: u64,
    curves: &mut Curves,
) -> Result<PhaseReport> {
    expect_phase(m, HybridPhase::Fresh, "phase I")?;
    let [epochs, _] = phase_epochs(cfg)?;
    check_data(data)?;
    m.stage = HybridStage::Qsnn;
    let mut opt = Optimizer::new(
        cfg.optimizer.kind,
        cfg.optimizer.lr,
        m.qsnn_params(),
        m.params(),
    );
    let mut seen = 0;
    for epoch in 0..epochs {
        let (train, n) = train_epoch(m, &mut [&mut opt], data, cfg.batch_size, seed, epoch as u64)?;
        let (val, _) = evaluate(m, &data.validation.0, &data.validation.1)?;
        curves.push(train, val, "I");
        seen += n;
    }
    m.phase = HybridPhase::QsnnPretrained;
    Ok(PhaseReport {
        epochs,
        samples_seen: seen,
    })
}

fn qlstm_optimizer(m: &Hybrid, cfg: &TrainConfig) -> Optimizer {
    let spec = cfg.qlstm_optimizer.unwrap_or(super::OptimSpec {
        kind: OptimizerKind::Rmsprop,
        lr: 1e-2,
    });
    Optimizer::new(spec.kind, spec.lr, m.qlstm_params(), m.params())
}

/// Phase II: one pass over the training rows updating only the QLSTM branch.
pub fn hybrid_phase_two(
    m: &mut Hybrid,
    cfg: &TrainConfig,
    data: &PreparedData,
    seed: u64,
    curves: &mut Curves,
) -> Result<PhaseReport> {
    expect_phase(m, HybridPhase::QsnnPretrained, "phase II")?;
    check_data(data)?;
    m.stage = HybridStage::Joint;
    let mut opt = qlstm_optimizer(m, cfg);
    let (train, seen) = train_epoch(
        m,
        &mut [&mut opt],
        data,
        cfg.batch_size,
        seed,
        PHASE_TWO_KEY,
    )?;
    let (val, _) = evaluate(m, &data.validation.0, &data.validation.1)?;
    curves.push(train, val, "II");
    m.phase = HybridPhase::QlstmTrained;
    Ok(PhaseReport {
        epochs: 1,
        samples_seen: seen,
    })
}

/// Phase III: joint training on the QLSTM output with one optimizer for the
/// QSNN front and one for the QLSTM branch.
pub fn hybrid_phase_three(
    m: &mut Hybrid,
    cfg: &TrainConfig,
    data: &PreparedData,
    seed: u64,
    curves: &mut Curves,
) -> Result<PhaseReport> {
    expect_phase(m, HybridPhase::QlstmTrained, "phase III")?;
    let [_, epochs] = phase_epochs(cfg)?;
    check_data(data)?;
    m.stage = HybridStage::Joint;
    let mut front = Optimizer::new(
        cfg.optimizer.kind,
        cfg.optimizer.lr,
        m.qsnn_joint_params(),
        m.params(),
    );
    let mut branch = qlstm_optimizer(m, cfg);
    let mut seen = 0;
    for epoch in 0..epochs {
        let key = PHASE_THREE_BASE + epoch as u64;
        let (train, n) = train_epoch(
            m,
            &mut [&mut front, &mut branch],
            data,
            cfg.batch_size,
            seed,
            key,
        )?;
        let (val, _) = evaluate(m, &data.validation.0, &data.validation.1)?;
        curves.push(train, val, "III");
        seen += n;
    }
    m.phase = HybridPhase::CoTrained;
    Ok(PhaseReport {
        epochs,
        samples_seen: seen,
    })
}

/// Runs phases I, II and III in order and scores the QLSTM output on the test split.
pub fn train_hybrid_three_phase(
    m: &mut Hybrid,
    cfg: &TrainConfig,
    data: &PreparedData,
    seed: u64,
) -> Result<RunRecord> {
    let started = Instant::now();
    let mut curves = Curves::default();
    hybrid_phase_one(m, cfg, data, seed, &mut curves)?;
    hybrid_phase_two(m, cfg, data, seed, &mut curves)?;
    hybrid_phase_three(m, cfg, data, seed, &mut curves)?;
    record(m, cfg, data, seed, curves, started)
}
