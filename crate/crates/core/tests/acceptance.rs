//! One test per acceptance criterion. Each prints a single PASS/FAIL line to
//! stdout, bypassing the harness capture, and fails the test on FAIL.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::sync::Mutex;
use std::time::Instant;

use qubrain::autodiff::Tape;
use qubrain::bench::{
    auc_pair_count, checkpoint_path, gradcheck_suite, manifest_path, record_path, roc_auc,
    run_experiment, summary_path, CheckModule, ExperimentOptions, RunRecord, SplitScale, Summary,
    FD_TOL, HYBRID_FD_TOL, SHIFT_TOL,
};
use qubrain::data::{
    bundled_fixture, load_csv, make_splits, synthetic_dataset, SplitManifest, SplitSpec,
};
use qubrain::models::{
    build_model, hybrid_phase_one, hybrid_phase_three, hybrid_phase_two, prepare_data, Curves,
    Head, Hybrid, HybridPhase, HybridStage, Model, ModelKind,
};
use qubrain::nn::{lif_step, surrogate_grad, LifConfig, LifState, OptimizerKind};
use qubrain::qsim::{
    apply_gate, expval_z_all, probabilities, random_circuit, Angle, Embedding, GateOp, Readout,
    StateVector,
};
use qubrain::rng::SplitMix64;

// Criteria run one at a time so their runtime limits measure only themselves.
static SERIAL: Mutex<()> = Mutex::new(());

type Outcome = Result<String, String>;

fn criterion(n: u32, title: &str, limit_secs: Option<f64>, body: impl FnOnce() -> Outcome) {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let outcome = panic::catch_unwind(AssertUnwindSafe(body));
    let secs = start.elapsed().as_secs_f64();
    let (mut ok, mut detail) = match outcome {
        Ok(Ok(d)) => (true, d),
        Ok(Err(d)) => (false, d),
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            (false, format!("panicked: {msg}"))
        }
    };
    if let Some(limit) = limit_secs {
        if secs >= limit {
            ok = false;
            detail = format!("{detail}; runtime {secs:.1}s exceeds {limit}s");
        }
    }
    let line = format!(
        "criterion {n} [{title}]: {} ({detail}; {secs:.2}s)\n",
        if ok { "PASS" } else { "FAIL" }
    );
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
    assert!(ok, "{}", line.trim_end());
}

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

#[test]
fn criterion_1_parameter_counts() {
    criterion(1, "parameter-count oracles", Some(1.0), || {
        let expected = [
            (ModelKind::Ann, 731),
            (ModelKind::Snn, 3302),
            (ModelKind::Lstm, 43457),
            (ModelKind::Qnn, 108),
            (ModelKind::Qsnn, 362),
            (ModelKind::Qlstm, 6521),
            (ModelKind::QsnnQlstm, 774),
        ];
        let mut seen = Vec::new();
        for (kind, want) in expected {
            let m = build_model(kind, 0);
            let walked: usize = m.params().iter().map(|(_, t)| t.len()).sum();
            ensure!(walked == want, "{kind}: walked {walked}, expected {want}");
            seen.push(format!("{kind}={walked}"));
        }
        Ok(seen.join(" "))
    });
}

#[test]
fn criterion_2_gradient_suite() {
    criterion(2, "gradient suite", Some(120.0), || {
        let mut worst_fd = 0.0f64;
        let mut n = 0;
        let mut shift = None;
        let mut hybrid = None;
        for module in CheckModule::ALL {
            for c in gradcheck_suite(module).map_err(|e| e.to_string())? {
                ensure!(c.passed, "{c}");
                n += 1;
                match (module, c.name.as_str()) {
                    (CheckModule::Qsim, "adjoint_vs_parameter_shift") => {
                        ensure!(c.tol == SHIFT_TOL, "shift tolerance {}", c.tol);
                        shift = Some(c.max_error);
                    }
                    (CheckModule::Models, "qsnn-qlstm") => {
                        ensure!(c.tol == HYBRID_FD_TOL, "hybrid tolerance {}", c.tol);
                        hybrid = Some(c.max_error);
                    }
                    _ => {
                        ensure!(c.tol == FD_TOL, "{c} uses tolerance {}", c.tol);
                        worst_fd = worst_fd.max(c.max_error);
                    }
                }
            }
        }
        let shift = shift.ok_or("parameter-shift case missing")?;
        let hybrid = hybrid.ok_or("hybrid case missing")?;
        Ok(format!(
            "{n} cases; worst FD rel error {worst_fd:.2e}; hybrid end-to-end {hybrid:.2e}; adjoint vs shift on 100 circuits {shift:.2e}"
        ))
    });
}

#[test]
fn criterion_3_quantum_invariants() {
    criterion(3, "quantum invariants", Some(10.0), || {
        let mut rng = SplitMix64::new(3);
        let (spec, params) =
            random_circuit(8, 10_000, Embedding::Zero, Readout::ZExpectations, &mut rng);
        let state = spec.evolve(&params, &[]).map_err(|e| e.to_string())?;
        let drift = (state.norm() - 1.0).abs();
        ensure!(drift < 1e-12, "norm drift {drift:e}");

        let mut worst_p = 0.0f64;
        for k in 0..100 {
            let n = 2 + k % 7;
            let (spec, params) =
                random_circuit(n, 50, Embedding::Zero, Readout::Probabilities, &mut rng);
            let s = spec.evolve(&params, &[]).map_err(|e| e.to_string())?;
            worst_p = worst_p.max((probabilities(&s).iter().sum::<f64>() - 1.0).abs());
        }
        ensure!(worst_p < 1e-12, "probability sum off by {worst_p:e}");

        let mut worst_z = 0.0f64;
        for i in 0..100 {
            let theta = 2.0 * std::f64::consts::PI * i as f64 / 99.0;
            let s = apply_gate(&StateVector::zero(1), &GateOp::rx(0, Angle::Fixed(theta)))
                .map_err(|e| e.to_string())?;
            worst_z = worst_z.max((expval_z_all(&s)[0] - theta.cos()).abs());
        }
        ensure!(worst_z < 1e-12, "<Z> after RX off by {worst_z:e}");
        Ok(format!(
            "norm drift {drift:.1e}; probability sum {worst_p:.1e}; <Z>=cos θ {worst_z:.1e}"
        ))
    });
}

#[test]
fn criterion_4_lif_analytics() {
    criterion(4, "LIF analytic checks", Some(5.0), || {
        let cfg = LifConfig::default();
        let b = cfg.beta;
        let u0 = 0.8;
        let mut state = LifState {
            u: vec![u0],
            s_prev: vec![0.0],
        };
        let mut decay_err = 0.0f64;
        for t in 1..=100 {
            let (next, s) = lif_step(&state, &[0.0], &cfg).map_err(|e| e.to_string())?;
            ensure!(s[0] == 0.0, "spike during decay at step {t}");
            decay_err = decay_err.max((next.u[0] - u0 * b.powi(t)).abs());
            state = next;
        }
        ensure!(decay_err < 1e-12, "decay error {decay_err:e}");

        let c = 0.04;
        let mut state = LifState::zeros(1);
        for _ in 0..2000 {
            let (next, s) = lif_step(&state, &[c], &cfg).map_err(|e| e.to_string())?;
            ensure!(s[0] == 0.0, "sub-threshold input spiked");
            state = next;
        }
        let steady_err = (state.u[0] - c / (1.0 - b)).abs();
        ensure!(steady_err < 1e-9, "steady state error {steady_err:e}");

        for alpha in [0.5, 2.0, 5.0] {
            let peak = surrogate_grad(0.0, alpha);
            ensure!(
                (peak - alpha / 2.0).abs() < 1e-15,
                "peak {peak} for alpha {alpha}"
            );
            for i in 1..=400 {
                let u = i as f64 * 0.025;
                let (gp, gm) = (surrogate_grad(u, alpha), surrogate_grad(-u, alpha));
                ensure!(gp == gm, "not even at {u}");
                ensure!(gp > 0.0 && gp < peak, "not positive below the peak at {u}");
            }
        }
        Ok(format!("decay error {decay_err:.1e}; steady-state error {steady_err:.1e}; surrogate even, positive, peak α/2"))
    })
}

/// Hyperparameters written out independently of the model code.
fn table_row(
    kind: ModelKind,
) -> (
    OptimizerKind,
    f64,
    usize,
    usize,
    Option<usize>,
    Option<usize>,
) {
    use OptimizerKind::*;
    match kind {
        ModelKind::Ann => (Sgd, 1e-2, 128, 700, None, None),
        ModelKind::Snn => (Adam, 1e-3, 64, 350, None, Some(25)),
        ModelKind::Lstm => (Adam, 1e-3, 128, 350, Some(30), None),
        ModelKind::Qnn => (Rmsprop, 1e-2, 256, 70, None, None),
        ModelKind::Qsnn => (Sgd, 1e-3, 64, 80, None, Some(25)),
        ModelKind::Qlstm => (Adam, 1e-2, 256, 100, Some(20), None),
        ModelKind::QsnnQlstm => (Adam, 1e-2, 128, 40, None, Some(25)),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(p: &Path) -> T {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn criterion_5_protocol_reproduction() {
    criterion(5, "protocol reproduction", None, || {
        // Same class counts as the real data set, so the full split sizes apply.
        let ds = synthetic_dataset(492, 7000, 11);
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let rerun = tempfile::tempdir().map_err(|e| e.to_string())?;
        let mut total_runs = 0;
        for kind in ModelKind::ALL {
            let base = kind.train_config();
            let (opt, lr, batch, epochs, patience, steps) = table_row(kind);
            ensure!(
                base.optimizer.kind == opt
                    && base.optimizer.lr == lr
                    && base.batch_size == batch
                    && base.epochs == epochs
                    && base.plateau_patience == patience
                    && base.steps == steps,
                "{kind}: configured {base:?}"
            );
            if kind == ModelKind::QsnnQlstm {
                let q = base
                    .qlstm_optimizer
                    .ok_or("hybrid without QLSTM optimizer")?;
                ensure!(
                    q.kind == OptimizerKind::Rmsprop && q.lr == 1e-2,
                    "hybrid QLSTM optimizer {q:?}"
                );
                ensure!(
                    base.phase_epochs == Some([20, 20]),
                    "hybrid phases {:?}",
                    base.phase_epochs
                );
            }

            // Epochs are cut to keep the suite short; everything else is the protocol.
            let short = if kind == ModelKind::QsnnQlstm { 2 } else { 1 };
            let mut opts = ExperimentOptions::new(kind, (0..10).collect(), dir.path());
            opts.epochs = Some(short);
            opts.scale = SplitScale::Protocol;
            let (records, summary) =
                run_experiment(&ds, &opts).map_err(|e| format!("{kind}: {e}"))?;
            ensure!(records.len() == 10, "{kind}: {} records", records.len());
            let summary = summary.ok_or("no summary")?;
            let on_disk: Summary = read_json(&summary_path(dir.path(), kind));
            ensure!(
                on_disk == summary && summary.f1.n == 10,
                "{kind}: summary mismatch"
            );
            ensure!(
                summary.f1.q1 <= summary.f1.median && summary.f1.median <= summary.f1.q3,
                "{kind}: quartiles out of order"
            );

            let (train_nf, val_nf) = match kind.regime() {
                qubrain::data::Regime::Classical => (5000, 1000),
                qubrain::data::Regime::Quantum => (1000, 200),
            };
            for r in &records {
                let s = r.split;
                ensure!(
                    s.train_fraud + s.validation_fraud == 390 && s.validation_fraud == 78,
                    "{kind} seed {}: fraud split {s:?}",
                    r.seed
                );
                ensure!(
                    s.train_nonfraud + s.validation_nonfraud == train_nf
                        && s.validation_nonfraud == val_nf,
                    "{kind} seed {}: non-fraud split {s:?}",
                    r.seed
                );
                ensure!(
                    s.test_fraud == 101 && s.test_nonfraud == 999,
                    "{kind} seed {}: test split {s:?}",
                    r.seed
                );
                ensure!(
                    r.config == base.clone().with_epochs(short),
                    "{kind}: run config {:?}",
                    r.config
                );
                ensure!(
                    r.train_loss.len() == r.epochs && r.val_loss.len() == r.epochs,
                    "{kind}: curve lengths"
                );
                let m = r.metrics;
                ensure!(
                    m.confusion.total() == 1100,
                    "{kind}: confusion total {}",
                    m.confusion.total()
                );

                let manifest: SplitManifest = read_json(&manifest_path(dir.path(), kind, r.seed));
                let sets: Vec<BTreeSet<usize>> =
                    [&manifest.train, &manifest.validation, &manifest.test]
                        .iter()
                        .map(|v| v.iter().copied().collect())
                        .collect();
                ensure!(
                    sets[0].is_disjoint(&sets[1])
                        && sets[0].is_disjoint(&sets[2])
                        && sets[1].is_disjoint(&sets[2]),
                    "{kind} seed {}: overlapping splits",
                    r.seed
                );
                let test_fraud = manifest.test.iter().filter(|&&i| ds.labels[i] == 1).count();
                ensure!(
                    test_fraud == 101 && manifest.test.len() == 1100,
                    "{kind}: manifest test rows"
                );
            }

            // Determinism: repeat two seeds in a fresh directory.
            for seed in [0, 7] {
                let mut again = opts.clone();
                again.out = rerun.path().to_path_buf();
                again.seeds = vec![seed];
                let (rep, _) = run_experiment(&ds, &again).map_err(|e| e.to_string())?;
                let first = records.iter().find(|r| r.seed == seed).unwrap();
                ensure!(
                    rep[0].without_timing() == first.without_timing(),
                    "{kind} seed {seed}: record differs"
                );
                for path in [checkpoint_path, manifest_path] {
                    let a = fs::read(path(dir.path(), kind, seed)).map_err(|e| e.to_string())?;
                    let b = fs::read(path(rerun.path(), kind, seed)).map_err(|e| e.to_string())?;
                    ensure!(a == b, "{kind} seed {seed}: output file differs");
                }
                let a: RunRecord = read_json(&record_path(dir.path(), kind, seed));
                let b: RunRecord = read_json(&record_path(rerun.path(), kind, seed));
                ensure!(
                    a.without_timing() == b.without_timing(),
                    "{kind} seed {seed}: record file differs"
                );
            }
            total_runs += records.len();
        }
        Ok(format!(
            "{total_runs} runs over 7 models at protocol split sizes, summaries written, seeds 0 and 7 repeat bit-identically; \
             epochs cut to 1 (2 for the hybrid), configured hyperparameters checked against the reference table"
        ))
    });
}

/// Runs the full protocol on the real data set given by `QUBRAIN_DATA`.
/// Takes hours; run with `cargo test --release --test acceptance -- --ignored`.
#[test]
#[ignore = "needs the real transactions CSV in QUBRAIN_DATA and several hours"]
fn criterion_6_real_data_performance() {
    criterion(6, "real-data performance smoke", None, || {
        let path =
            std::env::var("QUBRAIN_DATA").map_err(|_| "QUBRAIN_DATA is not set".to_string())?;
        let ds = load_csv(&path).map_err(|e| e.to_string())?;
        let out = tempfile::tempdir().map_err(|e| e.to_string())?;
        let mut medians = std::collections::BTreeMap::new();
        let (mut classical_secs, mut quantum_secs) = (0.0, 0.0);
        for kind in ModelKind::ALL {
            let start = Instant::now();
            let opts = ExperimentOptions::new(kind, (0..10).collect(), out.path());
            let (_, summary) = run_experiment(&ds, &opts).map_err(|e| format!("{kind}: {e}"))?;
            let s = summary.ok_or("no summary")?;
            let secs = start.elapsed().as_secs_f64();
            match kind.regime() {
                qubrain::data::Regime::Classical => classical_secs += secs,
                qubrain::data::Regime::Quantum => quantum_secs += secs,
            }
            medians.insert(kind, (s.auc.median, s.f1.median));
        }
        let mut failures = Vec::new();
        let ann_auc = medians[&ModelKind::Ann].0;
        if ann_auc < 0.90 {
            failures.push(format!("ann median AUC {ann_auc:.4} < 0.90"));
        }
        for (kind, (auc, _)) in &medians {
            if *auc < 0.85 {
                failures.push(format!("{kind} median AUC {auc:.4} < 0.85"));
            }
        }
        let hybrid_f1 = medians[&ModelKind::QsnnQlstm].1;
        for other in [ModelKind::Qnn, ModelKind::Qlstm] {
            let f1 = medians[&other].1;
            if hybrid_f1 < f1 - 0.02 {
                failures.push(format!(
                    "hybrid median F1 {hybrid_f1:.4} < {other} {f1:.4} - 0.02"
                ));
            }
        }
        if quantum_secs >= 8.0 * 3600.0 {
            failures.push(format!("quantum suite took {quantum_secs:.0}s"));
        }
        if classical_secs >= 30.0 * 60.0 {
            failures.push(format!("classical suite took {classical_secs:.0}s"));
        }
        let table: Vec<String> = medians
            .iter()
            .map(|(k, (a, f))| format!("{k} auc {a:.4} f1 {f:.4}"))
            .collect();
        let detail = format!(
            "{}; classical {classical_secs:.0}s, quantum {quantum_secs:.0}s",
            table.join(", ")
        );
        if failures.is_empty() {
            Ok(detail)
        } else {
            Err(format!("{}; {detail}", failures.join("; ")))
        }
    });
}

fn snapshot(m: &Hybrid, prefix: &str) -> Vec<(String, Vec<u64>)> {
    m.params()
        .iter()
        .filter(|(n, _)| n.starts_with(prefix))
        .map(|(n, t)| {
            (
                n.to_string(),
                t.data().iter().map(|v| v.to_bits()).collect(),
            )
        })
        .collect()
}

#[test]
fn criterion_7_three_phase_contract() {
    criterion(7, "three-phase contract", None, || {
        let kind = ModelKind::QsnnQlstm;
        let cfg = kind.train_config();
        ensure!(
            cfg.phase_epochs == Some([20, 20]) && cfg.epochs == 40,
            "phase epochs {:?}",
            cfg.phase_epochs
        );
        let ds = bundled_fixture();
        let splits =
            make_splits(&ds, &SplitSpec::fixture(cfg.regime, 4)).map_err(|e| e.to_string())?;
        let data = prepare_data(&ds, &splits, cfg.preprocessing).map_err(|e| e.to_string())?;
        let mut m = Hybrid::new(4);
        let mut curves = Curves::default();
        let e = |e: qubrain::error::Error| e.to_string();

        let p1 = hybrid_phase_one(&mut m, &cfg, &data, 4, &mut curves).map_err(e)?;
        ensure!(
            m.phase() == HybridPhase::QsnnPretrained,
            "state after phase I: {:?}",
            m.phase()
        );
        let qsnn_after_one = snapshot(&m, "qsnn.");
        let qlstm_after_one = snapshot(&m, "qlstm.");

        let p2 = hybrid_phase_two(&mut m, &cfg, &data, 4, &mut curves).map_err(e)?;
        ensure!(
            snapshot(&m, "qsnn.") == qsnn_after_one,
            "QSNN parameters moved in phase II"
        );
        ensure!(
            snapshot(&m, "qlstm.") != qlstm_after_one,
            "QLSTM parameters did not train in phase II"
        );
        ensure!(
            p2.epochs == 1 && p2.samples_seen == data.train.1.len(),
            "phase II was not a single pass: {p2:?}"
        );

        // The joint objective reaches the QLSTM and the QSNN front, never the QSNN head.
        ensure!(
            m.stage == HybridStage::Joint,
            "stage after phase II: {:?}",
            m.stage
        );
        let mut tape = Tape::new();
        let p = m.params().bind(&mut tape);
        let idx: Vec<usize> = (0..8).collect();
        let x = tape.constant(data.train.0.select_rows(&idx).map_err(e)?);
        let head = m.forward(&mut tape, &p, x).map_err(e)?;
        ensure!(
            matches!(head, Head::TwoSigmoid(_)),
            "joint head is not the QLSTM output"
        );
        let labels: Vec<u8> = idx.iter().map(|&i| data.train.1[i]).collect();
        let loss = head.loss(&mut tape, &labels).map_err(e)?;
        tape.backward(loss).map_err(e)?;
        let grads = p.grads(&tape);
        for (id, g) in m.params().ids().zip(&grads) {
            let name = m.params().name(id);
            let g = g.as_ref().ok_or("unbound parameter")?;
            let touched = g.iter().any(|v| *v != 0.0);
            if name.starts_with("qsnn.head") {
                ensure!(!touched, "joint loss reaches {name}");
            }
        }

        let head_before = snapshot(&m, "qsnn.head");
        let front_before = snapshot(&m, "qsnn.front");
        let p3 = hybrid_phase_three(&mut m, &cfg, &data, 4, &mut curves).map_err(e)?;
        ensure!(
            snapshot(&m, "qsnn.head") == head_before,
            "phase III updated the QSNN head"
        );
        ensure!(
            snapshot(&m, "qsnn.front") != front_before,
            "phase III left the QSNN front untouched"
        );
        ensure!(
            m.phase() == HybridPhase::CoTrained,
            "final state {:?}",
            m.phase()
        );
        ensure!(
            p1.epochs + p3.epochs == 40,
            "phase I + III epochs {}",
            p1.epochs + p3.epochs
        );
        let count = |tag: &str| curves.phase.iter().filter(|p| *p == tag).count();
        ensure!(
            count("I") == 20 && count("II") == 1 && count("III") == 20,
            "curve phases {:?}",
            curves.phase
        );
        Ok(format!(
            "QSNN bit-exact through phase II; phase II one pass of {} samples; phases I+III = {} epochs; joint loss leaves the QSNN head untouched",
            p2.samples_seen,
            p1.epochs + p3.epochs
        ))
    });
}

#[test]
fn criterion_8_auc_oracle() {
    criterion(8, "AUC oracle", Some(5.0), || {
        let mut rng = SplitMix64::new(8);
        let mut ties = 0;
        for k in 0..1000 {
            let n = 2 + rng.below(49) as usize;
            let mut labels: Vec<u8> = (0..n).map(|_| (rng.next_f64() < 0.3) as u8).collect();
            labels[0] = 1;
            labels[1] = 0;
            let scores: Vec<f64> = (0..n)
                .map(|_| {
                    let s = rng.next_f64();
                    // Coarse scores on every other instance force ties.
                    if k % 2 == 0 {
                        (s * 8.0).floor() / 8.0
                    } else {
                        s
                    }
                })
                .collect();
            if k % 2 == 0 {
                ties += 1;
            }
            let fast = roc_auc(&scores, &labels).map_err(|e| e.to_string())?;
            let slow = auc_pair_count(&scores, &labels).map_err(|e| e.to_string())?;
            ensure!(
                fast.to_bits() == slow.to_bits(),
                "instance {k}: rank {fast} vs pairs {slow}"
            );
        }
        Ok(format!(
            "1000 instances of 2..50 points ({ties} with tied scores) match exactly"
        ))
    });
}
