//! Gradient-check suites run by the `gradcheck` command and the acceptance tests.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;

use crate::autodiff::{grad_check_many, GradCheckOptions, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::models::{build_model, model_grad_check, ModelKind};
use crate::nn::{
    lif_step_tape, spike_count_ce, Bound, LifConfig, LinearLayer, LstmLayer, ParamStore, SpikeMode,
};
use crate::qsim::{
    basic_entangler_gates, circuit_layer, circuit_vjp, parameter_shift_grad, random_circuit,
    rot_cz_gates, CircuitSpec, Embedding, Readout,
};
use crate::rng::SplitMix64;

/// Tolerance for finite-difference checks of single operations and models.
pub const FD_TOL: f64 = 1e-5;
/// Tolerance for the 25-step hybrid end to end.
pub const HYBRID_FD_TOL: f64 = 1e-4;
/// Tolerance for adjoint against parameter shift.
pub const SHIFT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckModule {
    Autodiff,
    Qsim,
    Nn,
    Models,
}

impl CheckModule {
    pub const ALL: [CheckModule; 4] = [Self::Autodiff, Self::Qsim, Self::Nn, Self::Models];

    pub fn id(self) -> &'static str {
        match self {
            Self::Autodiff => "autodiff",
            Self::Qsim => "qsim",
            Self::Nn => "nn",
            Self::Models => "models",
        }
    }
}

impl fmt::Display for CheckModule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for CheckModule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.id() == s)
            .ok_or_else(|| Error::Config(format!("unknown module {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckCase {
    pub module: CheckModule,
    pub name: String,
    pub tol: f64,
    pub max_error: f64,
    pub passed: bool,
}

impl fmt::Display for CheckCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}::{} error {:.3e} (tol {:.0e})",
            if self.passed { "ok  " } else { "FAIL" },
            self.module,
            self.name,
            self.max_error,
            self.tol
        )
    }
}

fn case(module: CheckModule, name: &str, tol: f64, max_error: f64) -> CheckCase {
    CheckCase {
        module,
        name: name.to_string(),
        tol,
        max_error,
        passed: max_error <= tol,
    }
}

fn random_tensor(shape: &[usize], lo: f64, hi: f64, rng: &mut SplitMix64) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(
        shape.to_vec(),
        (0..n).map(|_| rng.uniform(lo, hi)).collect(),
    )
    .expect("shape matches")
}

fn fd_case<F>(
    module: CheckModule,
    name: &str,
    inputs: &[Tensor],
    opts: &GradCheckOptions,
    f: F,
) -> Result<CheckCase>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let r = grad_check_many(f, inputs, opts)?;
    Ok(case(module, name, opts.tol, r.max_rel_error))
}

type OpFn = fn(&mut Tape, &[Var]) -> Result<Var>;

fn autodiff_suite() -> Result<Vec<CheckCase>> {
    let mut rng = SplitMix64::derive(0, "gradcheck:autodiff");
    let a = random_tensor(&[3, 4], -1.5, 1.5, &mut rng);
    let b = random_tensor(&[4, 2], -1.5, 1.5, &mut rng);
    let c = random_tensor(&[3, 4], -1.5, 1.5, &mut rng);
    let row = random_tensor(&[4], -1.5, 1.5, &mut rng);
    // Keep relu inputs away from the kink.
    let kinkless = Tensor::new(
        vec![3, 4],
        a.data()
            .iter()
            .map(|v| if v.abs() < 0.1 { v + 0.3 } else { *v })
            .collect(),
    )?;
    let probs = random_tensor(&[3, 1], 0.1, 0.9, &mut rng);

    // Each case reduces to a scalar through a weighted sum so no gradient is trivially uniform.
    let weights = random_tensor(&[3, 4], -1.0, 1.0, &mut rng);
    let weighted = move |t: &mut Tape, v: Var| -> Result<Var> {
        let w = t.constant(weights.clone());
        let p = t.mul(v, w)?;
        Ok(t.sum(p))
    };

    let ops: Vec<(&str, Vec<Tensor>, OpFn)> = vec![
        ("matmul", vec![a.clone(), b.clone()], |t, v| {
            let m = t.matmul(v[0], v[1])?;
            let s = t.tanh(m);
            Ok(t.sum(s))
        }),
        ("transpose", vec![b.clone()], |t, v| {
            let tr = t.transpose(v[0])?;
            let sq = t.mul(tr, tr)?;
            let p = t.sigmoid(sq);
            Ok(t.mean(p))
        }),
        (
            "add_sub_mul",
            vec![a.clone(), c.clone(), row.clone()],
            |t, v| {
                let s = t.add(v[0], v[1])?;
                let d = t.sub(s, v[2])?;
                let m = t.mul(d, v[0])?;
                let m2 = t.mul(m, v[2])?;
                let th = t.tanh(m2);
                Ok(t.sum(th))
            },
        ),
        ("scale_offset", vec![a.clone()], |t, v| {
            let s = t.scale(v[0], -1.7);
            let o = t.offset(s, 0.4);
            let q = t.mul(o, o)?;
            Ok(t.mean(q))
        }),
        ("sigmoid", vec![a.clone()], |t, v| {
            let s = t.sigmoid(v[0]);
            let q = t.mul(s, v[0])?;
            Ok(t.sum(q))
        }),
        ("tanh", vec![a.clone()], |t, v| {
            let s = t.tanh(v[0]);
            let q = t.mul(s, s)?;
            Ok(t.sum(q))
        }),
        ("relu", vec![kinkless], |t, v| {
            let r = t.relu(v[0]);
            let q = t.mul(r, v[0])?;
            Ok(t.sum(q))
        }),
        ("concat_slice", vec![a.clone(), c.clone()], |t, v| {
            let cat = t.concat(&[v[0], v[1]], 1)?;
            let mid = t.slice(cat, 2..7, 1)?;
            let rows = t.slice(mid, 1..3, 0)?;
            let q = t.mul(rows, rows)?;
            let th = t.tanh(q);
            Ok(t.sum(th))
        }),
        ("concat_rows", vec![a.clone(), c.clone()], |t, v| {
            let cat = t.concat(&[v[0], v[1]], 0)?;
            let s = t.sigmoid(cat);
            let q = t.mul(s, cat)?;
            Ok(t.mean(q))
        }),
        ("bce", vec![probs], |t, v| {
            let target = Tensor::new(vec![3, 1], vec![1.0, 0.0, 1.0])?;
            t.bce_loss(v[0], &target)
        }),
        ("cross_entropy", vec![a.clone()], |t, v| {
            t.cross_entropy(v[0], &[3, 0, 2])
        }),
    ];
    let opts = GradCheckOptions::new(FD_TOL);
    let mut out = Vec::with_capacity(ops.len() + 1);
    for (name, inputs, f) in ops {
        out.push(fd_case(CheckModule::Autodiff, name, &inputs, &opts, f)?);
    }
    out.push(fd_case(
        CheckModule::Autodiff,
        "broadcast_weighted_sum",
        &[a, row],
        &opts,
        |t, v| {
            let s = t.add(v[0], v[1])?;
            let sq = t.mul(s, s)?;
            weighted(t, sq)
        },
    )?);
    Ok(out)
}

/// Adjoint gradients against parameter shift on `count` random circuits of
/// 2 to 5 qubits, for every output of both readouts. Returns the largest
/// absolute difference.
pub fn adjoint_vs_parameter_shift(count: usize, seed: u64) -> Result<f64> {
    let mut rng = SplitMix64::derive(seed, "gradcheck:shift");
    let mut worst = 0.0f64;
    for k in 0..count {
        let n = 2 + k % 4;
        let readout = if k % 2 == 0 {
            Readout::ZExpectations
        } else {
            Readout::Probabilities
        };
        let embedding = if k % 3 == 0 {
            Embedding::Amplitude
        } else {
            Embedding::Zero
        };
        let n_gates = 4 + rng.below(20) as usize;
        let (spec, params) = random_circuit(n, n_gates, embedding, readout, &mut rng);
        let inputs: Vec<f64> = (0..spec.input_len())
            .map(|_| rng.uniform(-1.0, 1.0))
            .collect();
        let jac = parameter_shift_grad(&spec, &params, &inputs)?;
        for (o, row) in jac.iter().enumerate() {
            let mut up = vec![0.0; spec.output_len()];
            up[o] = 1.0;
            let g = circuit_vjp(&spec, &params, &inputs, &up)?;
            for (a, b) in g.params.iter().zip(row) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    Ok(worst)
}

fn qsim_suite() -> Result<Vec<CheckCase>> {
    let mut rng = SplitMix64::derive(0, "gradcheck:qsim");
    let opts = GradCheckOptions::new(FD_TOL);
    let mut out = Vec::new();
    let layouts = [
        (
            "amplitude_rot_cz_z",
            Embedding::Amplitude,
            rot_cz_gates(4, 2),
            Readout::ZExpectations,
            10,
        ),
        (
            "amplitude_rot_cz_probs",
            Embedding::Amplitude,
            rot_cz_gates(3, 1),
            Readout::Probabilities,
            8,
        ),
        (
            "angle_entangler_z",
            Embedding::Angle,
            basic_entangler_gates(5, 3),
            Readout::ZExpectations,
            5,
        ),
    ];
    for (name, emb, gates, readout, k) in layouts {
        let n = gates.iter().flat_map(|g| g.wires).max().unwrap_or(0) + 1;
        let spec = Arc::new(CircuitSpec::new(n, emb, gates, readout)?);
        let x = random_tensor(&[2, k], -1.0, 1.0, &mut rng);
        let p = random_tensor(&[spec.n_params()], 0.0, 6.0, &mut rng);
        let w = random_tensor(&[2, spec.output_len()], -1.0, 1.0, &mut rng);
        out.push(fd_case(CheckModule::Qsim, name, &[x, p], &opts, |t, v| {
            let y = circuit_layer(t, &spec, v[0], v[1])?;
            let wv = t.constant(w.clone());
            let m = t.mul(y, wv)?;
            Ok(t.sum(m))
        })?);
    }
    let worst = adjoint_vs_parameter_shift(100, 0)?;
    out.push(case(
        CheckModule::Qsim,
        "adjoint_vs_parameter_shift",
        SHIFT_TOL,
        worst,
    ));
    Ok(out)
}

fn nn_suite() -> Result<Vec<CheckCase>> {
    let mut rng = SplitMix64::derive(0, "gradcheck:nn");
    let opts = GradCheckOptions::new(FD_TOL);
    let mut out = Vec::new();

    let cfg = LifConfig::default();
    let u = random_tensor(&[2, 3], -0.5, 1.5, &mut rng);
    let s = random_tensor(&[2, 3], 0.0, 1.0, &mut rng);
    let i = random_tensor(&[2, 3], -0.5, 1.5, &mut rng);
    out.push(fd_case(
        CheckModule::Nn,
        "lif_step_smooth",
        &[u, s, i.clone()],
        &opts,
        |t, v| {
            let (u1, s1) = lif_step_tape(t, v[0], v[1], v[2], &cfg, SpikeMode::Smooth)?;
            let (u2, s2) = lif_step_tape(t, u1, s1, v[2], &cfg, SpikeMode::Smooth)?;
            let a = t.sum(s2);
            let b = t.tanh(u2);
            let b = t.sum(b);
            t.add(a, b)
        },
    )?);

    let mut store = ParamStore::new();
    let lin = LinearLayer::new(&mut store, "fc", 4, 3, &mut rng);
    let lstm = LstmLayer::new(&mut store, "lstm", 3, 5, &mut rng);
    let x = random_tensor(&[2, 4], -1.0, 1.0, &mut rng);
    let h0 = random_tensor(&[2, 5], -0.5, 0.5, &mut rng);
    let c0 = random_tensor(&[2, 5], -0.5, 0.5, &mut rng);
    let mut inputs: Vec<Tensor> = store.iter().map(|(_, t)| t.clone()).collect();
    let np = inputs.len();
    inputs.extend([x, h0, c0]);
    out.push(fd_case(
        CheckModule::Nn,
        "linear_lstm_two_steps",
        &inputs,
        &opts,
        |t, v| {
            let p = Bound::from_vars(v[..np].to_vec());
            let z = lin.forward(t, &p, v[np])?;
            let (h1, c1) = lstm.forward(t, &p, z, v[np + 1], v[np + 2])?;
            let (h2, c2) = lstm.forward(t, &p, z, h1, c1)?;
            let a = t.sum(h2);
            let c2 = t.mul(c2, c2)?;
            let b = t.mean(c2);
            t.add(a, b)
        },
    )?);

    let record: Vec<Tensor> = (0..4)
        .map(|_| random_tensor(&[3, 2], -1.0, 1.0, &mut rng))
        .collect();
    out.push(fd_case(
        CheckModule::Nn,
        "spike_count_ce",
        &record,
        &opts,
        |t, v| Ok(spike_count_ce(t, v, &[1, 0, 1])?.0),
    )?);
    Ok(out)
}

fn model_batch(seed: u64) -> Tensor {
    let mut rng = SplitMix64::derive(seed, "gradcheck:batch");
    Tensor::matrix(2, 30, (0..60).map(|_| rng.normal()).collect()).expect("2x30")
}

/// Finite-difference check of every model on a batch of two, spiking models
/// in smooth mode. Large parameter tensors are sampled.
pub fn model_cases(kinds: &[ModelKind]) -> Result<Vec<CheckCase>> {
    let x = model_batch(0);
    let labels = [0u8, 1];
    kinds
        .iter()
        .map(|&kind| {
            let mut m = build_model(kind, 11);
            m.set_spike_mode(SpikeMode::Smooth);
            let tol = if kind == ModelKind::QsnnQlstm {
                HYBRID_FD_TOL
            } else {
                FD_TOL
            };
            let opts = GradCheckOptions::new(tol).sample(24, 3);
            let r = model_grad_check(m.as_ref(), &x, &labels, &opts)?;
            Ok(case(CheckModule::Models, kind.id(), tol, r.max_rel_error))
        })
        .collect()
}

pub fn gradcheck_suite(module: CheckModule) -> Result<Vec<CheckCase>> {
    match module {
        CheckModule::Autodiff => autodiff_suite(),
        CheckModule::Qsim => qsim_suite(),
        CheckModule::Nn => nn_suite(),
        CheckModule::Models => model_cases(&ModelKind::ALL),
    }
}
