use std::f64::consts::TAU;
use std::sync::Arc;

use super::{check_features, Head, Model, ModelKind, STEPS};
use crate::autodiff::{Tape, Tensor, Var};
use crate::error::Result;
use crate::nn::{
    lif_step_tape, lstm_update, Bound, LifConfig, LinearLayer, ParamId, ParamStore, SpikeMode,
};
use crate::qsim::{
    basic_entangler_gates, circuit_layer, rot_cz_gates, CircuitSpec, Embedding, Readout,
};
use crate::rng::SplitMix64;

pub const N_QUBITS: usize = 5;

fn init_rng(kind: ModelKind, seed: u64) -> SplitMix64 {
    SplitMix64::derive(seed, &format!("init:{}", kind.id()))
}

/// Circuit angles drawn from `U(0, 2π)`.
pub(crate) fn circuit_params(
    store: &mut ParamStore,
    name: String,
    shape: &[usize],
    rng: &mut SplitMix64,
) -> ParamId {
    let n = shape.iter().product();
    let data = (0..n).map(|_| rng.uniform(0.0, TAU)).collect();
    store.add(name, Tensor::new(shape.to_vec(), data).expect("sized"))
}

/// Repeats the columns of `z` cyclically to width `d`.
fn tile_columns(tape: &mut Tape, z: Var, d: usize) -> Result<Var> {
    let n = tape.value(z).dims2()?.1;
    let reps = d.div_ceil(n);
    let wide = if reps > 1 {
        tape.concat(&vec![z; reps], 1)?
    } else {
        z
    };
    if reps * n == d {
        Ok(wide)
    } else {
        tape.slice(wide, 0..d, 1)
    }
}

/// Amplitude-embedded `30 → 5` qubits, five rotation/CZ layers, the 32
/// basis-state probabilities, then `32 → 1` and a sigmoid.
pub struct Qnn {
    store: ParamStore,
    spec: Arc<CircuitSpec>,
    pub vqc: ParamId,
    pub fc: LinearLayer,
}

impl Qnn {
    pub const LAYERS: usize = 5;

    pub fn new(seed: u64) -> Self {
        let mut rng = init_rng(ModelKind::Qnn, seed);
        let mut store = ParamStore::new();
        let spec = CircuitSpec::new(
            N_QUBITS,
            Embedding::Amplitude,
            rot_cz_gates(N_QUBITS, Self::LAYERS),
            Readout::Probabilities,
        )
        .expect("valid circuit");
        let vqc = circuit_params(
            &mut store,
            "vqc.weights".into(),
            &[Self::LAYERS, N_QUBITS, 3],
            &mut rng,
        );
        let fc = LinearLayer::new(&mut store, "fc", 1 << N_QUBITS, 1, &mut rng);
        Self {
            store,
            spec: Arc::new(spec),
            vqc,
            fc,
        }
    }
}

impl Model for Qnn {
    fn kind(&self) -> ModelKind {
        ModelKind::Qnn
    }

    fn params(&self) -> &ParamStore {
        &self.store
    }

    fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    fn forward(&self, tape: &mut Tape, p: &Bound, x: Var) -> Result<Head> {
        check_features(tape, x)?;
        let probs = circuit_layer(tape, &self.spec, x, p.var(self.vqc))?;
        let y = self.fc.forward(tape, p, probs)?;
        Ok(Head::Probability(tape.sigmoid(y)))
    }
}

/// LIF neurons whose membrane starts from the Z expectations of a one-layer
/// rotation/CZ circuit applied to the amplitude-embedded first input.
pub struct QlifCell {
    spec: Arc<CircuitSpec>,
    pub vqc: ParamId,
    pub cfg: LifConfig,
    pub dim: usize,
    /// When false the membrane starts at zero and the cell is a plain LIF layer.
    pub vqc_init: bool,
}

impl QlifCell {
    pub fn new(store: &mut ParamStore, name: &str, dim: usize, rng: &mut SplitMix64) -> Self {
        let spec = CircuitSpec::new(
            N_QUBITS,
            Embedding::Amplitude,
            rot_cz_gates(N_QUBITS, 1),
            Readout::ZExpectations,
        )
        .expect("valid circuit");
        Self {
            spec: Arc::new(spec),
            vqc: circuit_params(store, format!("{name}.vqc"), &[1, N_QUBITS, 3], rng),
            cfg: LifConfig::default(),
            dim,
            vqc_init: true,
        }
    }

    pub fn circuit(&self) -> &Arc<CircuitSpec> {
        &self.spec
    }

    /// `[batch, dim]` membrane from the first-step current `i0: [batch, dim]`.
    pub fn initial_membrane(&self, tape: &mut Tape, p: &Bound, i0: Var) -> Result<Var> {
        let z = circuit_layer(tape, &self.spec, i0, p.var(self.vqc))?;
        tile_columns(tape, z, self.dim)
    }

    /// One step from `state = (U, S_prev)`, or from the circuit-initialized
    /// membrane when `state` is `None`.
    pub fn step(
        &self,
        tape: &mut Tape,
        p: &Bound,
        state: Option<(Var, Var)>,
        input: Var,
        mode: SpikeMode,
    ) -> Result<(Var, Var)> {
        let (u, s) = match state {
            Some(st) => st,
            None => {
                let b = tape.value(input).dims2()?.0;
                let u0 = if self.vqc_init {
                    self.initial_membrane(tape, p, input)?
                } else {
                    tape.constant(Tensor::zeros(&[b, self.dim]))
                };
                (u0, tape.constant(Tensor::zeros(&[b, self.dim])))
            }
        };
        lif_step_tape(tape, u, s, input, &self.cfg, mode)
    }
}

/// `30 → 10` into a QLIF layer, `10 → 2` into a second QLIF layer.
pub struct Qsnn {
    store: ParamStore,
    pub fc1: LinearLayer,
    pub qlif1: QlifCell,
    pub fc2: LinearLayer,
    pub qlif2: QlifCell,
    pub steps: usize,
    pub mode: SpikeMode,
}

impl Qsnn {
    pub fn new(seed: u64) -> Self {
        let mut rng = init_rng(ModelKind::Qsnn, seed);
        let mut store = ParamStore::new();
        let fc1 = LinearLayer::new(&mut store, "fc1", 30, 10, &mut rng);
        let qlif1 = QlifCell::new(&mut store, "qlif1", 10, &mut rng);
        let fc2 = LinearLayer::new(&mut store, "fc2", 10, 2, &mut rng);
        let qlif2 = QlifCell::new(&mut store, "qlif2", 2, &mut rng);
        Self {
            store,
            fc1,
            qlif1,
            fc2,
            qlif2,
            steps: STEPS,
            mode: SpikeMode::Heaviside,
        }
    }

    /// Toggles the circuit initialization of both QLIF layers.
    pub fn set_vqc_init(&mut self, on: bool) {
        self.qlif1.vqc_init = on;
        self.qlif2.vqc_init = on;
    }
}

impl Model for Qsnn {
    fn kind(&self) -> ModelKind {
        ModelKind::Qsnn
    }

    fn params(&self) -> &ParamStore {
        &self.store
    }

    fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    fn set_spike_mode(&mut self, mode: SpikeMode) {
        self.mode = mode;
    }

    fn forward(&self, tape: &mut Tape, p: &Bound, x: Var) -> Result<Head> {
        check_features(tape, x)?;
        let current = self.fc1.forward(tape, p, x)?;
        let (mut st1, mut st2) = (None, None);
        let mut record = Vec::with_capacity(self.steps);
        for _ in 0..self.steps {
            let (u1, s1) = self.qlif1.step(tape, p, st1, current, self.mode)?;
            st1 = Some((u1, s1));
            let i2 = self.fc2.forward(tape, p, s1)?;
            let (u2, s2) = self.qlif2.step(tape, p, st2, i2, self.mode)?;
            st2 = Some((u2, s2));
            record.push(s2);
        }
        Ok(Head::SpikeRecord(record))
    }
}

/// LSTM cell whose four gates are angle-embedded entangler circuits sharing
/// an input projection `concat → 5` and an output projection `5 → hidden`.
pub struct QlstmCell {
    spec: Arc<CircuitSpec>,
    pub lin_in: LinearLayer,
    /// Forget, input, update, output.
    pub gates: [ParamId; 4],
    pub lin_out: LinearLayer,
    pub concat: usize,
    pub hidden: usize,
}

impl QlstmCell {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        concat: usize,
        hidden: usize,
        layers: usize,
        rng: &mut SplitMix64,
    ) -> Self {
        let spec = CircuitSpec::new(
            N_QUBITS,
            Embedding::Angle,
            basic_entangler_gates(N_QUBITS, layers),
            Readout::ZExpectations,
        )
        .expect("valid circuit");
        let lin_in = LinearLayer::new(store, &format!("{name}.in"), concat, N_QUBITS, rng);
        let gates = ["forget", "input", "update", "output"]
            .map(|g| circuit_params(store, format!("{name}.vqc_{g}"), &[layers, N_QUBITS], rng));
        let lin_out = LinearLayer::new(store, &format!("{name}.out"), N_QUBITS, hidden, rng);
        Self {
            spec: Arc::new(spec),
            lin_in,
            gates,
            lin_out,
            concat,
            hidden,
        }
    }

    /// `x_vec: [batch, concat]` already projected; `h, c: [batch, hidden]`.
    /// `h` is added into the trailing `hidden` slots of `x_vec`.
    pub fn step(
        &self,
        tape: &mut Tape,
        p: &Bound,
        x_vec: Var,
        h: Var,
        c: Var,
    ) -> Result<(Var, Var)> {
        let b = tape.value(x_vec).dims2()?.0;
        let pad = tape.constant(Tensor::zeros(&[b, self.concat - self.hidden]));
        let placed = tape.concat(&[pad, h], 1)?;
        let v = tape.add(x_vec, placed)?;
        let z = self.lin_in.forward(tape, p, v)?;
        let mut pre = [z; 4];
        for (slot, &g) in pre.iter_mut().zip(&self.gates) {
            let m = circuit_layer(tape, &self.spec, z, p.var(g))?;
            *slot = self.lin_out.forward(tape, p, m)?;
        }
        lstm_update(tape, pre, c)
    }
}

/// `30 → 155`, one QLSTM step with hidden size 125, then `125 → 1` and a sigmoid.
pub struct Qlstm {
    store: ParamStore,
    pub linear_a: LinearLayer,
    pub cell: QlstmCell,
    pub linear_d: LinearLayer,
}

impl Qlstm {
    pub const HIDDEN: usize = 125;
    pub const LAYERS: usize = 3;

    pub fn new(seed: u64) -> Self {
        let mut rng = init_rng(ModelKind::Qlstm, seed);
        let mut store = ParamStore::new();
        let concat = 30 + Self::HIDDEN;
        let linear_a = LinearLayer::new(&mut store, "linear_a", 30, concat, &mut rng);
        let cell = QlstmCell::new(
            &mut store,
            "cell",
            concat,
            Self::HIDDEN,
            Self::LAYERS,
            &mut rng,
        );
        let linear_d = LinearLayer::new(&mut store, "linear_d", Self::HIDDEN, 1, &mut rng);
        Self {
            store,
            linear_a,
            cell,
            linear_d,
        }
    }
}

impl Model for Qlstm {
    fn kind(&self) -> ModelKind {
        ModelKind::Qlstm
    }

    fn params(&self) -> &ParamStore {
        &self.store
    }

    fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    fn forward(&self, tape: &mut Tape, p: &Bound, x: Var) -> Result<Head> {
        let b = check_features(tape, x)?;
        let xv = self.linear_a.forward(tape, p, x)?;
        let zero = tape.constant(Tensor::zeros(&[b, Self::HIDDEN]));
        let (h, _) = self.cell.step(tape, p, xv, zero, zero)?;
        let y = self.linear_d.forward(tape, p, h)?;
        Ok(Head::Probability(tape.sigmoid(y)))
    }
}
