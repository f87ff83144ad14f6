use super::{check_features, Head, Model, ModelKind, STEPS};
use crate::autodiff::{Tape, Tensor, Var};
use crate::error::Result;
use crate::nn::{lif_step_tape, Bound, LifConfig, LinearLayer, LstmLayer, ParamStore, SpikeMode};
use crate::rng::SplitMix64;

fn init_rng(kind: ModelKind, seed: u64) -> SplitMix64 {
    SplitMix64::derive(seed, &format!("init:{}", kind.id()))
}

/// `30 → 20 → 5 → 1` with ReLU, ReLU, sigmoid.
pub struct Ann {
    store: ParamStore,
    pub layers: [LinearLayer; 3],
}

impl Ann {
    pub fn new(seed: u64) -> Self {
        let mut rng = init_rng(ModelKind::Ann, seed);
        let mut store = ParamStore::new();
        let layers = [
            LinearLayer::new(&mut store, "fc1", 30, 20, &mut rng),
            LinearLayer::new(&mut store, "fc2", 20, 5, &mut rng),
            LinearLayer::new(&mut store, "fc3", 5, 1, &mut rng),
        ];
        Self { store, layers }
    }
}

impl Model for Ann {
    fn kind(&self) -> ModelKind {
        ModelKind::Ann
    }

    fn params(&self) -> &ParamStore {
        &self.store
    }

    fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    fn forward(&self, tape: &mut Tape, p: &Bound, x: Var) -> Result<Head> {
        check_features(tape, x)?;
        let h = self.layers[0].forward(tape, p, x)?;
        let h = tape.relu(h);
        let h = self.layers[1].forward(tape, p, h)?;
        let h = tape.relu(h);
        let o = self.layers[2].forward(tape, p, h)?;
        Ok(Head::Probability(tape.sigmoid(o)))
    }
}

/// `30 → 100` into a LIF layer, `100 → 2` into a second LIF layer, with the
/// same current injected at every step.
pub struct Snn {
    store: ParamStore,
    pub fc1: LinearLayer,
    pub fc2: LinearLayer,
    pub lif: LifConfig,
    pub steps: usize,
    pub mode: SpikeMode,
}

impl Snn {
    pub fn new(seed: u64) -> Self {
        let mut rng = init_rng(ModelKind::Snn, seed);
        let mut store = ParamStore::new();
        let fc1 = LinearLayer::new(&mut store, "fc1", 30, 100, &mut rng);
        let fc2 = LinearLayer::new(&mut store, "fc2", 100, 2, &mut rng);
        Self {
            store,
            fc1,
            fc2,
            lif: LifConfig::default(),
            steps: STEPS,
            mode: SpikeMode::Heaviside,
        }
    }
}

impl Model for Snn {
    fn kind(&self) -> ModelKind {
        ModelKind::Snn
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
        let b = check_features(tape, x)?;
        let current = self.fc1.forward(tape, p, x)?;
        let mut u1 = tape.constant(Tensor::zeros(&[b, 100]));
        let mut s1 = tape.constant(Tensor::zeros(&[b, 100]));
        let mut u2 = tape.constant(Tensor::zeros(&[b, 2]));
        let mut s2 = tape.constant(Tensor::zeros(&[b, 2]));
        let mut record = Vec::with_capacity(self.steps);
        for _ in 0..self.steps {
            (u1, s1) = lif_step_tape(tape, u1, s1, current, &self.lif, self.mode)?;
            let i2 = self.fc2.forward(tape, p, s1)?;
            (u2, s2) = lif_step_tape(tape, u2, s2, i2, &self.lif, self.mode)?;
            record.push(s2);
        }
        Ok(Head::SpikeRecord(record))
    }
}

/// Two stacked LSTM layers over a length-one sequence, then `50 → 128 → 1`
/// with a sigmoid output.
pub struct LstmModel {
    store: ParamStore,
    pub lstm: [LstmLayer; 2],
    pub fc1: LinearLayer,
    pub fc2: LinearLayer,
}

impl LstmModel {
    pub const HIDDEN: usize = 50;

    pub fn new(seed: u64) -> Self {
        let mut rng = init_rng(ModelKind::Lstm, seed);
        let mut store = ParamStore::new();
        let lstm = [
            LstmLayer::new(&mut store, "lstm.l0", 30, Self::HIDDEN, &mut rng),
            LstmLayer::new(&mut store, "lstm.l1", Self::HIDDEN, Self::HIDDEN, &mut rng),
        ];
        let fc1 = LinearLayer::new(&mut store, "fc1", Self::HIDDEN, 128, &mut rng);
        let fc2 = LinearLayer::new(&mut store, "fc2", 128, 1, &mut rng);
        Self {
            store,
            lstm,
            fc1,
            fc2,
        }
    }
}

impl Model for LstmModel {
    fn kind(&self) -> ModelKind {
        ModelKind::Lstm
    }

    fn params(&self) -> &ParamStore {
        &self.store
    }

    fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    fn forward(&self, tape: &mut Tape, p: &Bound, x: Var) -> Result<Head> {
        let b = check_features(tape, x)?;
        let zero = tape.constant(Tensor::zeros(&[b, Self::HIDDEN]));
        let (h1, _) = self.lstm[0].forward(tape, p, x, zero, zero)?;
        let (h2, _) = self.lstm[1].forward(tape, p, h1, zero, zero)?;
        let y = self.fc1.forward(tape, p, h2)?;
        let y = self.fc2.forward(tape, p, y)?;
        Ok(Head::Probability(tape.sigmoid(y)))
    }
}
