use super::params::{Bound, ParamId, ParamStore};
use crate::autodiff::{Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// `y = x·Wᵀ + b` with `W: [out, in]`, `b: [out]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LinearLayer {
    pub w: ParamId,
    pub b: ParamId,
    pub fan_in: usize,
    pub fan_out: usize,
}

impl LinearLayer {
    /// Registers `<name>.weight` and `<name>.bias`, both drawn from
    /// `U(-1/√in, 1/√in)`.
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        fan_in: usize,
        fan_out: usize,
        rng: &mut SplitMix64,
    ) -> Self {
        let k = 1.0 / (fan_in as f64).sqrt();
        let w: Vec<f64> = (0..fan_in * fan_out).map(|_| rng.uniform(-k, k)).collect();
        let b: Vec<f64> = (0..fan_out).map(|_| rng.uniform(-k, k)).collect();
        Self {
            w: store.add(
                format!("{name}.weight"),
                Tensor::matrix(fan_out, fan_in, w).expect("sized"),
            ),
            b: store.add(format!("{name}.bias"), Tensor::vector(b)),
            fan_in,
            fan_out,
        }
    }

    pub fn param_count(&self) -> usize {
        self.fan_in * self.fan_out + self.fan_out
    }

    pub fn forward(&self, tape: &mut Tape, p: &Bound, x: Var) -> Result<Var> {
        let cols = tape.value(x).dims2()?.1;
        if cols != self.fan_in {
            return Err(Error::dim(format!(
                "linear layer expects {} inputs, got {cols}",
                self.fan_in
            )));
        }
        let wt = tape.transpose(p.var(self.w))?;
        let y = tape.matmul(x, wt)?;
        tape.add(y, p.var(self.b))
    }

    /// Sets weight and bias to zero.
    pub fn zero(&self, store: &mut ParamStore) {
        store.get_mut(self.w).data_mut().fill(0.0);
        store.get_mut(self.b).data_mut().fill(0.0);
    }
}
