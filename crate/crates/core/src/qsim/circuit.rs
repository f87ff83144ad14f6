use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::gates::{apply_generator, apply_raw, apply_raw_adjoint, resolve, Angle, GateOp};
use super::state::{amplitude_embed, expval_z_all, probabilities, StateVector};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Embedding {
    /// Inputs are zero-padded and normalized into the amplitudes.
    Amplitude,
    /// `RX(input[q])` on every qubit `q` of `|0…0⟩`.
    Angle,
    /// Start from `|0…0⟩`; the circuit takes no inputs.
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Readout {
    ZExpectations,
    Probabilities,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitSpec {
    pub n_qubits: usize,
    pub embedding: Embedding,
    pub gates: Vec<GateOp>,
    pub output: Readout,
}

impl CircuitSpec {
    pub fn new(
        n_qubits: usize,
        embedding: Embedding,
        gates: Vec<GateOp>,
        output: Readout,
    ) -> Result<Self> {
        let spec = Self {
            n_qubits,
            embedding,
            gates,
            output,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Number of trainable parameters (one past the largest index used).
    pub fn n_params(&self) -> usize {
        self.gates
            .iter()
            .filter_map(|g| match g.angle {
                Some(Angle::Param(i)) => Some(i + 1),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn output_len(&self) -> usize {
        match self.output {
            Readout::ZExpectations => self.n_qubits,
            Readout::Probabilities => 1 << self.n_qubits,
        }
    }

    /// Expected input length (an upper bound for amplitude embedding).
    pub fn input_len(&self) -> usize {
        match self.embedding {
            Embedding::Amplitude => 1 << self.n_qubits,
            Embedding::Angle => self.n_qubits,
            Embedding::Zero => 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for g in &self.gates {
            g.validate(self.n_qubits)?;
            if matches!(g.angle, Some(Angle::Input(_))) {
                return Err(Error::Contract(
                    "input-driven angles belong to the embedding, not the gate list".into(),
                ));
            }
        }
        let p = self.n_params();
        let mut seen = vec![false; p];
        for g in &self.gates {
            if let Some(Angle::Param(i)) = g.angle {
                seen[i] = true;
            }
        }
        if let Some(gap) = seen.iter().position(|s| !s) {
            return Err(Error::Contract(format!(
                "parameter index {gap} is never used (indices must cover 0..{p})"
            )));
        }
        Ok(())
    }

    fn embedding_gates(&self) -> Vec<GateOp> {
        match self.embedding {
            Embedding::Angle => (0..self.n_qubits)
                .map(|q| GateOp::rx(q, Angle::Input(q)))
                .collect(),
            _ => Vec::new(),
        }
    }

    fn initial_state(&self, inputs: &[f64]) -> Result<StateVector> {
        match self.embedding {
            Embedding::Amplitude => amplitude_embed(inputs, self.n_qubits),
            Embedding::Angle => {
                if inputs.len() != self.n_qubits {
                    return Err(Error::dim(format!(
                        "angle embedding of {} values on {} qubits",
                        inputs.len(),
                        self.n_qubits
                    )));
                }
                Ok(StateVector::zero(self.n_qubits))
            }
            Embedding::Zero => Ok(StateVector::zero(self.n_qubits)),
        }
    }

    fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::dim(format!(
                "circuit takes {} parameters, got {}",
                self.n_params(),
                params.len()
            )));
        }
        Ok(())
    }

    /// Final state after embedding and all gates.
    pub fn evolve(&self, params: &[f64], inputs: &[f64]) -> Result<StateVector> {
        self.check_params(params)?;
        let mut state = self.initial_state(inputs)?;
        for g in self.embedding_gates().iter().chain(&self.gates) {
            let theta = resolve(g, params, inputs)?;
            apply_raw(state.amplitudes_mut(), g.kind, g.wires, theta);
        }
        Ok(state)
    }

    pub fn readout(&self, state: &StateVector) -> Vec<f64> {
        match self.output {
            Readout::ZExpectations => expval_z_all(state),
            Readout::Probabilities => probabilities(state),
        }
    }

    pub fn run(&self, params: &[f64], inputs: &[f64]) -> Result<Vec<f64>> {
        Ok(self.readout(&self.evolve(params, inputs)?))
    }

    /// Diagonal of the observable `Σ_k upstream_k · O_k`.
    fn observable_diagonal(&self, upstream: &[f64]) -> Vec<f64> {
        let dim = 1usize << self.n_qubits;
        match self.output {
            Readout::Probabilities => upstream.to_vec(),
            Readout::ZExpectations => (0..dim)
                .map(|b| {
                    upstream
                        .iter()
                        .enumerate()
                        .map(|(q, g)| if b >> q & 1 == 0 { *g } else { -*g })
                        .sum()
                })
                .collect(),
        }
    }
}

/// Gradients of `upstream · readout` with respect to parameters and inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct CircuitGrads {
    pub params: Vec<f64>,
    pub inputs: Vec<f64>,
}

/// Vector-Jacobian product by adjoint (reverse) traversal of the gate list.
///
/// With `L = ⟨ψ|M|ψ⟩` and `M` the diagonal observable selected by `upstream`,
/// a rotation `exp(-iθP/2)` contributes `Im⟨λ|P|ψ⟩` where `ψ` is the state
/// just after the gate and `λ` is `M|ψ_final⟩` pulled back to the same point.
pub fn circuit_vjp(
    spec: &CircuitSpec,
    params: &[f64],
    inputs: &[f64],
    upstream: &[f64],
) -> Result<CircuitGrads> {
    if upstream.len() != spec.output_len() {
        return Err(Error::dim(format!(
            "upstream gradient of length {} for a readout of length {}",
            upstream.len(),
            spec.output_len()
        )));
    }
    let mut psi = spec.evolve(params, inputs)?;
    let diag = spec.observable_diagonal(upstream);
    let mut lambda: Vec<Complex64> = psi
        .amplitudes()
        .iter()
        .zip(&diag)
        .map(|(a, d)| a * d)
        .collect();

    let mut dparams = vec![0.0; params.len()];
    let mut dinputs = vec![0.0; inputs.len()];
    let gates: Vec<GateOp> = spec
        .embedding_gates()
        .into_iter()
        .chain(spec.gates.iter().cloned())
        .collect();
    let mut scratch = vec![Complex64::new(0.0, 0.0); lambda.len()];

    for g in gates.iter().rev() {
        let theta = resolve(g, params, inputs)?;
        if let Some(src @ (Angle::Param(_) | Angle::Input(_))) = g.angle {
            scratch.copy_from_slice(psi.amplitudes());
            apply_generator(&mut scratch, g.kind, g.wires[0]);
            let overlap: Complex64 = lambda.iter().zip(&scratch).map(|(l, p)| l.conj() * p).sum();
            match src {
                Angle::Param(i) => dparams[i] += overlap.im,
                Angle::Input(i) => dinputs[i] += overlap.im,
                Angle::Fixed(_) => unreachable!(),
            }
        }
        apply_raw_adjoint(psi.amplitudes_mut(), g.kind, g.wires, theta);
        apply_raw_adjoint(&mut lambda, g.kind, g.wires, theta);
    }

    if spec.embedding == Embedding::Amplitude {
        // λ is now A|ψ₀⟩, so ∂L/∂u_b = 2 Re λ_b for the real unit vector u = x/‖x‖;
        // then ∂L/∂x = (du - u (u·du)) / ‖x‖.
        let norm = inputs.iter().map(|x| x * x).sum::<f64>().sqrt();
        let u: Vec<f64> = inputs.iter().map(|x| x / norm).collect();
        let du: Vec<f64> = lambda[..inputs.len()].iter().map(|l| 2.0 * l.re).collect();
        let proj: f64 = u.iter().zip(&du).map(|(a, b)| a * b).sum();
        for (j, d) in dinputs.iter_mut().enumerate() {
            *d = (du[j] - u[j] * proj) / norm;
        }
    }
    Ok(CircuitGrads {
        params: dparams,
        inputs: dinputs,
    })
}

/// Jacobian `[output][param]` by the two-point shift rule, applied per gate
/// occurrence so parameters shared between gates are handled exactly.
pub fn parameter_shift_grad(
    spec: &CircuitSpec,
    params: &[f64],
    inputs: &[f64],
) -> Result<Vec<Vec<f64>>> {
    spec.check_params(params)?;
    for g in &spec.gates {
        if matches!(g.angle, Some(Angle::Param(_))) && !g.kind.is_rotation() {
            return Err(Error::UnsupportedGate(format!(
                "{:?} with a trainable angle",
                g.kind
            )));
        }
    }
    let m = spec.output_len();
    let mut jac = vec![vec![0.0; params.len()]; m];
    for (pos, g) in spec.gates.iter().enumerate() {
        let Some(Angle::Param(k)) = g.angle else {
            continue;
        };
        let mut shifted = spec.clone();
        let base = params[k];
        shifted.gates[pos].angle = Some(Angle::Fixed(base + FRAC_PI_2));
        let plus = run_fixed(&shifted, params, inputs)?;
        shifted.gates[pos].angle = Some(Angle::Fixed(base - FRAC_PI_2));
        let minus = run_fixed(&shifted, params, inputs)?;
        for o in 0..m {
            jac[o][k] += (plus[o] - minus[o]) / 2.0;
        }
    }
    Ok(jac)
}

// Runs a spec whose parameter list may now have holes (one angle was pinned).
fn run_fixed(spec: &CircuitSpec, params: &[f64], inputs: &[f64]) -> Result<Vec<f64>> {
    let mut state = spec.initial_state(inputs)?;
    for g in spec.embedding_gates().iter().chain(&spec.gates) {
        let theta = resolve(g, params, inputs)?;
        apply_raw(state.amplitudes_mut(), g.kind, g.wires, theta);
    }
    Ok(spec.readout(&state))
}
