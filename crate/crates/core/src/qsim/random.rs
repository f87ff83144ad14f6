//! Random circuits for property checks.

use super::circuit::{CircuitSpec, Embedding, Readout};
use super::gates::{Angle, GateKind, GateOp};
use crate::rng::SplitMix64;

/// A circuit of `n_gates` gates drawn uniformly from RX, RY, RZ, CZ and CNOT on
/// random wires, each rotation with its own parameter, plus parameter values
/// in `[0, 2π)`. Needs at least two qubits.
pub fn random_circuit(
    n_qubits: usize,
    n_gates: usize,
    embedding: Embedding,
    readout: Readout,
    rng: &mut SplitMix64,
) -> (CircuitSpec, Vec<f64>) {
    assert!(n_qubits >= 2, "random circuits need two qubits");
    let mut gates = Vec::with_capacity(n_gates);
    let mut params = Vec::new();
    for _ in 0..n_gates {
        let a = rng.below(n_qubits as u64) as usize;
        let b = (a + 1 + rng.below(n_qubits as u64 - 1) as usize) % n_qubits;
        let g = match rng.below(5) {
            k @ 0..=2 => {
                let kind = [GateKind::RX, GateKind::RY, GateKind::RZ][k as usize];
                params.push(rng.uniform(0.0, 2.0 * std::f64::consts::PI));
                GateOp::rotation(kind, a, Angle::Param(params.len() - 1))
            }
            3 => GateOp::cz(a, b),
            _ => GateOp::cnot(a, b),
        };
        gates.push(g);
    }
    let spec = CircuitSpec::new(n_qubits, embedding, gates, readout).expect("valid random circuit");
    (spec, params)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameters_are_dense_and_wires_distinct() {
        let mut rng = SplitMix64::new(2);
        for n in 2..=5 {
            let (spec, params) =
                random_circuit(n, 40, Embedding::Zero, Readout::ZExpectations, &mut rng);
            assert_eq!(spec.n_params(), params.len());
            for g in &spec.gates {
                if g.kind.arity() == 2 {
                    assert_ne!(g.wires[0], g.wires[1]);
                }
            }
        }
    }
}
