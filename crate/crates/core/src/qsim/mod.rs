//! Exact statevector simulation with adjoint gradients.

mod ansatz;
mod circuit;
mod gates;
mod layer;
mod random;
mod state;

pub use ansatz::{
    angle_embed, basic_entangler_ansatz, basic_entangler_gates, ring_pairs, rot_cz_ansatz,
    rot_cz_gates,
};
pub use circuit::{
    circuit_vjp, parameter_shift_grad, CircuitGrads, CircuitSpec, Embedding, Readout,
};
pub use gates::{apply_gate, apply_gate_with, Angle, GateKind, GateOp};
pub use layer::circuit_layer;
pub use random::random_circuit;
pub use state::{amplitude_embed, expval_z_all, probabilities, StateVector, MAX_QUBITS};
