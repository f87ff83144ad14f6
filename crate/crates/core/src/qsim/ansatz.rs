//! The two variational layouts used by the models, plus angle embedding.

use super::gates::{apply_raw, Angle, GateKind, GateOp};
use super::state::StateVector;
use crate::autodiff::Tensor;
use crate::error::{Error, Result};

/// Nearest-neighbour ring pairs `(i, i+1 mod n)`. Two qubits give a single pair.
pub fn ring_pairs(n: usize) -> Vec<(usize, usize)> {
    match n {
        0 | 1 => vec![],
        2 => vec![(0, 1)],
        _ => (0..n).map(|i| (i, (i + 1) % n)).collect(),
    }
}

/// `layers` of `RX, RY, RZ` on every qubit followed by a CZ ring.
/// Parameter `(l, q, r)` has index `l·3n + 3q + r`.
pub fn rot_cz_gates(n: usize, layers: usize) -> Vec<GateOp> {
    let mut gates = Vec::with_capacity(layers * 4 * n);
    for l in 0..layers {
        for q in 0..n {
            let base = l * 3 * n + 3 * q;
            gates.push(GateOp::rx(q, Angle::Param(base)));
            gates.push(GateOp::ry(q, Angle::Param(base + 1)));
            gates.push(GateOp::rz(q, Angle::Param(base + 2)));
        }
        gates.extend(ring_pairs(n).into_iter().map(|(a, b)| GateOp::cz(a, b)));
    }
    gates
}

/// `layers` of `RX` on every qubit followed by a CNOT ring.
/// Parameter `(l, q)` has index `l·n + q`.
pub fn basic_entangler_gates(n: usize, layers: usize) -> Vec<GateOp> {
    let mut gates = Vec::with_capacity(layers * 2 * n);
    for l in 0..layers {
        gates.extend((0..n).map(|q| GateOp::rx(q, Angle::Param(l * n + q))));
        gates.extend(ring_pairs(n).into_iter().map(|(c, t)| GateOp::cnot(c, t)));
    }
    gates
}

fn run_gates(state: &StateVector, gates: &[GateOp], params: &[f64]) -> StateVector {
    let mut out = state.clone();
    for g in gates {
        let theta = match g.angle {
            Some(Angle::Param(i)) => params[i],
            Some(Angle::Fixed(t)) => t,
            _ => 0.0,
        };
        apply_raw(out.amplitudes_mut(), g.kind, g.wires, theta);
    }
    out
}

/// Applies [`rot_cz_gates`] with parameters shaped `[layers, n_qubits, 3]`.
pub fn rot_cz_ansatz(state: &StateVector, params: &Tensor) -> Result<StateVector> {
    let n = state.n_qubits();
    let layers = match params.shape() {
        [l, q, 3] if *q == n => *l,
        s => {
            return Err(Error::dim(format!(
                "rot-CZ parameters must be [layers, {n}, 3], got {s:?}"
            )))
        }
    };
    Ok(run_gates(state, &rot_cz_gates(n, layers), params.data()))
}

/// Applies [`basic_entangler_gates`] with parameters shaped `[layers, n_qubits]`.
pub fn basic_entangler_ansatz(state: &StateVector, params: &Tensor) -> Result<StateVector> {
    let n = state.n_qubits();
    let layers = match params.shape() {
        [l, q] if *q == n => *l,
        s => {
            return Err(Error::dim(format!(
                "entangler parameters must be [layers, {n}], got {s:?}"
            )))
        }
    };
    Ok(run_gates(
        state,
        &basic_entangler_gates(n, layers),
        params.data(),
    ))
}

/// `RX(angles[q])` on qubit `q` of the all-zeros state.
pub fn angle_embed(angles: &[f64], state: &StateVector) -> Result<StateVector> {
    let n = state.n_qubits();
    if angles.len() != n {
        return Err(Error::dim(format!(
            "{} angles for {n} qubits",
            angles.len()
        )));
    }
    if *state != StateVector::zero(n) {
        return Err(Error::Contract("angle embedding starts from |0…0⟩".into()));
    }
    let mut out = state.clone();
    for (q, &a) in angles.iter().enumerate() {
        apply_raw(out.amplitudes_mut(), GateKind::RX, [q, q], a);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::state::{expval_z_all, probabilities};
    use crate::rng::SplitMix64;
    use std::f64::consts::PI;

    fn random_params(shape: &[usize], rng: &mut SplitMix64) -> Tensor {
        let n: usize = shape.iter().product();
        Tensor::new(
            shape.to_vec(),
            (0..n).map(|_| rng.uniform(0.0, 2.0 * PI)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn zero_parameters_leave_ground_state() {
        let z = StateVector::zero(5);
        assert_eq!(rot_cz_ansatz(&z, &Tensor::zeros(&[2, 5, 3])).unwrap(), z);
        assert_eq!(
            basic_entangler_ansatz(&z, &Tensor::zeros(&[3, 5])).unwrap(),
            z
        );
    }

    #[test]
    fn parameter_counts_of_model_layouts() {
        let count = |g: &[GateOp]| g.iter().filter(|g| g.angle.is_some()).count();
        assert_eq!(count(&rot_cz_gates(5, 5)), 75);
        assert_eq!(count(&rot_cz_gates(5, 1)), 15);
        assert_eq!(count(&basic_entangler_gates(5, 3)), 15);
        assert_eq!(count(&basic_entangler_gates(5, 1)), 5);
    }

    #[test]
    fn ring_topology() {
        assert_eq!(ring_pairs(5), vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]);
        assert_eq!(ring_pairs(2), vec![(0, 1)]);
        assert!(ring_pairs(1).is_empty());
    }

    #[test]
    fn shape_errors() {
        let z = StateVector::zero(5);
        assert!(matches!(
            rot_cz_ansatz(&z, &Tensor::zeros(&[2, 5])),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            rot_cz_ansatz(&z, &Tensor::zeros(&[2, 4, 3])),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            basic_entangler_ansatz(&z, &Tensor::zeros(&[15])),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn random_ansatz_preserves_norm_and_orthogonality() {
        let mut rng = SplitMix64::new(4);
        let p = random_params(&[3, 5, 3], &mut rng);
        let out = rot_cz_ansatz(&StateVector::zero(5), &p).unwrap();
        assert!((out.norm() - 1.0).abs() < 1e-12);

        let e = random_params(&[3, 5], &mut rng);
        let a = basic_entangler_ansatz(&StateVector::basis(5, 0).unwrap(), &e).unwrap();
        let b = basic_entangler_ansatz(&StateVector::basis(5, 17).unwrap(), &e).unwrap();
        assert!(a.inner(&b).norm() < 1e-12);
    }

    #[test]
    fn angle_embedding_examples() {
        let z = StateVector::zero(3);
        assert_eq!(angle_embed(&[0.0; 3], &z).unwrap(), z);
        let one = angle_embed(&[PI], &StateVector::zero(1)).unwrap();
        assert!((probabilities(&one)[1] - 1.0).abs() < 1e-15);
        let half = angle_embed(&[PI / 2.0], &StateVector::zero(1)).unwrap();
        let p = probabilities(&half);
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
        assert!(matches!(
            angle_embed(&[0.1, 0.2], &z),
            Err(Error::Dimension(_))
        ));
        let z2 = expval_z_all(&angle_embed(&[0.4, 1.3, 2.0], &z).unwrap());
        for (e, a) in z2.iter().zip([0.4f64, 1.3, 2.0]) {
            assert!((e - a.cos()).abs() < 1e-12);
        }
    }
}
