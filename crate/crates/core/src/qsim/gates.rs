use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::state::StateVector;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateKind {
    RX,
    RY,
    RZ,
    CZ,
    CNOT,
}

impl GateKind {
    pub fn is_rotation(self) -> bool {
        matches!(self, GateKind::RX | GateKind::RY | GateKind::RZ)
    }

    pub fn arity(self) -> usize {
        if self.is_rotation() {
            1
        } else {
            2
        }
    }
}

/// Where a rotation angle comes from when the circuit runs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Angle {
    Fixed(f64),
    /// Index into the trainable parameter vector.
    Param(usize),
    /// Index into the per-sample input vector (angle embedding).
    Input(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateOp {
    pub kind: GateKind,
    /// Rotations use `wires[0]`; for CNOT `wires[0]` is the control.
    pub wires: [usize; 2],
    pub angle: Option<Angle>,
}

impl GateOp {
    pub fn rx(q: usize, angle: Angle) -> Self {
        Self::rotation(GateKind::RX, q, angle)
    }

    pub fn ry(q: usize, angle: Angle) -> Self {
        Self::rotation(GateKind::RY, q, angle)
    }

    pub fn rz(q: usize, angle: Angle) -> Self {
        Self::rotation(GateKind::RZ, q, angle)
    }

    pub fn rotation(kind: GateKind, q: usize, angle: Angle) -> Self {
        Self {
            kind,
            wires: [q, q],
            angle: Some(angle),
        }
    }

    pub fn cz(a: usize, b: usize) -> Self {
        Self {
            kind: GateKind::CZ,
            wires: [a, b],
            angle: None,
        }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self {
            kind: GateKind::CNOT,
            wires: [control, target],
            angle: None,
        }
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let used = &self.wires[..self.kind.arity()];
        if let Some(&w) = used.iter().find(|&&w| w >= n_qubits) {
            return Err(Error::Bounds(format!(
                "{:?} on wire {w} of a {n_qubits}-qubit register",
                self.kind
            )));
        }
        if self.kind.is_rotation() {
            if self.angle.is_none() {
                return Err(Error::Contract(format!("{:?} without an angle", self.kind)));
            }
        } else {
            if self.wires[0] == self.wires[1] {
                return Err(Error::Contract(format!(
                    "{:?} needs two distinct wires, got {:?}",
                    self.kind, self.wires
                )));
            }
            if self.angle.is_some() {
                return Err(Error::UnsupportedGate(format!(
                    "{:?} cannot carry a rotation angle",
                    self.kind
                )));
            }
        }
        Ok(())
    }
}

#[inline]
fn for_pairs(amps: &mut [Complex64], q: usize, mut f: impl FnMut(&mut Complex64, &mut Complex64)) {
    let stride = 1usize << q;
    let dim = amps.len();
    let mut block = 0;
    while block < dim {
        for i in block..block + stride {
            let (lo, hi) = amps.split_at_mut(i + stride);
            f(&mut lo[i], &mut hi[0]);
        }
        block += 2 * stride;
    }
}

/// Applies a gate whose angle has already been resolved to `theta`.
pub(crate) fn apply_raw(amps: &mut [Complex64], kind: GateKind, wires: [usize; 2], theta: f64) {
    let q = wires[0];
    match kind {
        GateKind::RX => {
            let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
            let mis = Complex64::new(0.0, -s);
            for_pairs(amps, q, |a, b| {
                let (x, y) = (*a, *b);
                *a = x * c + y * mis;
                *b = x * mis + y * c;
            });
        }
        GateKind::RY => {
            let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
            for_pairs(amps, q, |a, b| {
                let (x, y) = (*a, *b);
                *a = x * c - y * s;
                *b = x * s + y * c;
            });
        }
        GateKind::RZ => {
            let e0 = Complex64::from_polar(1.0, -theta / 2.0);
            let e1 = Complex64::from_polar(1.0, theta / 2.0);
            for_pairs(amps, q, |a, b| {
                *a *= e0;
                *b *= e1;
            });
        }
        GateKind::CZ => {
            let mask = (1usize << wires[0]) | (1usize << wires[1]);
            for (i, a) in amps.iter_mut().enumerate() {
                if i & mask == mask {
                    *a = -*a;
                }
            }
        }
        GateKind::CNOT => {
            let (c, t) = (1usize << wires[0], 1usize << wires[1]);
            for i in 0..amps.len() {
                if i & c != 0 && i & t == 0 {
                    amps.swap(i, i | t);
                }
            }
        }
    }
}

/// Applies the inverse gate.
pub(crate) fn apply_raw_adjoint(
    amps: &mut [Complex64],
    kind: GateKind,
    wires: [usize; 2],
    theta: f64,
) {
    apply_raw(amps, kind, wires, -theta);
}

/// Applies the Pauli generator `P` of a rotation `exp(-iθP/2)`.
pub(crate) fn apply_generator(amps: &mut [Complex64], kind: GateKind, q: usize) {
    match kind {
        GateKind::RX => for_pairs(amps, q, std::mem::swap),
        GateKind::RY => for_pairs(amps, q, |a, b| {
            let (x, y) = (*a, *b);
            *a = Complex64::new(y.im, -y.re); // -i·y
            *b = Complex64::new(-x.im, x.re); // i·x
        }),
        GateKind::RZ => for_pairs(amps, q, |_, b| *b = -*b),
        _ => unreachable!("{kind:?} has no rotation generator"),
    }
}

/// Applies `g` in place; `params` and `inputs` resolve non-fixed angles.
pub fn apply_gate_with(
    state: &mut StateVector,
    g: &GateOp,
    params: &[f64],
    inputs: &[f64],
) -> Result<()> {
    g.validate(state.n_qubits())?;
    let theta = resolve(g, params, inputs)?;
    apply_raw(state.amplitudes_mut(), g.kind, g.wires, theta);
    Ok(())
}

/// Returns `g` applied to `state`. Angles must be [`Angle::Fixed`].
pub fn apply_gate(state: &StateVector, g: &GateOp) -> Result<StateVector> {
    let mut out = state.clone();
    apply_gate_with(&mut out, g, &[], &[])?;
    Ok(out)
}

pub(crate) fn resolve(g: &GateOp, params: &[f64], inputs: &[f64]) -> Result<f64> {
    Ok(match g.angle {
        None => 0.0,
        Some(Angle::Fixed(t)) => t,
        Some(Angle::Param(i)) => *params
            .get(i)
            .ok_or_else(|| Error::Bounds(format!("parameter {i} of {}", params.len())))?,
        Some(Angle::Input(i)) => *inputs
            .get(i)
            .ok_or_else(|| Error::Bounds(format!("input {i} of {}", inputs.len())))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::state::{expval_z_all, probabilities};
    use crate::rng::SplitMix64;
    use std::f64::consts::PI;

    fn random_state(n: usize, rng: &mut SplitMix64) -> StateVector {
        let amps: Vec<Complex64> = (0..1 << n)
            .map(|_| Complex64::new(rng.normal(), rng.normal()))
            .collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        StateVector::from_amplitudes(amps.into_iter().map(|a| a / norm).collect()).unwrap()
    }

    fn max_diff(a: &StateVector, b: &StateVector) -> f64 {
        a.amplitudes()
            .iter()
            .zip(b.amplitudes())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn rx_zero_is_identity() {
        let mut rng = SplitMix64::new(1);
        let s = random_state(3, &mut rng);
        for q in 0..3 {
            let out = apply_gate(&s, &GateOp::rx(q, Angle::Fixed(0.0))).unwrap();
            assert!(max_diff(&s, &out) < 1e-15);
        }
    }

    #[test]
    fn cz_phase_table() {
        for b in 0..4 {
            let s = StateVector::basis(2, b).unwrap();
            let out = apply_gate(&s, &GateOp::cz(0, 1)).unwrap();
            let expect = if b == 3 { -1.0 } else { 1.0 };
            assert_eq!(out.amplitudes()[b], Complex64::new(expect, 0.0));
        }
    }

    #[test]
    fn cz_symmetric_in_wires() {
        let mut rng = SplitMix64::new(2);
        let s = random_state(3, &mut rng);
        let a = apply_gate(&s, &GateOp::cz(0, 2)).unwrap();
        let b = apply_gate(&s, &GateOp::cz(2, 0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cnot_truth_table() {
        // control qubit 0, target qubit 1: |q1 q0⟩ = |01⟩ (index 1) → |11⟩ (index 3)
        let cases = [(0, 0), (1, 3), (2, 2), (3, 1)];
        for (i, o) in cases {
            let s = StateVector::basis(2, i).unwrap();
            let out = apply_gate(&s, &GateOp::cnot(0, 1)).unwrap();
            assert_eq!(out, StateVector::basis(2, o).unwrap());
        }
    }

    #[test]
    fn rotations_against_closed_forms() {
        let z = StateVector::zero(1);
        let flipped = apply_gate(&z, &GateOp::rx(0, Angle::Fixed(PI))).unwrap();
        let p = probabilities(&flipped);
        assert!((p[1] - 1.0).abs() < 1e-15);
        let half = apply_gate(&z, &GateOp::rx(0, Angle::Fixed(PI / 2.0))).unwrap();
        let p = probabilities(&half);
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
        for theta in [0.3, 1.1, 2.9] {
            for g in [
                GateOp::rx(0, Angle::Fixed(theta)),
                GateOp::ry(0, Angle::Fixed(theta)),
            ] {
                let s = apply_gate(&z, &g).unwrap();
                assert!((expval_z_all(&s)[0] - theta.cos()).abs() < 1e-12);
            }
            // RZ only adds phases to |0⟩.
            let s = apply_gate(&z, &GateOp::rz(0, Angle::Fixed(theta))).unwrap();
            assert!((expval_z_all(&s)[0] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn generator_matches_pauli_matrices() {
        let mut rng = SplitMix64::new(5);
        let s = random_state(1, &mut rng);
        let (a, b) = (s.amplitudes()[0], s.amplitudes()[1]);
        let i = Complex64::new(0.0, 1.0);
        for (kind, expect) in [
            (GateKind::RX, [b, a]),
            (GateKind::RY, [-i * b, i * a]),
            (GateKind::RZ, [a, -b]),
        ] {
            let mut amps = s.amplitudes().to_vec();
            apply_generator(&mut amps, kind, 0);
            assert!((amps[0] - expect[0]).norm() < 1e-15 && (amps[1] - expect[1]).norm() < 1e-15);
        }
    }

    #[test]
    fn adjoint_undoes_gate() {
        let mut rng = SplitMix64::new(9);
        let s = random_state(3, &mut rng);
        for kind in [
            GateKind::RX,
            GateKind::RY,
            GateKind::RZ,
            GateKind::CZ,
            GateKind::CNOT,
        ] {
            let wires = [1, 2];
            let mut amps = s.amplitudes().to_vec();
            apply_raw(&mut amps, kind, wires, 0.77);
            apply_raw_adjoint(&mut amps, kind, wires, 0.77);
            let back = StateVector::from_amplitudes(amps).unwrap();
            assert!(max_diff(&s, &back) < 1e-15, "{kind:?}");
        }
    }

    #[test]
    fn linearity() {
        let mut rng = SplitMix64::new(13);
        let s1 = random_state(3, &mut rng);
        let s2 = random_state(3, &mut rng);
        let (alpha, beta) = (Complex64::new(0.3, -0.4), Complex64::new(0.6, 0.2));
        let mix = |a: &StateVector, b: &StateVector| {
            StateVector::from_amplitudes(
                a.amplitudes()
                    .iter()
                    .zip(b.amplitudes())
                    .map(|(x, y)| alpha * x + beta * y)
                    .collect(),
            )
            .unwrap()
        };
        for g in [
            GateOp::rx(0, Angle::Fixed(0.4)),
            GateOp::ry(1, Angle::Fixed(-1.3)),
            GateOp::rz(2, Angle::Fixed(2.2)),
            GateOp::cz(0, 2),
            GateOp::cnot(2, 1),
        ] {
            let lhs = apply_gate(&mix(&s1, &s2), &g).unwrap();
            let rhs = mix(&apply_gate(&s1, &g).unwrap(), &apply_gate(&s2, &g).unwrap());
            assert!(max_diff(&lhs, &rhs) < 1e-12);
        }
    }

    #[test]
    fn validation_errors() {
        let s = StateVector::zero(2);
        assert!(matches!(
            apply_gate(&s, &GateOp::rx(2, Angle::Fixed(0.1))),
            Err(Error::Bounds(_))
        ));
        assert!(matches!(
            apply_gate(&s, &GateOp::cz(1, 1)),
            Err(Error::Contract(_))
        ));
        let bad = GateOp {
            angle: Some(Angle::Param(0)),
            ..GateOp::cz(0, 1)
        };
        assert!(matches!(bad.validate(2), Err(Error::UnsupportedGate(_))));
    }
}
