use num_complex::Complex64;

use crate::error::{Error, Result};

/// Pure state of an `n`-qubit register.
///
/// Basis ordering is little-endian: qubit `q` is bit `q` of the basis index,
/// so on two qubits index 1 is `|q1=0, q0=1⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

pub const MAX_QUBITS: usize = 16;

impl StateVector {
    /// `|0…0⟩`.
    pub fn zero(n_qubits: usize) -> Self {
        assert!(
            n_qubits <= MAX_QUBITS,
            "{n_qubits} qubits exceeds the simulator limit"
        );
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Self { n_qubits, amps }
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let mut s = Self::zero(n_qubits);
        if index >= s.amps.len() {
            return Err(Error::Bounds(format!(
                "basis state {index} of {} qubits",
                n_qubits
            )));
        }
        s.amps[0] = Complex64::new(0.0, 0.0);
        s.amps[index] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    /// Wraps raw amplitudes without normalizing them.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let n = amps.len();
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::dim(format!("{n} amplitudes is not a power of two")));
        }
        Ok(Self {
            n_qubits: n.trailing_zeros() as usize,
            amps,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// Loads `features` as real amplitudes: zero-padded to `2^n` and scaled to unit norm.
pub fn amplitude_embed(features: &[f64], n_qubits: usize) -> Result<StateVector> {
    let dim = 1usize << n_qubits;
    if features.len() > dim {
        return Err(Error::Capacity {
            features: features.len(),
            qubits: n_qubits,
        });
    }
    let norm = features.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 1e-12) {
        return Err(Error::Normalization(format!(
            "feature vector has L2 norm {norm:e}"
        )));
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); dim];
    for (a, &x) in amps.iter_mut().zip(features) {
        *a = Complex64::new(x / norm, 0.0);
    }
    Ok(StateVector { n_qubits, amps })
}

/// `|amplitude|²` per basis state.
pub fn probabilities(state: &StateVector) -> Vec<f64> {
    state.amps.iter().map(|a| a.norm_sqr()).collect()
}

/// `⟨Z_q⟩` for every qubit `q`.
pub fn expval_z_all(state: &StateVector) -> Vec<f64> {
    let mut out = vec![0.0; state.n_qubits];
    for (b, a) in state.amps.iter().enumerate() {
        let p = a.norm_sqr();
        for (q, o) in out.iter_mut().enumerate() {
            if b >> q & 1 == 0 {
                *o += p;
            } else {
                *o -= p;
            }
        }
    }
    out
}
