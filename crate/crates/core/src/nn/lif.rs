//! Leaky integrate-and-fire neurons.
//!
//! One step is `U' = β·U + I − S_prev·θ` followed by `S = [U' > θ]`.
//! The spike's backward pass uses the arctan surrogate
//! `g(u) = (α/2) / (1 + (π·α·u/2)²)` at `u = U' − θ`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::autodiff::{BackwardRule, Tape, Tensor, Var};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LifConfig {
    pub beta: f64,
    pub threshold: f64,
    pub surrogate_alpha: f64,
}

impl Default for LifConfig {
    fn default() -> Self {
        Self {
            beta: 0.95,
            threshold: 1.0,
            surrogate_alpha: 2.0,
        }
    }
}

impl LifConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::Domain(format!("beta {} outside (0, 1)", self.beta)));
        }
        if !(self.threshold > 0.0) {
            return Err(Error::Domain(format!(
                "threshold {} must be positive",
                self.threshold
            )));
        }
        if !(self.surrogate_alpha > 0.0) {
            return Err(Error::Domain(format!(
                "surrogate slope {} must be positive",
                self.surrogate_alpha
            )));
        }
        Ok(())
    }
}

/// Per-step decay `e^(−Δt/τ)`.
pub fn beta_from_tau(delta_t: f64, tau: f64) -> Result<f64> {
    if !(delta_t > 0.0 && tau > 0.0) {
        return Err(Error::Domain(format!(
            "need Δt > 0 and τ > 0, got Δt={delta_t}, τ={tau}"
        )));
    }
    Ok((-delta_t / tau).exp())
}

#[derive(Clone, Debug, PartialEq)]
pub struct LifState {
    pub u: Vec<f64>,
    pub s_prev: Vec<f64>,
}

impl LifState {
    pub fn zeros(n: usize) -> Self {
        Self {
            u: vec![0.0; n],
            s_prev: vec![0.0; n],
        }
    }
}

/// One neuron update. The returned state carries the new spikes as `s_prev`.
pub fn lif_step(state: &LifState, input: &[f64], cfg: &LifConfig) -> Result<(LifState, Vec<f64>)> {
    if input.len() != state.u.len() || state.s_prev.len() != state.u.len() {
        return Err(Error::dim(format!(
            "membrane of {} neurons, input of {}, previous spikes of {}",
            state.u.len(),
            input.len(),
            state.s_prev.len()
        )));
    }
    let u: Vec<f64> = state
        .u
        .iter()
        .zip(input)
        .zip(&state.s_prev)
        .map(|((u, i), s)| cfg.beta * u + i - s * cfg.threshold)
        .collect();
    let s: Vec<f64> = u.iter().map(|&v| heaviside(v - cfg.threshold)).collect();
    Ok((
        LifState {
            u,
            s_prev: s.clone(),
        },
        s,
    ))
}

fn heaviside(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Arctan surrogate derivative; peaks at `α/2` for `u = 0`.
pub fn surrogate_grad(u: f64, alpha: f64) -> f64 {
    let z = PI * alpha * u / 2.0;
    (alpha / 2.0) / (1.0 + z * z)
}

/// Smooth step whose exact derivative is [`surrogate_grad`].
pub fn smooth_spike(u: f64, alpha: f64) -> f64 {
    (PI * alpha * u / 2.0).atan() / PI + 0.5
}

/// Forward behaviour of [`surrogate_spike`].
///
/// `Smooth` replaces the step by [`smooth_spike`] so that finite differences
/// of a spiking network agree with its surrogate gradients.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpikeMode {
    #[default]
    Heaviside,
    Smooth,
}

struct SpikeRule {
    alpha: f64,
}

impl BackwardRule for SpikeRule {
    fn backward(
        &self,
        inputs: &[&Tensor],
        _output: &Tensor,
        grad: &[f64],
    ) -> Vec<Option<Vec<f64>>> {
        let d = inputs[0]
            .data()
            .iter()
            .zip(grad)
            .map(|(&u, g)| g * surrogate_grad(u, self.alpha))
            .collect();
        vec![Some(d)]
    }
}

/// Spikes of `u_minus_theta` with the arctan surrogate as backward rule.
pub fn surrogate_spike(tape: &mut Tape, u_minus_theta: Var, alpha: f64, mode: SpikeMode) -> Var {
    let x = tape.value(u_minus_theta);
    let f: fn(f64, f64) -> f64 = match mode {
        SpikeMode::Heaviside => |u, _| heaviside(u),
        SpikeMode::Smooth => smooth_spike,
    };
    let data = x.data().iter().map(|&u| f(u, alpha)).collect();
    let value = Tensor::new(x.shape().to_vec(), data).expect("same shape");
    tape.custom(&[u_minus_theta], value, Box::new(SpikeRule { alpha }))
}

/// [`lif_step`] on the tape: returns `(U', S)`. The reset term stays attached
/// to the graph.
pub fn lif_step_tape(
    tape: &mut Tape,
    u: Var,
    s_prev: Var,
    input: Var,
    cfg: &LifConfig,
    mode: SpikeMode,
) -> Result<(Var, Var)> {
    let decayed = tape.scale(u, cfg.beta);
    let driven = tape.add(decayed, input)?;
    let reset = tape.scale(s_prev, cfg.threshold);
    let u_next = tape.sub(driven, reset)?;
    let shifted = tape.offset(u_next, -cfg.threshold);
    let s = surrogate_spike(tape, shifted, cfg.surrogate_alpha, mode);
    Ok((u_next, s))
}
