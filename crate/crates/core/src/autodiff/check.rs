//! Central finite-difference gradient checking.
//!
//! The error reported for an input is normwise:
//! `max_i |analytic_i - numeric_i| / max(‖analytic‖∞, ‖numeric‖∞)`, so a
//! component that is tiny compared to the rest of the gradient is not judged
//! against its own rounding noise.

use super::{Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

pub const DEFAULT_STEP: f64 = 1e-5;

#[derive(Clone, Debug)]
pub struct GradCheckOptions {
    pub step: f64,
    pub tol: f64,
    /// Check at most this many coordinates per input, chosen with `seed`.
    pub max_coords: Option<usize>,
    pub seed: u64,
}

impl GradCheckOptions {
    pub fn new(tol: f64) -> Self {
        Self {
            step: DEFAULT_STEP,
            tol,
            max_coords: None,
            seed: 0,
        }
    }

    pub fn step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }

    pub fn sample(mut self, max_coords: usize, seed: u64) -> Self {
        self.max_coords = Some(max_coords);
        self.seed = seed;
        self
    }
}

#[derive(Clone, Debug)]
pub struct InputReport {
    pub coords: Vec<usize>,
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
    pub rel_error: f64,
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub inputs: Vec<InputReport>,
    pub max_rel_error: f64,
    pub tol: f64,
    pub passed: bool,
}

fn rel_error(a: &[f64], n: &[f64]) -> f64 {
    let scale = a.iter().chain(n).fold(0.0f64, |m, x| m.max(x.abs()));
    let diff = a
        .iter()
        .zip(n)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Checks `f` at a single input tensor.
pub fn grad_check<F>(f: F, x: &Tensor, tol: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape, Var) -> Result<Var>,
{
    grad_check_many(
        |t, v| f(t, v[0]),
        std::slice::from_ref(x),
        &GradCheckOptions::new(tol),
    )
}

/// Checks `f` with respect to every tensor in `inputs`.
///
/// `f` receives one tape variable per input and must return a scalar.
pub fn grad_check_many<F>(
    f: F,
    inputs: &[Tensor],
    opts: &GradCheckOptions,
) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let eval = |vals: &[Tensor]| -> Result<f64> {
        let mut t = Tape::new();
        let vars: Vec<Var> = vals.iter().map(|v| t.constant(v.clone())).collect();
        let out = f(&mut t, &vars)?;
        let v = t.value(out);
        if v.len() != 1 {
            return Err(Error::Contract(format!(
                "gradient check of non-scalar {:?}",
                v.shape()
            )));
        }
        Ok(v.item())
    };

    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|v| tape.param(v.clone())).collect();
    let out = f(&mut tape, &vars)?;
    tape.backward(out)?;

    let mut rng = SplitMix64::derive(opts.seed, "gradcheck");
    let mut reports = Vec::with_capacity(inputs.len());
    let mut work = inputs.to_vec();
    for (k, var) in vars.iter().enumerate() {
        let n = inputs[k].len();
        let full = tape
            .grad(*var)
            .map(<[f64]>::to_vec)
            .unwrap_or_else(|| vec![0.0; n]);
        let coords: Vec<usize> = match opts.max_coords {
            Some(m) if m < n => {
                let mut all: Vec<usize> = (0..n).collect();
                rng.shuffle(&mut all);
                let mut pick = all[..m].to_vec();
                pick.sort_unstable();
                pick
            }
            _ => (0..n).collect(),
        };
        let mut numeric = Vec::with_capacity(coords.len());
        for &i in &coords {
            let orig = work[k].data()[i];
            work[k].data_mut()[i] = orig + opts.step;
            let up = eval(&work)?;
            work[k].data_mut()[i] = orig - opts.step;
            let down = eval(&work)?;
            work[k].data_mut()[i] = orig;
            numeric.push((up - down) / (2.0 * opts.step));
        }
        let analytic: Vec<f64> = coords.iter().map(|&i| full[i]).collect();
        reports.push(InputReport {
            rel_error: rel_error(&analytic, &numeric),
            coords,
            analytic,
            numeric,
        });
    }
    let max_rel_error = reports.iter().fold(0.0f64, |m, r| m.max(r.rel_error));
    Ok(GradCheckReport {
        passed: max_rel_error < opts.tol,
        inputs: reports,
        max_rel_error,
        tol: opts.tol,
    })
}
