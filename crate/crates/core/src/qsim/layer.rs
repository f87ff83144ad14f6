//! Circuits as differentiable tape operations over a batch.

use std::sync::Arc;

use rayon::prelude::*;

use super::circuit::{circuit_vjp, CircuitSpec};
use crate::autodiff::{BackwardRule, Tape, Tensor, Var};
use crate::error::{Error, Result};

struct CircuitRule {
    spec: Arc<CircuitSpec>,
}

impl BackwardRule for CircuitRule {
    fn backward(
        &self,
        inputs: &[&Tensor],
        _output: &Tensor,
        grad: &[f64],
    ) -> Vec<Option<Vec<f64>>> {
        let (x, params) = (inputs[0], inputs[1]);
        let (b, k) = x.dims2().expect("validated in forward");
        let m = self.spec.output_len();
        let per_sample: Vec<_> = (0..b)
            .into_par_iter()
            .map(|i| {
                circuit_vjp(
                    &self.spec,
                    params.data(),
                    x.row(i),
                    &grad[i * m..(i + 1) * m],
                )
                .expect("forward succeeded with the same inputs")
            })
            .collect();
        let mut dx = Vec::with_capacity(b * k);
        let mut dp = vec![0.0; params.len()];
        for g in per_sample {
            dx.extend_from_slice(&g.inputs);
            dp.iter_mut().zip(&g.params).for_each(|(a, c)| *a += c);
        }
        vec![Some(dx), Some(dp)]
    }
}

/// Runs `spec` once per row of `x` (`[batch, k]`) with the shared flat
/// parameter vector `params`, giving `[batch, spec.output_len()]`.
///
/// Samples are simulated in parallel; parameter gradients are summed in row
/// order so results do not depend on the thread count.
pub fn circuit_layer(tape: &mut Tape, spec: &Arc<CircuitSpec>, x: Var, params: Var) -> Result<Var> {
    let xv = tape.value(x);
    let (b, k) = xv.dims2()?;
    let pv = tape.value(params);
    if pv.len() != spec.n_params() {
        return Err(Error::dim(format!(
            "circuit takes {} parameters, got a tensor of shape {:?}",
            spec.n_params(),
            pv.shape()
        )));
    }
    if k > spec.input_len() {
        return Err(Error::dim(format!(
            "{k} inputs per sample for a circuit accepting at most {}",
            spec.input_len()
        )));
    }
    let m = spec.output_len();
    let rows: Vec<Vec<f64>> = (0..b)
        .into_par_iter()
        .map(|i| spec.run(pv.data(), xv.row(i)))
        .collect::<Result<_>>()?;
    let value = Tensor::new(vec![b, m], rows.concat())?;
    Ok(tape.custom(
        &[x, params],
        value,
        Box::new(CircuitRule {
            spec: Arc::clone(spec),
        }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{grad_check_many, GradCheckOptions};
    use crate::qsim::ansatz::{basic_entangler_gates, rot_cz_gates};
    use crate::qsim::circuit::{Embedding, Readout};
    use crate::rng::SplitMix64;

    fn random(shape: &[usize], lo: f64, hi: f64, rng: &mut SplitMix64) -> Tensor {
        let n = shape.iter().product();
        Tensor::new(
            shape.to_vec(),
            (0..n).map(|_| rng.uniform(lo, hi)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn batch_rows_match_single_runs() {
        let spec = Arc::new(
            CircuitSpec::new(
                3,
                Embedding::Amplitude,
                rot_cz_gates(3, 2),
                Readout::Probabilities,
            )
            .unwrap(),
        );
        let mut rng = SplitMix64::new(3);
        let x = random(&[4, 6], -1.0, 1.0, &mut rng);
        let p = random(&[18], 0.0, 6.0, &mut rng);
        let mut t = Tape::new();
        let (xv, pv) = (t.constant(x.clone()), t.param(p.clone()));
        let out = circuit_layer(&mut t, &spec, xv, pv).unwrap();
        assert_eq!(t.shape(out), &[4, 8]);
        for i in 0..4 {
            assert_eq!(
                t.value(out).row(i),
                &spec.run(p.data(), x.row(i)).unwrap()[..]
            );
        }
    }

    #[test]
    fn layer_gradients_match_finite_differences() {
        let mut rng = SplitMix64::new(8);
        for (emb, gates, k, lo, hi) in [
            (Embedding::Amplitude, rot_cz_gates(3, 2), 7, -1.0, 1.0),
            (Embedding::Angle, basic_entangler_gates(3, 2), 3, 0.0, 1.5),
        ] {
            let spec = Arc::new(CircuitSpec::new(3, emb, gates, Readout::ZExpectations).unwrap());
            let x = random(&[3, k], lo, hi, &mut rng);
            let p = random(&[spec.n_params()], 0.0, 6.0, &mut rng);
            let w = random(&[3, 3], -1.0, 1.0, &mut rng);
            let report = grad_check_many(
                |t, v| {
                    let y = circuit_layer(t, &spec, v[0], v[1])?;
                    let wv = t.constant(w.clone());
                    let z = t.mul(y, wv)?;
                    Ok(t.sum(z))
                },
                &[x, p],
                &GradCheckOptions::new(1e-7).step(1e-6),
            )
            .unwrap();
            assert!(report.passed, "{emb:?}: {}", report.max_rel_error);
        }
    }

    #[test]
    fn rejects_mismatched_shapes() {
        let spec = Arc::new(
            CircuitSpec::new(
                2,
                Embedding::Angle,
                basic_entangler_gates(2, 1),
                Readout::ZExpectations,
            )
            .unwrap(),
        );
        let mut t = Tape::new();
        let x = t.constant(Tensor::zeros(&[2, 3]));
        let p = t.param(Tensor::zeros(&[2]));
        assert!(matches!(
            circuit_layer(&mut t, &spec, x, p),
            Err(Error::Dimension(_))
        ));
        let x = t.constant(Tensor::zeros(&[2, 2]));
        let p = t.param(Tensor::zeros(&[3]));
        assert!(matches!(
            circuit_layer(&mut t, &spec, x, p),
            Err(Error::Dimension(_))
        ));
    }
}
