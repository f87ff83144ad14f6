use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::autodiff::Tensor;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ScalerKind {
    /// `(x − μ)/σ` per feature, population σ.
    Standard,
    /// `lo + (x − min)/(max − min)·(hi − lo)`, clamped to `[lo, hi]`.
    MinMax { lo: f64, hi: f64 },
    /// Each row divided by its L2 norm. Stateless.
    L2Row,
}

/// A scaler fitted on training rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub kind: ScalerKind,
    /// `(mean, std)` or `(min, max)` per feature; empty for `L2Row`.
    pub stats: Vec<(f64, f64)>,
}

impl Scaler {
    pub fn fit(kind: ScalerKind, train: &Tensor) -> Result<Self> {
        let (rows, cols) = train.dims2()?;
        if let ScalerKind::MinMax { lo, hi } = kind {
            if !(lo < hi) {
                return Err(Error::Config(format!(
                    "min-max range [{lo}, {hi}] is empty"
                )));
            }
        }
        if rows == 0 && kind != ScalerKind::L2Row {
            return Err(Error::Config("cannot fit a scaler on zero rows".into()));
        }
        let column = |j: usize| (0..rows).map(move |i| train.row(i)[j]);
        let stats = match kind {
            ScalerKind::L2Row => Vec::new(),
            ScalerKind::Standard => (0..cols)
                .map(|j| {
                    let mean = column(j).sum::<f64>() / rows as f64;
                    let var = column(j).map(|x| (x - mean).powi(2)).sum::<f64>() / rows as f64;
                    (mean, var.sqrt())
                })
                .collect(),
            ScalerKind::MinMax { .. } => (0..cols)
                .map(|j| {
                    column(j).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
                        (a.min(x), b.max(x))
                    })
                })
                .collect(),
        };
        Ok(Self { kind, stats })
    }

    pub fn apply(&self, x: &Tensor) -> Result<Tensor> {
        let (rows, cols) = x.dims2()?;
        if self.kind != ScalerKind::L2Row && cols != self.stats.len() {
            return Err(Error::dim(format!(
                "scaler fitted on {} features, applied to {cols}",
                self.stats.len()
            )));
        }
        let mut out = x.clone();
        let d = out.data_mut();
        for i in 0..rows {
            let row = &mut d[i * cols..(i + 1) * cols];
            match self.kind {
                ScalerKind::Standard => {
                    for (v, &(mean, std)) in row.iter_mut().zip(&self.stats) {
                        if std > 0.0 {
                            *v = (*v - mean) / std;
                        }
                    }
                }
                ScalerKind::MinMax { lo, hi } => {
                    for (v, &(min, max)) in row.iter_mut().zip(&self.stats) {
                        *v = if max > min {
                            (lo + (*v - min) / (max - min) * (hi - lo)).clamp(lo, hi)
                        } else {
                            lo
                        };
                    }
                }
                ScalerKind::L2Row => {
                    let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if !(norm > 1e-12) {
                        return Err(Error::Normalization(format!(
                            "row {i} has L2 norm {norm:e}"
                        )));
                    }
                    row.iter_mut().for_each(|v| *v /= norm);
                }
            }
        }
        Ok(out)
    }
}

/// Fits on `train` and applies to `train` and every tensor in `others`.
pub fn fit_apply_scaler(
    kind: ScalerKind,
    train: &Tensor,
    others: &[&Tensor],
) -> Result<(Tensor, Vec<Tensor>)> {
    let s = Scaler::fit(kind, train)?;
    let t = s.apply(train)?;
    let o = others.iter().map(|x| s.apply(x)).collect::<Result<_>>()?;
    Ok((t, o))
}

/// Feature pipelines used by the models.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preprocessing {
    Standard,
    /// Standardization followed by per-row L2 normalization.
    StandardL2,
    /// Min-max scaling onto `[0, π/2]`.
    MinMaxHalfPi,
}

impl Preprocessing {
    /// Fits on `train` and returns `[train, others...]` transformed.
    pub fn apply(self, train: &Tensor, others: &[&Tensor]) -> Result<Vec<Tensor>> {
        let (t, o) = match self {
            Preprocessing::Standard | Preprocessing::StandardL2 => {
                fit_apply_scaler(ScalerKind::Standard, train, others)?
            }
            Preprocessing::MinMaxHalfPi => fit_apply_scaler(
                ScalerKind::MinMax {
                    lo: 0.0,
                    hi: FRAC_PI_2,
                },
                train,
                others,
            )?,
        };
        let mut all = vec![t];
        all.extend(o);
        if self == Preprocessing::StandardL2 {
            let l2 = Scaler::fit(ScalerKind::L2Row, &all[0])?;
            all = all.iter().map(|x| l2.apply(x)).collect::<Result<_>>()?;
        }
        Ok(all)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn random(rows: usize, cols: usize, seed: u64) -> Tensor {
        let mut r = SplitMix64::new(seed);
        Tensor::matrix(
            rows,
            cols,
            (0..rows * cols)
                .map(|k| r.normal() * (k % cols + 1) as f64 + 3.0)
                .collect(),
        )
        .unwrap()
    }

    fn col_stats(x: &Tensor, j: usize) -> (f64, f64, f64, f64) {
        let (rows, _) = x.dims2().unwrap();
        let v: Vec<f64> = (0..rows).map(|i| x.row(i)[j]).collect();
        let mean = v.iter().sum::<f64>() / rows as f64;
        let std = (v.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / rows as f64).sqrt();
        let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (mean, std, min, max)
    }

    #[test]
    fn standard_on_fit_data() {
        let x = random(200, 5, 1);
        let (t, _) = fit_apply_scaler(ScalerKind::Standard, &x, &[]).unwrap();
        for j in 0..5 {
            let (m, s, _, _) = col_stats(&t, j);
            assert!(m.abs() < 1e-10 && (s - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_feature_passes_through() {
        let x = Tensor::matrix(3, 2, vec![1.0, 7.0, 2.0, 7.0, 3.0, 7.0]).unwrap();
        let (t, _) = fit_apply_scaler(ScalerKind::Standard, &x, &[]).unwrap();
        assert_eq!(t.row(1)[1], 7.0);
    }

    #[test]
    fn minmax_on_fit_data_and_clamping() {
        let x = random(100, 4, 2);
        let kind = ScalerKind::MinMax {
            lo: 0.0,
            hi: FRAC_PI_2,
        };
        let far = Tensor::matrix(1, 4, vec![1e6, -1e6, 1e6, -1e6]).unwrap();
        let (t, o) = fit_apply_scaler(kind, &x, &[&far]).unwrap();
        for j in 0..4 {
            let (_, _, mn, mx) = col_stats(&t, j);
            assert!(mn.abs() < 1e-12 && (mx - FRAC_PI_2).abs() < 1e-12);
        }
        assert_eq!(o[0].data(), &[FRAC_PI_2, 0.0, FRAC_PI_2, 0.0]);
        assert!(Scaler::fit(ScalerKind::MinMax { lo: 1.0, hi: 1.0 }, &x).is_err());
    }

    #[test]
    fn l2_rows() {
        let x = Tensor::matrix(1, 2, vec![3.0, 4.0]).unwrap();
        let (t, _) = fit_apply_scaler(ScalerKind::L2Row, &x, &[]).unwrap();
        assert_eq!(t.data(), &[0.6, 0.8]);
        let z = Tensor::matrix(2, 2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let err = fit_apply_scaler(ScalerKind::L2Row, &z, &[]).unwrap_err();
        assert!(matches!(&err, Error::Normalization(m) if m.contains("row 1")));
    }

    #[test]
    fn applying_to_other_splits_leaves_fit_unchanged() {
        let x = random(50, 3, 3);
        let y = random(20, 3, 4);
        let s = Scaler::fit(ScalerKind::Standard, &x).unwrap();
        let before = s.clone();
        s.apply(&y).unwrap();
        assert_eq!(s, before);
        assert_eq!(Scaler::fit(ScalerKind::Standard, &x).unwrap(), before);
    }

    #[test]
    fn pipeline_l2_rows_have_unit_norm() {
        let x = random(30, 6, 5);
        let out = Preprocessing::StandardL2
            .apply(&x, &[&random(5, 6, 6)])
            .unwrap();
        for t in &out {
            for i in 0..t.dims2().unwrap().0 {
                let n: f64 = t.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!((n - 1.0).abs() < 1e-12);
            }
        }
    }
}
