use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tukey boxplot statistics of one sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub n: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: Vec<f64>,
}

/// Quantile by linear interpolation at position `(n−1)·p` of the sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * p;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Quartiles, whiskers at the most extreme data within 1.5·IQR, and outliers.
pub fn boxplot_stats(values: &[f64]) -> Result<BoxStats> {
    if values.len() < 4 {
        return Err(Error::Config(format!(
            "boxplot needs at least 4 values, got {}",
            values.len()
        )));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::Config("boxplot of NaN".into()));
    }
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let (q1, median, q3) = (quantile(&s, 0.25), quantile(&s, 0.5), quantile(&s, 0.75));
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside: Vec<f64> = s
        .iter()
        .copied()
        .filter(|v| (lo_fence..=hi_fence).contains(v))
        .collect();
    Ok(BoxStats {
        n: s.len(),
        median,
        q1,
        q3,
        whisker_low: inside[0],
        whisker_high: *inside.last().expect("quartiles lie inside the fences"),
        outliers: s
            .iter()
            .copied()
            .filter(|v| !(lo_fence..=hi_fence).contains(v))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_to_ten() {
        let v: Vec<f64> = (1..=10).map(f64::from).collect();
        let b = boxplot_stats(&v).unwrap();
        assert_eq!((b.median, b.q1, b.q3), (5.5, 3.25, 7.75));
        assert_eq!((b.whisker_low, b.whisker_high), (1.0, 10.0));
        assert!(b.outliers.is_empty());
    }

    #[test]
    fn constant_and_outlier() {
        let b = boxplot_stats(&[0.7; 6]).unwrap();
        assert_eq!(b.q3 - b.q1, 0.0);
        assert!(b.outliers.is_empty());

        let b = boxplot_stats(&[1.0, 2.0, 3.0, 4.0, 5.0, 100.0]).unwrap();
        assert_eq!(b.outliers, vec![100.0]);
        assert_eq!(b.whisker_high, 5.0);
        assert!(boxplot_stats(&[1.0, 2.0, 3.0]).is_err());
    }
}
