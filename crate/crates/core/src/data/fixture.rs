//! Synthetic data with the credit-card schema.
//!
//! Non-fraud rows are standard normal in `V1..V28`; fraud rows are shifted
//! along a fixed subset of components so that the classes are separable but
//! overlap. `Time` and `Amount` follow loose positive distributions.

use super::dataset::{Dataset, N_FEATURES};
use crate::autodiff::Tensor;
use crate::rng::SplitMix64;

/// Rows in the bundled fixture file.
pub const FIXTURE_ROWS: usize = 2000;
pub const FIXTURE_FRAUD: usize = 100;
pub const FIXTURE_SEED: u64 = 20240601;

const SHIFTED: [(usize, f64); 8] = [
    (1, -1.6),
    (3, 1.8),
    (4, -0.9),
    (10, 1.2),
    (12, -2.0),
    (14, -2.2),
    (17, -1.7),
    (21, 0.8),
];

/// `n_fraud` positives and `n_normal` negatives in shuffled order.
pub fn synthetic_dataset(n_fraud: usize, n_normal: usize, seed: u64) -> Dataset {
    let mut rng = SplitMix64::derive(seed, "fixture");
    let mut labels: Vec<u8> = std::iter::repeat_n(1, n_fraud)
        .chain(std::iter::repeat_n(0, n_normal))
        .collect();
    rng.shuffle(&mut labels);
    let n = labels.len();
    let mut data = Vec::with_capacity(n * N_FEATURES);
    for (i, &y) in labels.iter().enumerate() {
        let time = (i as f64 / n as f64) * 172_000.0 + rng.uniform(0.0, 80.0);
        data.push(time.round());
        for k in 1..=28 {
            let mut v = rng.normal();
            if y == 1 {
                if let Some(&(_, shift)) = SHIFTED.iter().find(|(c, _)| *c == k) {
                    v = v * 1.5 + shift;
                }
            }
            data.push((v * 1e6).round() / 1e6);
        }
        let amount = (rng.normal() * 1.1 + if y == 1 { 3.5 } else { 3.0 }).exp();
        data.push((amount * 100.0).round() / 100.0);
    }
    Dataset::new(Tensor::matrix(n, N_FEATURES, data).expect("sized"), labels).expect("valid labels")
}

/// The dataset stored in the bundled fixture CSV.
/// The bundled fixture as CSV text, identical to [`bundled_fixture`] once parsed.
pub const FIXTURE_CSV: &str = include_str!("../../fixtures/creditcard_fixture.csv");

pub fn bundled_fixture() -> Dataset {
    synthetic_dataset(FIXTURE_FRAUD, FIXTURE_ROWS - FIXTURE_FRAUD, FIXTURE_SEED)
}
