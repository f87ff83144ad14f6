use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};

/// Cross-entropy on spike counts summed over steps.
///
/// `record` holds one `[batch, 2]` spike tensor per step. Returns the loss and
/// the `[batch, 2]` counts.
pub fn spike_count_ce(tape: &mut Tape, record: &[Var], labels: &[usize]) -> Result<(Var, Var)> {
    let first = *record
        .first()
        .ok_or_else(|| Error::dim("empty spike record"))?;
    for &s in record {
        let (_, c) = tape.value(s).dims2()?;
        if c != 2 {
            return Err(Error::dim(format!(
                "spike record with {c} output neurons, expected 2"
            )));
        }
    }
    let mut counts = first;
    for &s in &record[1..] {
        counts = tape.add(counts, s)?;
    }
    let loss = tape.cross_entropy(counts, labels)?;
    Ok((loss, counts))
}

/// `softmax(row)[1]` for each two-column row: the class-1 score.
pub fn class1_softmax(two_col: &[f64]) -> Vec<f64> {
    two_col
        .chunks_exact(2)
        .map(|r| 1.0 / (1.0 + (r[0] - r[1]).exp()))
        .collect()
}

/// `argmax` per two-column row, ties to class 0.
pub fn class_argmax(two_col: &[f64]) -> Vec<usize> {
    two_col
        .chunks_exact(2)
        .map(|r| usize::from(r[1] > r[0]))
        .collect()
}
