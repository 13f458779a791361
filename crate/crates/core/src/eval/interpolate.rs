//! Linear interpolation of two models' positive-class probabilities.

use crate::error::{data_err, Result};

use super::metrics::decide;

/// Grid of mixing weights `0, 0.01, ..., 1`.
pub fn lambda_grid() -> impl Iterator<Item = f64> {
    (0..=100).map(|i| i as f64 / 100.0)
}

pub fn combine(p_a: &[f64], p_b: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if p_a.len() != p_b.len() {
        return Err(data_err!(
            "score lists differ in length: {} vs {}",
            p_a.len(),
            p_b.len()
        ));
    }
    Ok(p_a
        .iter()
        .zip(p_b)
        .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
        .collect())
}

fn correct(probs: &[f64], labels: &[u8]) -> usize {
    probs.iter().zip(labels).filter(|(p, y)| decide(**p) == **y).count()
}

/// Chosen mixing weight and the resulting predictions.
#[derive(Clone, Debug, PartialEq)]
pub struct Interpolation {
    pub lambda: f64,
    pub dev_accuracy: f64,
    pub combined: Vec<f64>,
    pub predictions: Vec<u8>,
}

/// Picks the weight maximising development accuracy (ties go to the smaller
/// weight) and applies it to the test scores.
pub fn interpolate(
    dev_a: &[f64],
    dev_b: &[f64],
    dev_labels: &[u8],
    test_a: &[f64],
    test_b: &[f64],
) -> Result<Interpolation> {
    if dev_a.len() != dev_b.len() || dev_a.len() != dev_labels.len() {
        return Err(data_err!(
            "development lists differ in length: {}, {}, {} labels",
            dev_a.len(),
            dev_b.len(),
            dev_labels.len()
        ));
    }
    if dev_labels.is_empty() {
        return Err(data_err!("empty development set"));
    }
    let mut best = (0.0, 0usize);
    for lambda in lambda_grid() {
        let hits = correct(&combine(dev_a, dev_b, lambda)?, dev_labels);
        if hits > best.1 || lambda == 0.0 {
            best = (lambda, hits);
        }
    }
    let combined = combine(test_a, test_b, best.0)?;
    let predictions = combined.iter().map(|&p| decide(p)).collect();
    Ok(Interpolation {
        lambda: best.0,
        dev_accuracy: best.1 as f64 / dev_labels.len() as f64,
        combined,
        predictions,
    })
}
