use crate::error::{Error, Result};

use super::model::Mode;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    /// Fraction of correct classes; classification only.
    pub acc: Option<f64>,
    pub mse: f64,
    /// Squared Pearson correlation of predictions and truths.
    pub scc: f64,
    /// Set when either vector is constant and `scc` is reported as 0.
    pub scc_degenerate: bool,
}

pub fn evaluate(predictions: &[f64], truths: &[f64], mode: Mode) -> Result<Metrics> {
    if predictions.len() != truths.len() {
        return Err(Error::Dimension {
            expected: truths.len(),
            actual: predictions.len(),
        });
    }
    if truths.is_empty() {
        return Err(Error::invalid("cannot evaluate an empty prediction set"));
    }
    let n = truths.len() as f64;
    let acc = match mode {
        Mode::Svc => Some(
            predictions
                .iter()
                .zip(truths)
                .filter(|(p, t)| p == t)
                .count() as f64
                / n,
        ),
        Mode::Svr => None,
    };
    let mse = predictions
        .iter()
        .zip(truths)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / n;
    let (scc, scc_degenerate) = squared_correlation(predictions, truths);
    Ok(Metrics {
        acc,
        mse,
        scc,
        scc_degenerate,
    })
}

/// Returns `(r^2, degenerate)`; a constant input yields `(0, true)`.
fn squared_correlation(p: &[f64], t: &[f64]) -> (f64, bool) {
    let n = p.len() as f64;
    let mp = p.iter().sum::<f64>() / n;
    let mt = t.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in p.iter().zip(t) {
        let (da, db) = (a - mp, b - mt);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return (0.0, true);
    }
    ((sxy * sxy / (sxx * syy)).min(1.0), false)
}
