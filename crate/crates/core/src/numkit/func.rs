//! Stable elementary functions and loss functions.

use crate::error::{Error, Result};
use crate::numkit::matrix::DenseMatrix;

/// Row-wise softmax. Each row of the result is a probability vector. The
/// per-row maximum is subtracted before exponentiation so large logits cannot
/// overflow.
pub fn softmax_rows(logits: &DenseMatrix) -> DenseMatrix {
    let mut out = logits.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

/// log(sum(exp(row))) computed against the row maximum.
fn log_sum_exp(row: &[f64]) -> f64 {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = row.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Mean negative log-probability of the true class. `probs` rows must already
/// be probability vectors (see [`softmax_rows`]).
pub fn cross_entropy(probs: &DenseMatrix, labels: &[usize]) -> Result<f64> {
    if probs.rows() != labels.len() {
        return Err(Error::Shape(format!(
            "cross_entropy: {} probability rows vs {} labels",
            probs.rows(),
            labels.len()
        )));
    }
    let mut total = 0.0;
    for (i, &label) in labels.iter().enumerate() {
        if label >= probs.cols() {
            return Err(Error::Label {
                index: i,
                label,
                num_classes: probs.cols(),
            });
        }
        total -= probs.get(i, label).ln();
    }
    Ok(total / labels.len() as f64)
}

/// Mean cross-entropy straight from logits, using the log-sum-exp identity.
/// Numerically safer than `softmax_rows` followed by [`cross_entropy`] when
/// probabilities underflow; the fitting loop in `heads` goes through here.
pub fn cross_entropy_from_logits(logits: &DenseMatrix, labels: &[usize]) -> Result<f64> {
    if logits.rows() != labels.len() {
        return Err(Error::Shape(format!(
            "cross_entropy_from_logits: {} logit rows vs {} labels",
            logits.rows(),
            labels.len()
        )));
    }
    let mut total = 0.0;
    for (i, &label) in labels.iter().enumerate() {
        if label >= logits.cols() {
            return Err(Error::Label {
                index: i,
                label,
                num_classes: logits.cols(),
            });
        }
        let row = logits.row(i);
        total += log_sum_exp(row) - row[label];
    }
    Ok(total / labels.len() as f64)
}

/// Mean of squared differences.
pub fn squared_error(pred: &DenseMatrix, target: &DenseMatrix) -> Result<f64> {
    if pred.shape() != target.shape() {
        return Err(Error::Shape(format!(
            "squared_error: {}x{} vs {}x{}",
            pred.rows(),
            pred.cols(),
            target.rows(),
            target.cols()
        )));
    }
    let n = pred.data().len();
    if n == 0 {
        return Ok(0.0);
    }
    let total: f64 = pred
        .data()
        .iter()
        .zip(target.data())
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(total / n as f64)
}
