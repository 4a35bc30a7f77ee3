//! AUC and per-class recall.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

fn check_inputs(scores: &[f64], labels: &[u8]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch { what: "scores vs labels", expected: labels.len(), found: scores.len() });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite("scores"));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::InvalidLabel(bad));
    }
    let pos = labels.iter().filter(|&&l| l == 1).count();
    let neg = labels.len() - pos;
    if neg == 0 {
        return Err(Error::ClassAbsent(0));
    }
    if pos == 0 {
        return Err(Error::ClassAbsent(1));
    }
    Ok((neg, pos))
}

/// Probability that a random positive outranks a random negative, ties counting
/// one half. One sort, then a sweep over groups of equal scores.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let (neg, pos) = check_inputs(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Twice the Mann-Whitney U, kept integral so ties are exact.
    let mut twice_u: u128 = 0;
    let mut negatives_below: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let (mut gp, mut gn) = (0u128, 0u128);
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] == 1 {
                gp += 1;
            } else {
                gn += 1;
            }
            i += 1;
        }
        twice_u += 2 * gp * negatives_below + gp * gn;
        negatives_below += gn;
    }
    Ok(twice_u as f64 / (2.0 * neg as f64 * pos as f64))
}

/// 2x2 confusion counts; class 1 is "positive".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Confusion {
    pub true_negative: usize,
    pub false_positive: usize,
    pub false_negative: usize,
    pub true_positive: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.true_negative + self.false_positive + self.false_negative + self.true_positive
    }

    pub fn recall_class0(&self) -> f64 {
        self.true_negative as f64 / (self.true_negative + self.false_positive) as f64
    }

    pub fn recall_class1(&self) -> f64 {
        self.true_positive as f64 / (self.true_positive + self.false_negative) as f64
    }
}

/// Scores of one model on one split.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalReport {
    pub auc: f64,
    pub recall_class0: f64,
    pub recall_class1: f64,
    pub recall_macro: f64,
    /// Predictions at `threshold`, class 1 when `score >= threshold`.
    pub confusion: Confusion,
    pub threshold: f64,
    pub n_rows: usize,
    pub split_name: String,
    pub model_id: String,
}

impl EvalReport {
    pub fn named(mut self, split_name: impl Into<String>, model_id: impl Into<String>) -> Self {
        self.split_name = split_name.into();
        self.model_id = model_id.into();
        self
    }
}

/// Confusion counts at `threshold` and the derived recalls, plus AUC of the raw scores.
/// Use 0.5 for probabilities and 0 for SVM margins.
pub fn recall_report(scores: &[f64], labels: &[u8], threshold: f64) -> Result<EvalReport> {
    check_inputs(scores, labels)?;
    let mut c = Confusion::default();
    for (&s, &y) in scores.iter().zip(labels) {
        match (y, s >= threshold) {
            (0, false) => c.true_negative += 1,
            (0, true) => c.false_positive += 1,
            (_, false) => c.false_negative += 1,
            (_, true) => c.true_positive += 1,
        }
    }
    let recall_class0 = c.recall_class0();
    let recall_class1 = c.recall_class1();
    Ok(EvalReport {
        auc: auc(scores, labels)?,
        recall_class0,
        recall_class1,
        recall_macro: (recall_class0 + recall_class1) / 2.0,
        confusion: c,
        threshold,
        n_rows: labels.len(),
        split_name: String::new(),
        model_id: String::new(),
    })
}
