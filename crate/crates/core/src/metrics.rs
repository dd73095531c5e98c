//! Validity and efficiency metrics.

use serde::Serialize;

use crate::error::{ConformalError, Result};
use crate::prediction::{Epsilons, PredictionSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpsilonStats {
    pub epsilon: f64,
    /// Fraction of rows whose true label is missing from the set.
    pub err_rate: f64,
    /// Mean set size.
    pub n_criterion: f64,
    pub singleton_rate: f64,
    pub empty_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidityReport {
    pub per_epsilon: Vec<EpsilonStats>,
    pub trials: usize,
}

impl ValidityReport {
    pub fn err_rate(&self, level: usize) -> f64 {
        self.per_epsilon[level].err_rate
    }
}

/// Aggregates prediction sets against true label indices. With no rows all
/// rates are 0.
pub fn validity_report(
    epsilons: &Epsilons,
    sets: &[PredictionSet],
    truths: &[usize],
) -> Result<ValidityReport> {
    if sets.len() != truths.len() {
        return Err(ConformalError::InvalidInput(format!(
            "{} prediction sets but {} true labels",
            sets.len(),
            truths.len()
        )));
    }
    if let Some(bad) = sets.iter().find(|s| s.sets.len() != epsilons.len()) {
        return Err(ConformalError::InvalidInput(format!(
            "prediction set covers {} significance levels, expected {}",
            bad.sets.len(),
            epsilons.len()
        )));
    }
    let n = sets.len();
    let rate = |count: usize| if n == 0 { 0.0 } else { count as f64 / n as f64 };
    let per_epsilon = epsilons
        .as_slice()
        .iter()
        .enumerate()
        .map(|(level, &epsilon)| {
            let mut errors = 0;
            let mut size = 0;
            let mut singletons = 0;
            let mut empties = 0;
            for (set, &truth) in sets.iter().zip(truths) {
                let s = set.at(level);
                errors += usize::from(!s.contains(&truth));
                size += s.len();
                singletons += usize::from(s.len() == 1);
                empties += usize::from(s.is_empty());
            }
            EpsilonStats {
                epsilon,
                err_rate: rate(errors),
                n_criterion: rate(size),
                singleton_rate: rate(singletons),
                empty_rate: rate(empties),
            }
        })
        .collect();
    Ok(ValidityReport {
        per_epsilon,
        trials: n,
    })
}

/// Counts for a binary classifier that may abstain. Rejections are split by
/// the true meta class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub rp: usize,
    pub rn: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_ + self.rp + self.rn
    }
}

/// Rates derived from a [`ConfusionMatrix`]; `None` marks an empty
/// denominator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConfusionMetrics {
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
    pub rejection: Option<f64>,
}

fn fraction(numerator: usize, denominator: usize) -> Option<f64> {
    (denominator > 0).then(|| numerator as f64 / denominator as f64)
}

pub fn confusion_metrics(cm: &ConfusionMatrix) -> ConfusionMetrics {
    let decided = cm.tp + cm.tn + cm.fp + cm.fn_;
    ConfusionMetrics {
        accuracy: fraction(cm.tp + cm.tn, decided),
        precision: fraction(cm.tp, cm.tp + cm.fp),
        tpr: fraction(cm.tp, cm.tp + cm.fn_),
        fpr: fraction(cm.fp, cm.fp + cm.tn),
        rejection: fraction(cm.rp + cm.rn, cm.total()),
    }
}
