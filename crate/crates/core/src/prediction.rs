//! Shared pieces of every set-valued predictor: significance levels, score
//! storage with binary-search counting, p-value arithmetic, prediction sets
//! and p-value tables.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{ConformalError, Result};
use crate::rng::SeededRng;

/// Significance levels: nonempty, strictly increasing, each in (0, 1).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Epsilons(Vec<f64>);

impl Epsilons {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(ConformalError::InvalidConfig(
                "at least one significance level is required".into(),
            ));
        }
        if let Some(bad) = values.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return Err(ConformalError::InvalidConfig(format!(
                "significance level {bad} outside (0, 1)"
            )));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ConformalError::InvalidConfig(
                "significance levels must be strictly increasing".into(),
            ));
        }
        Ok(Epsilons(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromStr for Epsilons {
    type Err = ConformalError;

    /// Comma-separated list, e.g. `0.05,0.1`.
    fn from_str(s: &str) -> Result<Self> {
        let values = s
            .split(',')
            .map(|t| {
                t.trim().parse::<f64>().map_err(|_| {
                    ConformalError::InvalidConfig(format!("bad significance level `{t}`"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Epsilons::new(values)
    }
}

/// Calibration or training scores partitioned by Mondrian category, each
/// partition kept sorted ascending.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreStore {
    categories: BTreeMap<u64, Vec<f64>>,
}

/// Counts of stored scores relative to a test score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Counts {
    pub greater: usize,
    pub equal: usize,
    pub size: usize,
}

impl ScoreStore {
    pub fn new() -> Self {
        ScoreStore::default()
    }

    /// Merges `scores[i]` into category `categories[i]`.
    pub fn extend(&mut self, scores: &[f64], categories: &[u64]) -> Result<()> {
        if scores.len() != categories.len() {
            return Err(ConformalError::InvalidInput(format!(
                "{} scores but {} categories",
                scores.len(),
                categories.len()
            )));
        }
        if let Some(bad) = scores.iter().find(|s| s.is_nan()) {
            return Err(ConformalError::InvalidInput(format!(
                "nonconformity score {bad} is not a number"
            )));
        }
        let mut batches: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
        for (&s, &c) in scores.iter().zip(categories) {
            batches.entry(c).or_default().push(s);
        }
        for (c, mut batch) in batches {
            batch.sort_by(f64::total_cmp);
            let stored = self.categories.entry(c).or_default();
            *stored = merge_sorted(stored, &batch);
        }
        Ok(())
    }

    pub fn clear(&mut self) {
        self.categories.clear();
    }

    pub fn len(&self) -> usize {
        self.categories.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sorted scores of one category (empty if unseen).
    pub fn category(&self, category: u64) -> &[f64] {
        self.categories.get(&category).map_or(&[], Vec::as_slice)
    }

    pub fn categories(&self) -> impl Iterator<Item = (u64, &[f64])> {
        self.categories.iter().map(|(&c, v)| (c, v.as_slice()))
    }

    /// Binary-search counts of scores above and equal to `alpha`.
    pub fn counts(&self, category: u64, alpha: f64) -> Counts {
        count_sorted(self.category(category), alpha)
    }
}

fn merge_sorted(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i].total_cmp(&b[j]).is_le() {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Counts over an ascending slice.
pub fn count_sorted(sorted: &[f64], alpha: f64) -> Counts {
    let below_or_equal = sorted.partition_point(|&s| s <= alpha);
    let below = sorted.partition_point(|&s| s < alpha);
    Counts {
        greater: sorted.len() - below_or_equal,
        equal: below_or_equal - below,
        size: sorted.len(),
    }
}

/// `(greater + equal + self_count) / (size + 1)` unsmoothed, or
/// `(greater + τ·(equal + self_count)) / (size + 1)` with `tau`.
pub fn p_value(counts: Counts, self_count: usize, tau: Option<f64>) -> f64 {
    let denominator = (counts.size + 1) as f64;
    let tied = (counts.equal + self_count) as f64;
    match tau {
        None => (counts.greater as f64 + tied) / denominator,
        Some(t) => (counts.greater as f64 + t * tied) / denominator,
    }
}

/// Labels of one test row at every configured significance level, in the
/// same order as the levels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionSet {
    pub sets: Vec<Vec<usize>>,
}

impl PredictionSet {
    /// `y ∈ set(ε)` iff `p_y > ε`.
    pub fn from_p_values(p_values: &[f64], epsilons: &Epsilons) -> Self {
        let sets = epsilons
            .as_slice()
            .iter()
            .map(|&e| (0..p_values.len()).filter(|&y| p_values[y] > e).collect())
            .collect();
        PredictionSet { sets }
    }

    pub fn at(&self, level: usize) -> &[usize] {
        &self.sets[level]
    }

    pub fn contains(&self, level: usize, label: usize) -> bool {
        self.sets[level].contains(&label)
    }
}

/// Per-row, per-label p-values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PValueTable {
    pub label_space: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// `(row, label)` pairs whose Mondrian category had no reference scores.
    pub empty_categories: Vec<(usize, usize)>,
}

/// Single-label prediction with its confidence information.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BestLabel {
    pub label: usize,
    pub p_value: f64,
    /// Second-highest p-value (0 for a one-label space).
    pub significance: f64,
}

impl BestLabel {
    /// Arg-max p-value; ties go to the earlier label.
    pub fn from_p_values(p_values: &[f64]) -> Self {
        let mut best = 0;
        for (y, &p) in p_values.iter().enumerate() {
            if p > p_values[best] {
                best = y;
            }
        }
        let significance = p_values
            .iter()
            .enumerate()
            .filter(|&(y, _)| y != best)
            .map(|(_, &p)| p)
            .fold(0.0, f64::max);
        BestLabel {
            label: best,
            p_value: p_values[best],
            significance,
        }
    }
}

/// Smoothing values for a `rows × labels` table, drawn row-major (labels in
/// label-space order) so the assignment never depends on scheduling.
pub(crate) fn draw_taus(
    rng: &mut SeededRng,
    smoothed: bool,
    rows: usize,
    labels: usize,
) -> Option<Vec<f64>> {
    smoothed.then(|| rng.tau_stream(rows * labels))
}
