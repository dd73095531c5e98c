//! Venn predictor: for every hypothetical label the test example is placed
//! in a category, and the label frequencies of that category form one row of
//! a probability matrix.

use serde::Serialize;

use crate::data::{Bag, LabelKind};
use crate::error::{ConformalError, Result};
use crate::ncm::knn::euclidean;
use crate::par;

/// Venn taxonomy: category of `(x, y)`; `contains_x` says whether `x` is
/// itself part of the training bag.
pub trait VennTaxonomy: Send + Sync {
    fn train(&mut self, bag: &Bag) -> Result<()>;

    fn category(&self, x: &[f64], y: usize, contains_x: bool) -> Result<u64>;

    /// Categories of the members of the bag the taxonomy was trained on.
    fn member_categories(&self, bag: &Bag) -> Result<Vec<u64>> {
        let ys = bag.classes()?;
        bag.iter()
            .zip(&ys)
            .map(|(e, &y)| self.category(&e.x, y, true))
            .collect()
    }
}

/// Category = label of the nearest training observation. For a bag member
/// its own entry is skipped; with no neighbour left the hypothesis label is
/// used. Distance ties go to the lower bag index. Called with `contains_x`
/// but without an index, the first entry equal to `(x, y)` is skipped.
#[derive(Debug, Clone, Default)]
pub struct NearestNeighbourTaxonomy {
    xs: Vec<Vec<f64>>,
    ys: Vec<usize>,
    trained: bool,
}

impl NearestNeighbourTaxonomy {
    pub fn new() -> Self {
        NearestNeighbourTaxonomy::default()
    }
}

impl NearestNeighbourTaxonomy {
    fn nearest(&self, x: &[f64], y: usize, skip: impl Fn(usize) -> bool) -> u64 {
        let mut best: Option<(f64, usize)> = None;
        for (j, xj) in self.xs.iter().enumerate() {
            let d = euclidean(x, xj);
            if skip(j) {
                continue;
            }
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, j));
            }
        }
        best.map_or(y, |(_, j)| self.ys[j]) as u64
    }
}

impl VennTaxonomy for NearestNeighbourTaxonomy {
    fn train(&mut self, bag: &Bag) -> Result<()> {
        bag.require(LabelKind::Class)?;
        self.xs = bag.observations();
        self.ys = bag.classes()?;
        self.trained = true;
        Ok(())
    }

    fn category(&self, x: &[f64], y: usize, contains_x: bool) -> Result<u64> {
        if !self.trained {
            return Err(ConformalError::Untrained);
        }
        let own = if contains_x {
            self.xs
                .iter()
                .zip(&self.ys)
                .position(|(xj, &yj)| yj == y && euclidean(x, xj) == 0.0)
        } else {
            None
        };
        Ok(self.nearest(x, y, |j| Some(j) == own))
    }

    fn member_categories(&self, bag: &Bag) -> Result<Vec<u64>> {
        if !self.trained {
            return Err(ConformalError::Untrained);
        }
        if bag.len() != self.xs.len() {
            return Err(ConformalError::InvalidInput(format!(
                "member categories expect the {} training examples, got {}",
                self.xs.len(),
                bag.len()
            )));
        }
        Ok(par::map_range(bag.len(), |i| {
            self.nearest(&self.xs[i], self.ys[i], |j| j == i)
        }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbabilityInterval {
    pub low: f64,
    pub high: f64,
}

impl ProbabilityInterval {
    pub fn width(&self) -> f64 {
        self.high - self.low
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VennPrediction {
    pub label: usize,
    /// Row `r`: label distribution of the category of `(x, y_r)`.
    pub matrix: Vec<Vec<f64>>,
    /// `[min, max]` of the best column.
    pub probability: ProbabilityInterval,
    /// `[1 − max, 1 − min]` of the best column.
    pub error: ProbabilityInterval,
}

impl VennPrediction {
    /// Best column by maximal minimum entry (ties to the earlier label).
    pub fn from_matrix(matrix: Vec<Vec<f64>>) -> Self {
        let n = matrix.len();
        let column = |c: usize| matrix.iter().map(move |row| row[c]);
        let quality = |c: usize| column(c).fold(f64::INFINITY, f64::min);
        let mut best = 0;
        for c in 1..n {
            if quality(c) > quality(best) {
                best = c;
            }
        }
        let low = quality(best);
        let high = column(best).fold(f64::NEG_INFINITY, f64::max);
        VennPrediction {
            label: best,
            probability: ProbabilityInterval { low, high },
            error: ProbabilityInterval {
                low: 1.0 - high,
                high: 1.0 - low,
            },
            matrix,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VennReport {
    pub trials: usize,
    pub accuracy: f64,
    pub error_rate: f64,
    pub mean_error_low: f64,
    pub mean_error_high: f64,
    pub mean_width: f64,
}

pub fn venn_report(predictions: &[VennPrediction], truths: &[usize]) -> Result<VennReport> {
    if predictions.len() != truths.len() {
        return Err(ConformalError::InvalidInput(format!(
            "{} predictions but {} true labels",
            predictions.len(),
            truths.len()
        )));
    }
    let n = predictions.len();
    let mean = |f: &dyn Fn(&VennPrediction) -> f64| {
        if n == 0 {
            0.0
        } else {
            predictions.iter().map(f).sum::<f64>() / n as f64
        }
    };
    let correct = predictions
        .iter()
        .zip(truths)
        .filter(|(p, &t)| p.label == t)
        .count();
    let accuracy = if n == 0 {
        0.0
    } else {
        correct as f64 / n as f64
    };
    Ok(VennReport {
        trials: n,
        accuracy,
        error_rate: if n == 0 { 0.0 } else { 1.0 - accuracy },
        mean_error_low: mean(&|p| p.error.low),
        mean_error_high: mean(&|p| p.error.high),
        mean_width: mean(&|p| p.error.width()),
    })
}

#[derive(Debug, Clone)]
pub struct VennPredictor<T> {
    taxonomy: T,
    bag: Option<Bag>,
    categories: Vec<u64>,
}

impl<T: VennTaxonomy> VennPredictor<T> {
    pub fn new(taxonomy: T) -> Self {
        VennPredictor {
            taxonomy,
            bag: None,
            categories: Vec::new(),
        }
    }

    pub fn bag(&self) -> Option<&Bag> {
        self.bag.as_ref()
    }

    /// Trains the taxonomy and caches every bag example's category. An empty
    /// bag is allowed; its label space must have at least two labels.
    pub fn train(&mut self, bag: &Bag, override_bag: bool) -> Result<()> {
        bag.require(LabelKind::Class)?;
        let full = match (&self.bag, override_bag) {
            (Some(held), false) => {
                let mut full = held.clone();
                full.append(bag)?;
                full
            }
            _ => bag.clone(),
        };
        if full.n_labels() < 2 {
            return Err(ConformalError::InvalidInput(
                "a Venn predictor needs at least two labels".into(),
            ));
        }
        self.taxonomy.train(&full)?;
        self.categories = self.taxonomy.member_categories(&full)?;
        self.bag = Some(full);
        Ok(())
    }

    fn held(&self) -> Result<&Bag> {
        self.bag.as_ref().ok_or(ConformalError::Untrained)
    }

    /// The probability matrix for one observation.
    pub fn matrix(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        let bag = self.held()?;
        let n_labels = bag.n_labels();
        (0..n_labels)
            .map(|r| {
                let category = self.taxonomy.category(x, r, false)?;
                let mut counts = vec![0usize; n_labels];
                counts[r] += 1;
                for (e, &c) in bag.iter().zip(&self.categories) {
                    if c == category {
                        counts[e.y.as_class().expect("class bag")] += 1;
                    }
                }
                let total: usize = counts.iter().sum();
                Ok(counts.iter().map(|&c| c as f64 / total as f64).collect())
            })
            .collect()
    }

    pub fn predict_full(&self, xs: &[Vec<f64>]) -> Result<Vec<VennPrediction>> {
        let bag = self.held()?;
        crate::cp::check_dims(bag, xs)?;
        par::try_map_range(xs.len(), |r| {
            Ok::<_, ConformalError>(VennPrediction::from_matrix(self.matrix(&xs[r])?))
        })
    }

    /// Predicted labels, with error-probability intervals when `proba`.
    pub fn predict(
        &self,
        xs: &[Vec<f64>],
        proba: bool,
    ) -> Result<Vec<(usize, Option<ProbabilityInterval>)>> {
        Ok(self
            .predict_full(xs)?
            .into_iter()
            .map(|p| (p.label, proba.then_some(p.error)))
            .collect())
    }

    pub fn score(&self, test: &Bag) -> Result<VennReport> {
        if test.is_empty() {
            return Err(ConformalError::EmptyBag);
        }
        let test = test.relabel_to(self.held()?.label_space())?;
        let predictions = self.predict_full(&test.observations())?;
        venn_report(&predictions, &test.classes()?)
    }

    /// Predicts each stream element, then appends it and retrains.
    pub fn score_online(&mut self, stream: &Bag) -> Result<VennReport> {
        let stream = stream.relabel_to(self.held()?.label_space())?;
        let mut predictions = Vec::with_capacity(stream.len());
        for (i, e) in stream.iter().enumerate() {
            predictions.extend(self.predict_full(std::slice::from_ref(&e.x))?);
            self.train(&stream.select(&[i]), false)?;
        }
        venn_report(&predictions, &stream.classes()?)
    }
}
