//! Inductive conformal predictor: the measure is fitted once on a proper
//! training set and p-values are computed against calibration scores.

use std::fmt;
use std::sync::Arc;

use crate::cp::{category_of, check_dims, ConformalClassifier};
use crate::data::{Bag, LabelKind};
use crate::error::{ConformalError, Result};
use crate::ncm::NonconformityMeasure;
use crate::par;
use crate::prediction::{draw_taus, p_value, Epsilons, PValueTable, ScoreStore};
use crate::rng::SeededRng;
use crate::taxonomy::Taxonomy;

#[derive(Clone)]
pub struct IcpConfig {
    pub epsilons: Epsilons,
    pub smoothed: bool,
    pub taxonomy: Option<Arc<dyn Taxonomy>>,
    /// Count the test example itself among the scores at least as large as
    /// its own. Off by default: the numerator then runs over calibration
    /// scores only, so p-values can be 0 and never reach 1.
    pub include_test_in_count: bool,
}

impl fmt::Debug for IcpConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IcpConfig")
            .field("epsilons", &self.epsilons)
            .field("smoothed", &self.smoothed)
            .field("taxonomy", &self.taxonomy.as_ref().map(|_| ".."))
            .field("include_test_in_count", &self.include_test_in_count)
            .finish()
    }
}

impl IcpConfig {
    pub fn new(epsilons: Epsilons) -> Self {
        IcpConfig {
            epsilons,
            smoothed: false,
            taxonomy: None,
            include_test_in_count: false,
        }
    }

    pub fn smoothed(mut self, smoothed: bool) -> Self {
        self.smoothed = smoothed;
        self
    }

    pub fn taxonomy(mut self, taxonomy: impl Taxonomy + 'static) -> Self {
        self.taxonomy = Some(Arc::new(taxonomy));
        self
    }

    pub fn include_test_in_count(mut self, include: bool) -> Self {
        self.include_test_in_count = include;
        self
    }
}

#[derive(Debug, Clone)]
pub struct InductivePredictor<M> {
    cfg: IcpConfig,
    measure: M,
    training: Option<Bag>,
    calibration: ScoreStore,
    calibrated: bool,
}

impl<M: NonconformityMeasure> InductivePredictor<M> {
    pub fn new(cfg: IcpConfig, measure: M) -> Self {
        InductivePredictor {
            cfg,
            measure,
            training: None,
            calibration: ScoreStore::new(),
            calibrated: false,
        }
    }

    pub fn config(&self) -> &IcpConfig {
        &self.cfg
    }

    pub fn measure(&self) -> &M {
        &self.measure
    }

    pub fn training_bag(&self) -> Option<&Bag> {
        self.training.as_ref()
    }

    /// Calibration scores per category, each sorted ascending.
    pub fn calibration(&self) -> &ScoreStore {
        &self.calibration
    }

    /// Fits the measure. With `override_bag` (or on first use) the training
    /// bag is replaced and calibration discarded; otherwise `bag` is appended
    /// and existing calibration scores are kept.
    pub fn train(&mut self, bag: &Bag, override_bag: bool) -> Result<()> {
        bag.require(LabelKind::Class)?;
        if bag.is_empty() {
            return Err(ConformalError::EmptyBag);
        }
        let full = match (&self.training, override_bag) {
            (Some(held), false) => {
                let mut full = held.clone();
                full.append(bag)?;
                full
            }
            _ => {
                self.calibration.clear();
                self.calibrated = false;
                bag.clone()
            }
        };
        self.measure.train(&full)?;
        self.training = Some(full);
        Ok(())
    }

    /// Scores `calibration` and merges the scores into the per-category
    /// store, replacing it when `override_scores` is set.
    pub fn calibrate(&mut self, calibration: &Bag, override_scores: bool) -> Result<()> {
        let training = self.training.as_ref().ok_or(ConformalError::Untrained)?;
        let calibration = calibration.relabel_to(training.label_space())?;
        let scores = self.measure.scores(&calibration, false)?;
        let categories: Vec<u64> = calibration
            .iter()
            .map(|e| category_of(&self.cfg.taxonomy, &e.x, e.y.as_class().expect("class bag")))
            .collect();
        if override_scores {
            self.calibration.clear();
        }
        self.calibration.extend(&scores, &categories)?;
        self.calibrated = true;
        Ok(())
    }
}

impl<M: NonconformityMeasure> ConformalClassifier for InductivePredictor<M> {
    fn label_space(&self) -> &[String] {
        self.training.as_ref().map_or(&[], |b| b.label_space())
    }

    fn epsilons(&self) -> &Epsilons {
        &self.cfg.epsilons
    }

    /// A hypothesis whose category has no calibration scores gets p = 1 and
    /// is listed in `empty_categories`.
    fn p_values(&self, xs: &[Vec<f64>], rng: &mut SeededRng) -> Result<PValueTable> {
        let training = self.training.as_ref().ok_or(ConformalError::Untrained)?;
        if !self.calibrated {
            return Err(ConformalError::Uncalibrated);
        }
        check_dims(training, xs)?;
        let n_labels = training.n_labels();
        let self_count = usize::from(self.cfg.include_test_in_count);
        let taus = draw_taus(rng, self.cfg.smoothed, xs.len(), n_labels);
        let rows = par::try_map_range(xs.len(), |r| {
            let x = &xs[r];
            let alphas = self.measure.score(x)?;
            let mut empty = Vec::new();
            let p: Vec<f64> = alphas
                .iter()
                .enumerate()
                .map(|(y, &alpha)| {
                    let counts = self
                        .calibration
                        .counts(category_of(&self.cfg.taxonomy, x, y), alpha);
                    if counts.size == 0 {
                        empty.push(y);
                        return 1.0;
                    }
                    let tau = taus.as_ref().map(|t| t[r * n_labels + y]);
                    p_value(counts, self_count, tau)
                })
                .collect();
            Ok::<_, ConformalError>((p, empty))
        })?;
        let mut table = PValueTable {
            label_space: training.label_space().to_vec(),
            rows: Vec::with_capacity(rows.len()),
            empty_categories: Vec::new(),
        };
        for (r, (p, empty)) in rows.into_iter().enumerate() {
            table.rows.push(p);
            table
                .empty_categories
                .extend(empty.into_iter().map(|y| (r, y)));
        }
        Ok(table)
    }
}
