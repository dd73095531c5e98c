//! Conformal predictor over a full bag.
//!
//! The default offline mode scores the bag once at training time and only
//! computes the new example's score at prediction time, adding the test
//! example to the count analytically. The exact transductive mode retrains
//! the measure on the augmented bag for every hypothesis and is meant for
//! small bags and as an oracle.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::data::{Bag, Example, LabelKind};
use crate::error::{ConformalError, Result};
use crate::metrics::{validity_report, ValidityReport};
use crate::ncm::NonconformityMeasure;
use crate::par;
use crate::prediction::{
    count_sorted, draw_taus, p_value, BestLabel, Epsilons, PValueTable, PredictionSet, ScoreStore,
};
use crate::rng::SeededRng;
use crate::taxonomy::Taxonomy;

/// Interface shared by the conformal and inductive conformal classifiers.
pub trait ConformalClassifier {
    fn label_space(&self) -> &[String];

    fn epsilons(&self) -> &Epsilons;

    /// p-value of every label for every row. Smoothing values are drawn from
    /// `rng` once per (row, label), row by row in label order.
    fn p_values(&self, xs: &[Vec<f64>], rng: &mut SeededRng) -> Result<PValueTable>;

    fn predict(&self, xs: &[Vec<f64>], rng: &mut SeededRng) -> Result<Vec<PredictionSet>> {
        let table = self.p_values(xs, rng)?;
        Ok(table
            .rows
            .iter()
            .map(|p| PredictionSet::from_p_values(p, self.epsilons()))
            .collect())
    }

    fn predict_best(&self, xs: &[Vec<f64>], rng: &mut SeededRng) -> Result<Vec<BestLabel>> {
        let table = self.p_values(xs, rng)?;
        Ok(table
            .rows
            .iter()
            .map(|p| BestLabel::from_p_values(p))
            .collect())
    }

    /// Error and efficiency rates on a labelled test bag.
    fn score(&self, test: &Bag, rng: &mut SeededRng) -> Result<ValidityReport> {
        if test.is_empty() {
            return Err(ConformalError::EmptyBag);
        }
        let test = test.relabel_to(self.label_space())?;
        let sets = self.predict(&test.observations(), rng)?;
        validity_report(self.epsilons(), &sets, &test.classes()?)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CpMode {
    #[default]
    Offline,
    TransductiveExact,
}

#[derive(Clone)]
pub struct CpConfig {
    pub epsilons: Epsilons,
    pub smoothed: bool,
    pub taxonomy: Option<Arc<dyn Taxonomy>>,
    pub mode: CpMode,
}

impl fmt::Debug for CpConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CpConfig")
            .field("epsilons", &self.epsilons)
            .field("smoothed", &self.smoothed)
            .field("taxonomy", &self.taxonomy.as_ref().map(|_| ".."))
            .field("mode", &self.mode)
            .finish()
    }
}

impl CpConfig {
    pub fn new(epsilons: Epsilons) -> Self {
        CpConfig {
            epsilons,
            smoothed: false,
            taxonomy: None,
            mode: CpMode::Offline,
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

    pub fn mode(mut self, mode: CpMode) -> Self {
        self.mode = mode;
        self
    }
}

pub(crate) fn category_of(taxonomy: &Option<Arc<dyn Taxonomy>>, x: &[f64], y: usize) -> u64 {
    taxonomy.as_ref().map_or(0, |t| t.category(x, y))
}

pub(crate) fn check_dims(bag: &Bag, xs: &[Vec<f64>]) -> Result<()> {
    if let Some(d) = bag.dim() {
        if let Some(x) = xs.iter().find(|x| x.len() != d) {
            return Err(ConformalError::DimensionMismatch {
                expected: d,
                found: x.len(),
            });
        }
    }
    Ok(())
}

/// Exact transductive p-values of `x` under every label of `bag`: each
/// hypothesis is added to the bag, the measure is retrained on the augmented
/// bag and every score recomputed. With an empty bag every p-value is 1.
pub fn transductive_p_values<M>(
    measure: &M,
    bag: &Bag,
    x: &[f64],
    taxonomy: Option<&dyn Taxonomy>,
    taus: Option<&[f64]>,
) -> Result<Vec<f64>>
where
    M: NonconformityMeasure + Clone,
{
    bag.require(LabelKind::Class)?;
    let category = |x: &[f64], y: usize| taxonomy.map_or(0, |t| t.category(x, y));
    (0..bag.n_labels())
        .map(|y| {
            if bag.is_empty() {
                return Ok(1.0);
            }
            let mut augmented = bag.clone();
            augmented.push(Example::class(x.to_vec(), y))?;
            let mut m = measure.clone();
            m.train(&augmented)?;
            let scores = m.scores(&augmented, true)?;
            let (alpha_new, rest) = scores.split_last().expect("augmented bag is nonempty");
            let own = category(x, y);
            let mut reference: Vec<f64> = rest
                .iter()
                .zip(bag.iter())
                .filter(|(_, e)| category(&e.x, e.y.as_class().expect("class bag")) == own)
                .map(|(&s, _)| s)
                .collect();
            reference.sort_by(f64::total_cmp);
            let counts = count_sorted(&reference, *alpha_new);
            Ok(p_value(counts, 1, taus.map(|t| t[y])))
        })
        .collect()
}

/// One step of an online run: the p-values and sets produced before the
/// true label was revealed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OnlineStep {
    pub truth: usize,
    pub p_values: Vec<f64>,
    pub set: PredictionSet,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OnlineReport {
    pub report: ValidityReport,
    pub steps: Vec<OnlineStep>,
}

/// Conformal predictor generic over its nonconformity measure.
#[derive(Debug, Clone)]
pub struct ConformalPredictor<M> {
    cfg: CpConfig,
    measure: M,
    bag: Option<Bag>,
    scores: Vec<f64>,
    store: ScoreStore,
}

impl<M: NonconformityMeasure + Clone> ConformalPredictor<M> {
    pub fn new(cfg: CpConfig, measure: M) -> Self {
        ConformalPredictor {
            cfg,
            measure,
            bag: None,
            scores: Vec::new(),
            store: ScoreStore::new(),
        }
    }

    pub fn config(&self) -> &CpConfig {
        &self.cfg
    }

    pub fn measure(&self) -> &M {
        &self.measure
    }

    /// The bag the predictor currently holds.
    pub fn bag(&self) -> Option<&Bag> {
        self.bag.as_ref()
    }

    /// Cached training scores, in bag order.
    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    /// Cached training scores grouped by Mondrian category.
    pub fn store(&self) -> &ScoreStore {
        &self.store
    }

    /// Trains on `bag`, or on the held bag with `bag` appended when
    /// `override_bag` is false and the predictor was trained before.
    pub fn train(&mut self, bag: &Bag, override_bag: bool) -> Result<()> {
        bag.require(LabelKind::Class)?;
        if bag.is_empty() {
            return Err(ConformalError::EmptyBag);
        }
        let full = match (&self.bag, override_bag) {
            (Some(held), false) => {
                let mut full = held.clone();
                full.append(bag)?;
                full
            }
            _ => bag.clone(),
        };
        self.measure.train(&full)?;
        let scores = self.measure.scores(&full, true)?;
        let categories: Vec<u64> = full
            .iter()
            .map(|e| category_of(&self.cfg.taxonomy, &e.x, e.y.as_class().expect("class bag")))
            .collect();
        let mut store = ScoreStore::new();
        store.extend(&scores, &categories)?;
        self.scores = scores;
        self.store = store;
        self.bag = Some(full);
        Ok(())
    }

    fn held(&self) -> Result<&Bag> {
        self.bag.as_ref().ok_or(ConformalError::Untrained)
    }

    fn offline_row(&self, x: &[f64], taus: Option<&[f64]>) -> Result<(Vec<f64>, Vec<usize>)> {
        let alphas = self.measure.score(x)?;
        let mut empty = Vec::new();
        let p = alphas
            .iter()
            .enumerate()
            .map(|(y, &alpha)| {
                let counts = self
                    .store
                    .counts(category_of(&self.cfg.taxonomy, x, y), alpha);
                if counts.size == 0 {
                    empty.push(y);
                }
                p_value(counts, 1, taus.map(|t| t[y]))
            })
            .collect();
        Ok((p, empty))
    }

    /// Predicts each stream element, then adds it to the bag and retrains.
    pub fn score_online(&mut self, stream: &Bag, rng: &mut SeededRng) -> Result<OnlineReport> {
        let labels = self.held()?.label_space().to_vec();
        let stream = stream.relabel_to(&labels)?;
        let truths = stream.classes()?;
        let mut steps = Vec::with_capacity(stream.len());
        for (i, e) in stream.iter().enumerate() {
            let table = self.p_values(std::slice::from_ref(&e.x), rng)?;
            let p_values = table.rows.into_iter().next().expect("one row");
            let set = PredictionSet::from_p_values(&p_values, &self.cfg.epsilons);
            steps.push(OnlineStep {
                truth: truths[i],
                p_values,
                set,
            });
            self.train(&stream.select(&[i]), false)?;
        }
        let sets: Vec<PredictionSet> = steps.iter().map(|s| s.set.clone()).collect();
        let report = validity_report(&self.cfg.epsilons, &sets, &truths)?;
        Ok(OnlineReport { report, steps })
    }
}

impl<M: NonconformityMeasure + Clone> ConformalClassifier for ConformalPredictor<M> {
    fn label_space(&self) -> &[String] {
        self.bag.as_ref().map_or(&[], |b| b.label_space())
    }

    fn epsilons(&self) -> &Epsilons {
        &self.cfg.epsilons
    }

    fn p_values(&self, xs: &[Vec<f64>], rng: &mut SeededRng) -> Result<PValueTable> {
        let bag = self.held()?;
        check_dims(bag, xs)?;
        let n_labels = bag.n_labels();
        let taus = draw_taus(rng, self.cfg.smoothed, xs.len(), n_labels);
        let row_taus = |r: usize| {
            taus.as_deref()
                .map(|t| &t[r * n_labels..(r + 1) * n_labels])
        };
        let rows = par::try_map_range(xs.len(), |r| match self.cfg.mode {
            CpMode::Offline => self.offline_row(&xs[r], row_taus(r)),
            CpMode::TransductiveExact => {
                let p = transductive_p_values(
                    &self.measure,
                    bag,
                    &xs[r],
                    self.cfg.taxonomy.as_deref(),
                    row_taus(r),
                )?;
                Ok((p, Vec::new()))
            }
        })?;
        let mut table = PValueTable {
            label_space: bag.label_space().to_vec(),
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncm::{KnnConfig, KnnMeasure};
    use crate::taxonomy::ConstantTaxonomy;

    /// Measure with fixed per-label scores, for exercising the counting.
    #[derive(Clone)]
    struct Fixed {
        bag_scores: Vec<f64>,
        new_scores: Vec<f64>,
    }

    impl NonconformityMeasure for Fixed {
        fn train(&mut self, _bag: &Bag) -> Result<()> {
            Ok(())
        }

        fn scores(&self, bag: &Bag, _is_training_bag: bool) -> Result<Vec<f64>> {
            Ok(self.bag_scores[..bag.len()].to_vec())
        }

        fn score(&self, _x: &[f64]) -> Result<Vec<f64>> {
            Ok(self.new_scores.clone())
        }
    }

    fn three() -> Bag {
        Bag::classification(
            ["A", "B"],
            vec![vec![0.0], vec![1.0], vec![2.0]],
            vec![0, 0, 1],
        )
        .unwrap()
    }

    fn fixed_cp(new_scores: Vec<f64>) -> ConformalPredictor<Fixed> {
        let measure = Fixed {
            bag_scores: vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0],
            new_scores,
        };
        let mut cp =
            ConformalPredictor::new(CpConfig::new(Epsilons::new(vec![0.5]).unwrap()), measure);
        cp.train(&three(), true).unwrap();
        cp
    }

    #[test]
    fn offline_p_values_count_the_test_example() {
        let cp = fixed_cp(vec![2.0, 3.5]);
        let mut rng = SeededRng::new(0);
        let t = cp.p_values(&[vec![0.5]], &mut rng).unwrap();
        assert_eq!(t.rows[0], vec![0.75, 0.25]);
        let sets = cp.predict(&[vec![0.5]], &mut rng).unwrap();
        assert_eq!(sets[0].at(0), &[0]);
        let best = cp.predict_best(&[vec![0.5]], &mut rng).unwrap();
        assert_eq!((best[0].label, best[0].significance), (0, 0.25));
    }

    #[test]
    fn tiny_epsilon_gives_full_set() {
        let cp = fixed_cp(vec![100.0, 100.0]);
        let mut cfg = cp.config().clone();
        cfg.epsilons = Epsilons::new(vec![0.2]).unwrap();
        let mut cp2 = ConformalPredictor::new(cfg, cp.measure().clone());
        cp2.train(&three(), true).unwrap();
        let sets = cp2.predict(&[vec![0.0]], &mut SeededRng::new(1)).unwrap();
        assert_eq!(sets[0].at(0), &[0, 1]);
    }

    #[test]
    fn train_appends_or_overrides() {
        let mut cp = fixed_cp(vec![0.0, 0.0]);
        let more = Bag::classification(
            ["A", "B"],
            (0..5).map(|i| vec![i as f64]).collect(),
            vec![0, 1, 0, 1, 0],
        )
        .unwrap();
        cp.train(&more.select(&[0, 1]), false).unwrap();
        assert_eq!(cp.bag().unwrap().len(), 5);
        assert_eq!(cp.scores().len(), 5);
        cp.train(&more.select(&[0, 1]), true).unwrap();
        assert_eq!(cp.bag().unwrap().len(), 2);
        let empty = Bag::with_label_space(["A"]).unwrap();
        assert!(matches!(
            cp.train(&empty, true),
            Err(ConformalError::EmptyBag)
        ));
    }

    #[test]
    fn untrained_errors() {
        let cp = ConformalPredictor::new(
            CpConfig::new(Epsilons::new(vec![0.1]).unwrap()),
            KnnMeasure::new(KnnConfig::new(1).unwrap()),
        );
        assert!(matches!(
            cp.p_values(&[vec![0.0]], &mut SeededRng::new(0)),
            Err(ConformalError::Untrained)
        ));
    }

    #[test]
    fn exact_mode_with_empty_bag_is_all_ones() {
        let bag = Bag::with_label_space(["A", "B", "C"]).unwrap();
        let measure = KnnMeasure::new(KnnConfig::new(1).unwrap());
        let p = transductive_p_values(&measure, &bag, &[0.3], None, None).unwrap();
        assert_eq!(p, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn constant_taxonomy_matches_unconditional() {
        let bag = Bag::classification(
            ["A", "B"],
            (0..8).map(|i| vec![i as f64, (i * i % 5) as f64]).collect(),
            vec![0, 0, 1, 0, 1, 1, 0, 1],
        )
        .unwrap();
        let eps = Epsilons::new(vec![0.1]).unwrap();
        let knn = KnnMeasure::new(KnnConfig::new(1).unwrap());
        let mut plain = ConformalPredictor::new(CpConfig::new(eps.clone()), knn.clone());
        let mut mondrian =
            ConformalPredictor::new(CpConfig::new(eps).taxonomy(ConstantTaxonomy), knn);
        plain.train(&bag, true).unwrap();
        mondrian.train(&bag, true).unwrap();
        let xs = vec![vec![2.5, 1.0], vec![7.0, 0.0]];
        let a = plain.p_values(&xs, &mut SeededRng::new(5)).unwrap();
        let b = mondrian.p_values(&xs, &mut SeededRng::new(5)).unwrap();
        assert_eq!(a.rows, b.rows);
    }

    #[test]
    fn online_grows_the_bag() {
        let bag = Bag::classification(
            ["A", "B"],
            vec![vec![0.0], vec![0.1], vec![1.0], vec![1.1]],
            vec![0, 0, 1, 1],
        )
        .unwrap();
        let stream = Bag::classification(
            ["A", "B"],
            vec![vec![0.05], vec![1.05], vec![0.2]],
            vec![0, 1, 0],
        )
        .unwrap();
        let mut cp = ConformalPredictor::new(
            CpConfig::new(Epsilons::new(vec![0.1]).unwrap()).smoothed(true),
            KnnMeasure::new(KnnConfig::new(1).unwrap()),
        );
        cp.train(&bag, true).unwrap();
        let mut rng = SeededRng::new(3);
        let empty = cp.score_online(&stream.select(&[]), &mut rng).unwrap();
        assert_eq!(empty.report.trials, 0);
        let r = cp.score_online(&stream, &mut rng).unwrap();
        assert_eq!(r.report.trials, 3);
        assert_eq!(cp.bag().unwrap().len(), 7);
        assert!(r
            .steps
            .iter()
            .flat_map(|s| &s.p_values)
            .all(|p| *p > 0.0 && *p <= 1.0));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let cp = fixed_cp(vec![0.0, 0.0]);
        assert!(matches!(
            cp.p_values(&[vec![0.0, 1.0]], &mut SeededRng::new(0)),
            Err(ConformalError::DimensionMismatch { .. })
        ));
    }
}
