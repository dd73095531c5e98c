//! Meta-conformal combined classifier `B:M`.
//!
//! A base classifier `B` is wrapped by a conformal meta classifier `M` that
//! learns where `B` is right. Meta data come from k-fold runs of `B`; k-fold
//! runs of `M` on the meta data give score ratios `p_p / p_n`, whose ROC
//! convex hull and an iso-precision line fix the threshold `T`. At
//! prediction time `B`'s label is returned when the ratio exceeds `T`, and
//! the classifier abstains otherwise.

mod classifiers;
mod kfold;
mod roc;

pub use self::classifiers::{
    BaseClassifier, CartClassifier, ConformalMetaClassifier, KnnClassifier, MetaClassifier,
};
pub use self::kfold::fold_indices;
pub use self::roc::{
    iso_precision_slope, iso_precision_threshold, roc_points, rocch, score_ratio, IsoThreshold,
    RocPoint,
};

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::data::{Bag, LabelKind};
use crate::error::{ConformalError, Result};
use crate::metrics::{confusion_metrics, ConfusionMatrix, ConfusionMetrics};

/// Label space of meta bags: index 0 is "B was wrong", index 1 "B was right".
pub const META_LABELS: [&str; 2] = ["0", "1"];

/// Meta data by the k-fold protocol: for each fold, `base` is trained on the
/// other folds and predicts the fold. The result keeps the order of `bag`;
/// label `1` marks a correct prediction.
pub fn kfold_meta_data<B: BaseClassifier>(
    base: &mut B,
    bag: &Bag,
    folds: &[Vec<usize>],
) -> Result<Bag> {
    bag.require(LabelKind::Class)?;
    let ys = bag.classes()?;
    let mut meta_labels = vec![0usize; bag.len()];
    for (f, fold) in folds.iter().enumerate() {
        let rest: Vec<usize> = folds
            .iter()
            .enumerate()
            .filter(|&(g, _)| g != f)
            .flat_map(|(_, idx)| idx.iter().copied())
            .collect();
        base.train(&bag.select(&rest))?;
        let held_out = bag.select(fold);
        let predicted = base.predict(&held_out.observations())?;
        for (&i, p) in fold.iter().zip(predicted) {
            meta_labels[i] = usize::from(p == ys[i]);
        }
    }
    Bag::classification(META_LABELS, bag.observations(), meta_labels)
}

/// Score ratios by the same fold protocol run with the meta classifier.
/// Each entry pairs a held-out ratio with its true meta class.
pub fn kfold_score_ratios<M: MetaClassifier>(
    meta: &mut M,
    meta_bag: &Bag,
    folds: &[Vec<usize>],
) -> Result<Vec<(f64, bool)>> {
    let labels = meta_bag.classes()?;
    let mut out = vec![(0.0, false); meta_bag.len()];
    for (f, fold) in folds.iter().enumerate() {
        let rest: Vec<usize> = folds
            .iter()
            .enumerate()
            .filter(|&(g, _)| g != f)
            .flat_map(|(_, idx)| idx.iter().copied())
            .collect();
        for class in 0..2 {
            if !rest.iter().any(|&i| labels[i] == class) {
                return Err(ConformalError::InvalidInput(format!(
                    "training part of fold {} has no meta examples of class {class}; \
                     use more folds or stratified folds",
                    f + 1
                )));
            }
        }
        meta.train(&meta_bag.select(&rest))?;
        let p = meta.p_values(&meta_bag.select(fold).observations())?;
        for (&i, (p_n, p_p)) in fold.iter().zip(p) {
            out[i] = (score_ratio(p_p, p_n), labels[i] == 1);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetaConfig {
    pub k_folds: usize,
    pub target_precision: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl MetaConfig {
    pub fn new(k_folds: usize, target_precision: f64, seed: u64) -> Result<Self> {
        if k_folds < 2 {
            return Err(ConformalError::InvalidConfig(format!(
                "k-fold needs k ≥ 2, got {k_folds}"
            )));
        }
        if !(target_precision > 0.0 && target_precision < 1.0) {
            return Err(ConformalError::InvalidConfig(format!(
                "target precision must lie in (0, 1), got {target_precision}"
            )));
        }
        Ok(MetaConfig {
            k_folds,
            target_precision,
            seed,
            stratified: false,
        })
    }

    pub fn stratified(mut self, stratified: bool) -> Self {
        self.stratified = stratified;
        self
    }
}

/// Everything the training run learned besides the two fitted classifiers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetaTraining {
    pub threshold: IsoThreshold,
    pub slope: f64,
    pub n_pos: usize,
    pub n_neg: usize,
    pub fold_sizes: Vec<usize>,
    pub roc: Vec<RocPoint>,
    pub hull: Vec<RocPoint>,
}

impl MetaTraining {
    /// Tab-separated `kind, fpr, tpr, ratio` records after a header row: the
    /// ROC staircase, the hull vertices and the iso-precision line from the
    /// origin through the chosen point to the edge of the unit square.
    pub fn roc_records(&self) -> String {
        let fmt = |v: f64| {
            if v == f64::INFINITY {
                "inf".to_string()
            } else {
                v.to_string()
            }
        };
        let mut out = String::from("kind\tfpr\ttpr\tratio\n");
        let mut line = |kind: &str, fpr: f64, tpr: f64, ratio: f64| {
            let _ = writeln!(out, "{kind}\t{}\t{}\t{}", fmt(fpr), fmt(tpr), fmt(ratio));
        };
        for p in &self.roc {
            line("roc", p.fpr, p.tpr, p.score_ratio);
        }
        for p in &self.hull {
            line("hull", p.fpr, p.tpr, p.score_ratio);
        }
        let t = &self.threshold;
        let (edge_fpr, edge_tpr) = if self.slope > 1.0 {
            (1.0 / self.slope, 1.0)
        } else {
            (1.0, self.slope)
        };
        line("iso", 0.0, 0.0, t.threshold);
        line("iso", t.fpr, t.tpr, t.threshold);
        line("iso", edge_fpr, edge_tpr, t.threshold);
        out
    }

    pub fn write_roc(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.roc_records())?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MetaPrediction {
    Label(usize),
    Abstain,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetaReport {
    pub confusion: ConfusionMatrix,
    pub metrics: ConfusionMetrics,
}

/// Combined classifier `B:M`.
#[derive(Debug, Clone)]
pub struct CombinedClassifier<B, M> {
    cfg: MetaConfig,
    base: B,
    meta: M,
    label_space: Vec<String>,
    training: Option<MetaTraining>,
}

impl<B: BaseClassifier, M: MetaClassifier> CombinedClassifier<B, M> {
    pub fn new(cfg: MetaConfig, base: B, meta: M) -> Self {
        CombinedClassifier {
            cfg,
            base,
            meta,
            label_space: Vec::new(),
            training: None,
        }
    }

    pub fn config(&self) -> &MetaConfig {
        &self.cfg
    }

    pub fn training(&self) -> Option<&MetaTraining> {
        self.training.as_ref()
    }

    pub fn threshold(&self) -> Option<f64> {
        self.training.as_ref().map(|t| t.threshold.threshold)
    }

    /// Overrides the threshold of a trained classifier.
    pub fn set_threshold(&mut self, threshold: f64) -> Result<()> {
        let training = self.training.as_mut().ok_or(ConformalError::Untrained)?;
        training.threshold.threshold = threshold;
        Ok(())
    }

    /// Generates meta data and score ratios, fixes `T`, then fits `B` on
    /// the whole bag and `M` on the whole meta data.
    pub fn train(&mut self, bag: &Bag) -> Result<&MetaTraining> {
        bag.require(LabelKind::Class)?;
        if bag.is_empty() {
            return Err(ConformalError::EmptyBag);
        }
        let folds = fold_indices(bag.len(), self.cfg.k_folds, self.cfg.seed, None)?;
        let meta_bag = kfold_meta_data(&mut self.base, bag, &folds)?;
        let meta_labels = meta_bag.classes()?;
        let n_pos = meta_labels.iter().filter(|&&l| l == 1).count();
        let n_neg = meta_labels.len() - n_pos;
        if n_pos == 0 || n_neg == 0 {
            return Err(ConformalError::InvalidInput(format!(
                "the base classifier was {} on every fold; both meta classes are needed",
                if n_pos == 0 { "wrong" } else { "right" }
            )));
        }
        let meta_folds = fold_indices(
            meta_bag.len(),
            self.cfg.k_folds,
            self.cfg.seed,
            self.cfg.stratified.then_some(meta_labels.as_slice()),
        )?;
        let ratios = kfold_score_ratios(&mut self.meta, &meta_bag, &meta_folds)?;
        let roc = roc_points(&ratios)?;
        let hull = rocch(&roc);
        let threshold = iso_precision_threshold(&hull, self.cfg.target_precision, n_neg, n_pos)?;
        self.base.train(bag)?;
        self.meta.train(&meta_bag)?;
        self.label_space = bag.label_space().to_vec();
        self.training = Some(MetaTraining {
            threshold,
            slope: iso_precision_slope(self.cfg.target_precision, n_neg, n_pos),
            n_pos,
            n_neg,
            fold_sizes: folds.iter().map(Vec::len).collect(),
            roc,
            hull,
        });
        Ok(self.training.as_ref().expect("just set"))
    }

    fn fitted(&self) -> Result<f64> {
        self.threshold().ok_or(ConformalError::Untrained)
    }

    /// Score ratios of the meta classifier.
    pub fn ratios(&self, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
        self.fitted()?;
        Ok(self
            .meta
            .p_values(xs)?
            .into_iter()
            .map(|(p_n, p_p)| score_ratio(p_p, p_n))
            .collect())
    }

    /// `B`'s label where the ratio is strictly above `T`, otherwise abstain.
    pub fn predict(&self, xs: &[Vec<f64>]) -> Result<Vec<MetaPrediction>> {
        let threshold = self.fitted()?;
        let labels = self.base.predict(xs)?;
        let ratios = self.ratios(xs)?;
        Ok(labels
            .into_iter()
            .zip(ratios)
            .map(|(label, ratio)| {
                if ratio > threshold {
                    MetaPrediction::Label(label)
                } else {
                    MetaPrediction::Abstain
                }
            })
            .collect())
    }

    /// Confusion counts on a labelled test bag: the positive class is "B is
    /// right". Accepted rows count as TP/FP, abstentions as RP/RN.
    pub fn score(&self, test: &Bag) -> Result<MetaReport> {
        if test.is_empty() {
            return Err(ConformalError::EmptyBag);
        }
        self.fitted()?;
        let test = test.relabel_to(&self.label_space)?;
        let truths = test.classes()?;
        let xs = test.observations();
        let predictions = self.predict(&xs)?;
        let labels = self.base.predict(&xs)?;
        let mut cm = ConfusionMatrix::default();
        for ((p, label), truth) in predictions.iter().zip(labels).zip(truths) {
            let right = label == truth;
            match (p, right) {
                (MetaPrediction::Label(_), true) => cm.tp += 1,
                (MetaPrediction::Label(_), false) => cm.fp += 1,
                (MetaPrediction::Abstain, true) => cm.rp += 1,
                (MetaPrediction::Abstain, false) => cm.rn += 1,
            }
        }
        Ok(MetaReport {
            metrics: confusion_metrics(&cm),
            confusion: cm,
        })
    }
}
