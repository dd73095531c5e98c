use crate::cp::{ConformalClassifier, ConformalPredictor, CpConfig};
use crate::data::{Bag, LabelKind};
use crate::error::{ConformalError, Result};
use crate::ncm::knn::{euclidean, Nearest};
use crate::ncm::{CartConfig, DecisionTree, KnnConfig, KnnMeasure, NonconformityMeasure};
use crate::prediction::Epsilons;
use crate::rng::SeededRng;

/// Base classifier `B`: labels are indices into the label space of the bag
/// it was trained on.
pub trait BaseClassifier {
    fn train(&mut self, bag: &Bag) -> Result<()>;

    fn predict(&self, xs: &[Vec<f64>]) -> Result<Vec<usize>>;
}

/// Meta classifier `M`: trained on a meta bag, returns `(p_n, p_p)` per row.
pub trait MetaClassifier {
    fn train(&mut self, meta: &Bag) -> Result<()>;

    fn p_values(&self, xs: &[Vec<f64>]) -> Result<Vec<(f64, f64)>>;
}

/// Majority vote of the k nearest neighbours; vote ties go to the label whose
/// nearest supporter is closest.
#[derive(Debug, Clone)]
pub struct KnnClassifier {
    cfg: KnnConfig,
    xs: Vec<Vec<f64>>,
    ys: Vec<usize>,
    n_labels: usize,
}

impl KnnClassifier {
    pub fn new(cfg: KnnConfig) -> Self {
        KnnClassifier {
            cfg,
            xs: Vec::new(),
            ys: Vec::new(),
            n_labels: 0,
        }
    }

    fn predict_one(&self, x: &[f64]) -> usize {
        let mut near = Nearest::new(self.cfg.k);
        for (j, xj) in self.xs.iter().enumerate() {
            near.offer(euclidean(x, xj), j);
        }
        let mut votes = vec![0usize; self.n_labels];
        let mut first_seen = vec![usize::MAX; self.n_labels];
        for (rank, &(_, j)) in near.items().iter().enumerate() {
            let y = self.ys[j];
            votes[y] += 1;
            first_seen[y] = first_seen[y].min(rank);
        }
        (0..self.n_labels)
            .max_by(|&a, &b| {
                votes[a]
                    .cmp(&votes[b])
                    .then(first_seen[b].cmp(&first_seen[a]))
            })
            .unwrap_or(0)
    }
}

impl BaseClassifier for KnnClassifier {
    fn train(&mut self, bag: &Bag) -> Result<()> {
        bag.require(LabelKind::Class)?;
        if bag.is_empty() {
            return Err(ConformalError::EmptyBag);
        }
        self.xs = bag.observations();
        self.ys = bag.classes()?;
        self.n_labels = bag.n_labels();
        Ok(())
    }

    fn predict(&self, xs: &[Vec<f64>]) -> Result<Vec<usize>> {
        if self.xs.is_empty() {
            return Err(ConformalError::Untrained);
        }
        Ok(xs.iter().map(|x| self.predict_one(x)).collect())
    }
}

/// Majority label of the decision-tree leaf.
#[derive(Debug, Clone)]
pub struct CartClassifier {
    cfg: CartConfig,
    tree: Option<DecisionTree>,
}

impl CartClassifier {
    pub fn new(cfg: CartConfig) -> Self {
        CartClassifier { cfg, tree: None }
    }
}

impl BaseClassifier for CartClassifier {
    fn train(&mut self, bag: &Bag) -> Result<()> {
        self.tree = Some(DecisionTree::fit(&self.cfg, bag)?);
        Ok(())
    }

    fn predict(&self, xs: &[Vec<f64>]) -> Result<Vec<usize>> {
        let tree = self.tree.as_ref().ok_or(ConformalError::Untrained)?;
        Ok(xs.iter().map(|x| tree.predict(x)).collect())
    }
}

/// Unsmoothed conformal predictor over the meta classes.
#[derive(Debug, Clone)]
pub struct ConformalMetaClassifier<N> {
    cp: ConformalPredictor<N>,
}

impl<N: NonconformityMeasure + Clone> ConformalMetaClassifier<N> {
    pub fn new(measure: N) -> Self {
        let eps = Epsilons::new(vec![0.05]).expect("valid level");
        ConformalMetaClassifier {
            cp: ConformalPredictor::new(CpConfig::new(eps), measure),
        }
    }
}

impl ConformalMetaClassifier<KnnMeasure> {
    pub fn knn(cfg: KnnConfig) -> Self {
        ConformalMetaClassifier::new(KnnMeasure::new(cfg))
    }
}

impl<N: NonconformityMeasure + Clone> MetaClassifier for ConformalMetaClassifier<N> {
    fn train(&mut self, meta: &Bag) -> Result<()> {
        let meta = meta.relabel_to(&super::META_LABELS.map(String::from))?;
        self.cp.train(&meta, true)
    }

    fn p_values(&self, xs: &[Vec<f64>]) -> Result<Vec<(f64, f64)>> {
        // Unsmoothed: the generator is never drawn from.
        let table = self.cp.p_values(xs, &mut SeededRng::new(0))?;
        Ok(table.rows.into_iter().map(|p| (p[0], p[1])).collect())
    }
}
