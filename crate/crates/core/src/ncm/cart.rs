//! Minimal CART classifier (Gini impurity, axis-aligned thresholds) and the
//! nonconformity measure built on its leaves.

use serde::Serialize;

use super::NonconformityMeasure;
use crate::data::{Bag, LabelKind};
use crate::error::{ConformalError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CartConfig {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl CartConfig {
    pub fn new(max_depth: usize, min_leaf: usize) -> Result<Self> {
        if max_depth == 0 || min_leaf == 0 {
            return Err(ConformalError::InvalidConfig(
                "max_depth and min_leaf must be at least 1".into(),
            ));
        }
        Ok(CartConfig {
            max_depth,
            min_leaf,
        })
    }
}

impl Default for CartConfig {
    fn default() -> Self {
        CartConfig {
            max_depth: 5,
            min_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Leaf {
        counts: Vec<usize>,
    },
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    root: TreeNode,
    n_labels: usize,
}

fn gini_mass(counts: &[usize], total: usize) -> f64 {
    // total · gini = total − Σ c² / total
    if total == 0 {
        return 0.0;
    }
    let sq: f64 = counts.iter().map(|&c| (c * c) as f64).sum();
    total as f64 - sq / total as f64
}

struct Candidate {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl DecisionTree {
    /// Grows a tree on a classification bag. Deterministic: impurity ties go
    /// to the lower feature index, then the smaller threshold.
    pub fn fit(cfg: &CartConfig, bag: &Bag) -> Result<Self> {
        bag.require(LabelKind::Class)?;
        if bag.is_empty() {
            return Err(ConformalError::EmptyBag);
        }
        let xs = bag.observations();
        let ys = bag.classes()?;
        let n_labels = bag.n_labels();
        let idx: Vec<usize> = (0..xs.len()).collect();
        let root = grow(cfg, &xs, &ys, n_labels, idx, 0);
        Ok(DecisionTree { root, n_labels })
    }

    pub fn root(&self) -> &TreeNode {
        &self.root
    }

    pub fn depth(&self) -> usize {
        fn depth(n: &TreeNode) -> usize {
            match n {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + depth(left).max(depth(right)),
            }
        }
        depth(&self.root)
    }

    /// Label counts of the leaf containing `x`.
    pub fn leaf_counts(&self, x: &[f64]) -> &[usize] {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { counts } => return counts,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    /// Majority label of the leaf; ties go to the lower label index.
    pub fn predict(&self, x: &[f64]) -> usize {
        let counts = self.leaf_counts(x);
        let mut best = 0;
        for (c, &n) in counts.iter().enumerate() {
            if n > counts[best] {
                best = c;
            }
        }
        best
    }

    /// `1 − f`, where `f` is the share of label `y` in the leaf holding `x`.
    pub fn score(&self, x: &[f64], y: usize) -> f64 {
        let counts = self.leaf_counts(x);
        let total: usize = counts.iter().sum();
        let same = counts.get(y).copied().unwrap_or(0);
        1.0 - same as f64 / total as f64
    }

    pub fn n_labels(&self) -> usize {
        self.n_labels
    }
}

fn grow(
    cfg: &CartConfig,
    xs: &[Vec<f64>],
    ys: &[usize],
    n_labels: usize,
    idx: Vec<usize>,
    depth: usize,
) -> TreeNode {
    let mut counts = vec![0usize; n_labels];
    for &i in &idx {
        counts[ys[i]] += 1;
    }
    let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
    if pure || depth >= cfg.max_depth || idx.len() < 2 * cfg.min_leaf {
        return TreeNode::Leaf { counts };
    }
    let Some(best) = best_split(cfg, xs, ys, n_labels, &idx, &counts) else {
        return TreeNode::Leaf { counts };
    };
    let (l, r): (Vec<usize>, Vec<usize>) = idx
        .into_iter()
        .partition(|&i| xs[i][best.feature] <= best.threshold);
    TreeNode::Split {
        feature: best.feature,
        threshold: best.threshold,
        left: Box::new(grow(cfg, xs, ys, n_labels, l, depth + 1)),
        right: Box::new(grow(cfg, xs, ys, n_labels, r, depth + 1)),
    }
}

#[allow(clippy::needless_range_loop)]
fn best_split(
    cfg: &CartConfig,
    xs: &[Vec<f64>],
    ys: &[usize],
    n_labels: usize,
    idx: &[usize],
    counts: &[usize],
) -> Option<Candidate> {
    let dim = xs[idx[0]].len();
    let n = idx.len();
    let mut best: Option<Candidate> = None;
    for feature in 0..dim {
        let mut order = idx.to_vec();
        order.sort_by(|&a, &b| xs[a][feature].total_cmp(&xs[b][feature]).then(a.cmp(&b)));
        let mut left = vec![0usize; n_labels];
        for pos in 0..n - 1 {
            left[ys[order[pos]]] += 1;
            let lo = xs[order[pos]][feature];
            let hi = xs[order[pos + 1]][feature];
            if lo == hi {
                continue;
            }
            let nl = pos + 1;
            let nr = n - nl;
            if nl < cfg.min_leaf || nr < cfg.min_leaf {
                continue;
            }
            let right: Vec<usize> = counts.iter().zip(&left).map(|(t, l)| t - l).collect();
            let impurity = gini_mass(&left, nl) + gini_mass(&right, nr);
            if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                best = Some(Candidate {
                    feature,
                    threshold: lo + (hi - lo) / 2.0,
                    impurity,
                });
            }
        }
    }
    best
}

/// Decision-tree nonconformity measure: `α = 1 − f` with `f` the same-label
/// fraction of the leaf. Scores do not depend on `is_training_bag`.
#[derive(Debug, Clone)]
pub struct CartMeasure {
    cfg: CartConfig,
    tree: Option<DecisionTree>,
    label_space: Vec<String>,
}

impl CartMeasure {
    pub fn new(cfg: CartConfig) -> Self {
        CartMeasure {
            cfg,
            tree: None,
            label_space: Vec::new(),
        }
    }

    pub fn config(&self) -> CartConfig {
        self.cfg
    }

    pub fn tree(&self) -> Option<&DecisionTree> {
        self.tree.as_ref()
    }

    fn fitted(&self) -> Result<&DecisionTree> {
        self.tree.as_ref().ok_or(ConformalError::Untrained)
    }
}

impl NonconformityMeasure for CartMeasure {
    fn train(&mut self, bag: &Bag) -> Result<()> {
        self.tree = Some(DecisionTree::fit(&self.cfg, bag)?);
        self.label_space = bag.label_space().to_vec();
        Ok(())
    }

    fn scores(&self, bag: &Bag, _is_training_bag: bool) -> Result<Vec<f64>> {
        let tree = self.fitted()?;
        let bag = bag.relabel_to(&self.label_space)?;
        let ys = bag.classes()?;
        Ok(bag
            .iter()
            .zip(ys)
            .map(|(e, y)| tree.score(&e.x, y))
            .collect())
    }

    fn score(&self, x: &[f64]) -> Result<Vec<f64>> {
        let tree = self.fitted()?;
        Ok((0..tree.n_labels()).map(|y| tree.score(x, y)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_bag_is_a_leaf() {
        let bag = Bag::classification(["A", "B"], vec![vec![0.0], vec![1.0]], vec![1, 1]).unwrap();
        let tree = DecisionTree::fit(&CartConfig::default(), &bag).unwrap();
        assert_eq!(tree.root(), &TreeNode::Leaf { counts: vec![0, 2] });
    }

    #[test]
    fn separable_bag_splits_once_between_classes() {
        let bag = Bag::classification(
            ["A", "B"],
            vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
            vec![0, 0, 1, 1],
        )
        .unwrap();
        let tree = DecisionTree::fit(&CartConfig::default(), &bag).unwrap();
        assert_eq!(tree.depth(), 1);
        match tree.root() {
            TreeNode::Split {
                feature, threshold, ..
            } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 1.5);
            }
            leaf => panic!("expected split, got {leaf:?}"),
        }
    }

    #[test]
    fn xor_with_depth_one_gives_impure_leaves() {
        let bag = Bag::classification(
            ["A", "B"],
            vec![
                vec![0.0, 0.0],
                vec![1.0, 1.0],
                vec![0.0, 1.0],
                vec![1.0, 0.0],
            ],
            vec![0, 0, 1, 1],
        )
        .unwrap();
        let tree = DecisionTree::fit(&CartConfig::new(1, 1).unwrap(), &bag).unwrap();
        assert_eq!(tree.depth(), 1);
        match tree.root() {
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                // all splits tie; lowest feature index wins
                assert_eq!((*feature, *threshold), (0, 0.5));
                assert_eq!(**left, TreeNode::Leaf { counts: vec![1, 1] });
                assert_eq!(**right, TreeNode::Leaf { counts: vec![1, 1] });
            }
            leaf => panic!("expected split, got {leaf:?}"),
        }
    }

    #[test]
    fn min_leaf_is_honoured() {
        let bag = Bag::classification(
            ["A", "B"],
            vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
            vec![0, 1, 1, 1],
        )
        .unwrap();
        let tree = DecisionTree::fit(&CartConfig::new(3, 2).unwrap(), &bag).unwrap();
        match tree.root() {
            TreeNode::Split { threshold, .. } => assert_eq!(*threshold, 1.5),
            leaf => panic!("expected split, got {leaf:?}"),
        }
    }

    #[test]
    fn leaf_fraction_scores() {
        let bag = Bag::classification(
            ["A", "B"],
            vec![vec![0.0], vec![0.0], vec![0.0], vec![0.0], vec![9.0]],
            vec![0, 0, 0, 1, 1],
        )
        .unwrap();
        let tree = DecisionTree::fit(&CartConfig::new(1, 1).unwrap(), &bag).unwrap();
        assert_eq!(tree.score(&[0.0], 0), 0.25);
        assert_eq!(tree.score(&[9.0], 1), 0.0);
        assert_eq!(tree.score(&[9.0], 0), 1.0);
        assert_eq!(tree.predict(&[0.0]), 0);
    }

    #[test]
    fn rejects_regression_and_untrained() {
        let bag = Bag::regression(vec![vec![0.0]], vec![1.0]).unwrap();
        assert!(DecisionTree::fit(&CartConfig::default(), &bag).is_err());
        assert!(CartMeasure::new(CartConfig::default())
            .score(&[0.0])
            .is_err());
        assert!(CartConfig::new(0, 1).is_err());
    }
}
