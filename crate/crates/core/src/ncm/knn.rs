use serde::Serialize;

use super::{ratio, NonconformityMeasure, RegressionCoefficientProvider};
use crate::data::{Bag, LabelKind};
use crate::error::{ConformalError, Result};
use crate::par;

/// k-NN parameters. Distances are Euclidean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct KnnConfig {
    pub k: usize,
}

impl KnnConfig {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(ConformalError::InvalidConfig("k must be at least 1".into()));
        }
        Ok(KnnConfig { k })
    }
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}

/// The `k` smallest `(distance, index)` pairs seen so far, ordered by
/// distance and then index, so distance ties go to the earlier bag element.
#[derive(Debug, Clone)]
pub(crate) struct Nearest {
    k: usize,
    items: Vec<(f64, usize)>,
    seen: usize,
}

impl Nearest {
    pub(crate) fn new(k: usize) -> Self {
        Nearest {
            k,
            items: Vec::with_capacity(k + 1),
            seen: 0,
        }
    }

    pub(crate) fn offer(&mut self, d: f64, idx: usize) {
        self.seen += 1;
        let key = (d, idx);
        let before = |a: &(f64, usize), b: &(f64, usize)| a.0 < b.0 || (a.0 == b.0 && a.1 < b.1);
        if self.items.len() == self.k {
            match self.items.last() {
                Some(last) if before(&key, last) => {
                    self.items.pop();
                }
                _ => return,
            }
        }
        let pos = self.items.partition_point(|it| before(it, &key));
        self.items.insert(pos, key);
    }

    /// Number of candidates offered, kept or not.
    pub(crate) fn seen(&self) -> usize {
        self.seen
    }

    pub(crate) fn items(&self) -> &[(f64, usize)] {
        &self.items
    }

    /// Sum of the kept distances, smallest first.
    pub(crate) fn distance_sum(&self) -> f64 {
        self.items.iter().map(|it| it.0).sum()
    }
}

/// k nearest training points to `x`, optionally skipping one index.
pub(crate) fn k_nearest(xs: &[Vec<f64>], x: &[f64], k: usize, skip: Option<usize>) -> Nearest {
    let mut near = Nearest::new(k);
    for (j, xj) in xs.iter().enumerate() {
        if Some(j) != skip {
            near.offer(euclidean(x, xj), j);
        }
    }
    near
}

/// Classification measure `α = d_k^y / d_k^{-y}`: the sum of the k smallest
/// distances to same-label training points over the same sum for
/// other-label points.
#[derive(Debug, Clone)]
pub struct KnnMeasure {
    cfg: KnnConfig,
    xs: Vec<Vec<f64>>,
    ys: Vec<usize>,
    label_space: Vec<String>,
    trained: bool,
}

impl KnnMeasure {
    pub fn new(cfg: KnnConfig) -> Self {
        KnnMeasure {
            cfg,
            xs: Vec::new(),
            ys: Vec::new(),
            label_space: Vec::new(),
            trained: false,
        }
    }

    pub fn config(&self) -> KnnConfig {
        self.cfg
    }

    fn check_trained(&self) -> Result<()> {
        if self.trained {
            Ok(())
        } else {
            Err(ConformalError::Untrained)
        }
    }

    fn deficient(&self, label: usize, same: bool, available: usize) -> ConformalError {
        let name = &self.label_space[label];
        ConformalError::NotEnoughNeighbours {
            group: if same {
                format!("label `{name}`")
            } else {
                format!("labels other than `{name}`")
            },
            needed: self.cfg.k,
            available,
        }
    }

    fn score_one(&self, x: &[f64], y: usize, skip: Option<usize>) -> Result<f64> {
        let k = self.cfg.k;
        let mut same = Nearest::new(k);
        let mut other = Nearest::new(k);
        for (j, (xj, &yj)) in self.xs.iter().zip(&self.ys).enumerate() {
            if Some(j) == skip {
                continue;
            }
            let d = euclidean(x, xj);
            if yj == y {
                same.offer(d, j);
            } else {
                other.offer(d, j);
            }
        }
        if same.seen() < k {
            return Err(self.deficient(y, true, same.seen()));
        }
        if other.seen() < k {
            return Err(self.deficient(y, false, other.seen()));
        }
        Ok(ratio(same.distance_sum(), other.distance_sum()))
    }
}

impl NonconformityMeasure for KnnMeasure {
    fn train(&mut self, bag: &Bag) -> Result<()> {
        bag.require(LabelKind::Class)?;
        self.xs = bag.observations();
        self.ys = bag.classes()?;
        self.label_space = bag.label_space().to_vec();
        self.trained = true;
        Ok(())
    }

    fn scores(&self, bag: &Bag, is_training_bag: bool) -> Result<Vec<f64>> {
        self.check_trained()?;
        let bag = bag.relabel_to(&self.label_space)?;
        if is_training_bag && bag.len() != self.xs.len() {
            return Err(ConformalError::InvalidInput(format!(
                "training-bag scoring expects {} examples, got {}",
                self.xs.len(),
                bag.len()
            )));
        }
        let ys = bag.classes()?;
        par::try_map_range(bag.len(), |i| {
            let skip = is_training_bag.then_some(i);
            self.score_one(&bag.get(i).x, ys[i], skip)
        })
    }

    fn score(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_trained()?;
        let k = self.cfg.k;
        let n_labels = self.label_space.len();
        let mut per_label: Vec<Nearest> = (0..n_labels).map(|_| Nearest::new(k)).collect();
        for (j, (xj, &yj)) in self.xs.iter().zip(&self.ys).enumerate() {
            per_label[yj].offer(euclidean(x, xj), j);
        }
        (0..n_labels)
            .map(|y| {
                let same = &per_label[y];
                if same.seen() < k {
                    return Err(self.deficient(y, true, same.seen()));
                }
                // k smallest over the union of the other labels' k smallest.
                let mut other = Nearest::new(k);
                let mut available = 0;
                for (c, near) in per_label.iter().enumerate() {
                    if c != y {
                        available += near.seen();
                        for &(d, j) in near.items() {
                            other.offer(d, j);
                        }
                    }
                }
                if available < k {
                    return Err(self.deficient(y, false, available));
                }
                Ok(ratio(same.distance_sum(), other.distance_sum()))
            })
            .collect()
    }
}

/// k-NN regression coefficients for the RRCM: `a_i = y_i − mean(neighbour
/// labels)`, `b_i = 0` for bag elements and `(−mean, 1)` for a new point.
#[derive(Debug, Clone)]
pub struct KnnRegressor {
    cfg: KnnConfig,
    xs: Vec<Vec<f64>>,
    ys: Vec<f64>,
    trained: bool,
}

impl KnnRegressor {
    pub fn new(cfg: KnnConfig) -> Self {
        KnnRegressor {
            cfg,
            xs: Vec::new(),
            ys: Vec::new(),
            trained: false,
        }
    }

    pub fn config(&self) -> KnnConfig {
        self.cfg
    }

    fn neighbour_mean(&self, x: &[f64], skip: Option<usize>) -> Result<f64> {
        let k = self.cfg.k;
        let available = self.xs.len() - usize::from(skip.is_some());
        if available < k {
            return Err(ConformalError::NotEnoughNeighbours {
                group: "regression neighbours".into(),
                needed: k,
                available,
            });
        }
        let near = k_nearest(&self.xs, x, k, skip);
        Ok(near.items().iter().map(|&(_, j)| self.ys[j]).sum::<f64>() / k as f64)
    }
}

impl RegressionCoefficientProvider for KnnRegressor {
    fn train(&mut self, bag: &Bag) -> Result<()> {
        self.ys = bag.targets()?;
        self.xs = bag.observations();
        self.trained = true;
        Ok(())
    }

    fn coeffs(&self, bag: &Bag, is_training_bag: bool) -> Result<(Vec<f64>, Vec<f64>)> {
        if !self.trained {
            return Err(ConformalError::Untrained);
        }
        let ys = bag.targets()?;
        if is_training_bag && bag.len() != self.xs.len() {
            return Err(ConformalError::InvalidInput(format!(
                "training-bag coefficients expect {} examples, got {}",
                self.xs.len(),
                bag.len()
            )));
        }
        let a = par::try_map_range(bag.len(), |i| {
            let mean = self.neighbour_mean(&bag.get(i).x, is_training_bag.then_some(i))?;
            Ok::<_, ConformalError>(ys[i] - mean)
        })?;
        Ok((a, vec![0.0; bag.len()]))
    }

    fn coeffs_n(&self, x: &[f64]) -> Result<(f64, f64)> {
        if !self.trained {
            return Err(ConformalError::Untrained);
        }
        Ok((-self.neighbour_mean(x, None)?, 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_bag() -> Bag {
        // x = [0, 1, 3], y = [A, A, B]
        Bag::classification(
            ["A", "B"],
            vec![vec![0.0], vec![1.0], vec![3.0]],
            vec![0, 0, 1],
        )
        .unwrap()
    }

    fn trained(k: usize, bag: &Bag) -> KnnMeasure {
        let mut m = KnnMeasure::new(KnnConfig::new(k).unwrap());
        m.train(bag).unwrap();
        m
    }

    #[test]
    fn scores_new_examples() {
        let train = line_bag();
        let m = trained(1, &train);
        let target =
            Bag::classification(["A", "B"], vec![vec![2.5], vec![2.0]], vec![1, 1]).unwrap();
        let s = m.scores(&target, false).unwrap();
        assert!((s[0] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(s[1], 1.0);
    }

    #[test]
    fn training_bag_removes_self() {
        let train = line_bag();
        let m = trained(1, &train);
        // Only the first example has k same-label others; B has none.
        let err = m.scores(&train, true).unwrap_err();
        assert!(matches!(err, ConformalError::NotEnoughNeighbours { .. }));
        let first = m.score_one(&[0.0], 0, Some(0)).unwrap();
        assert!((first - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn per_label_scores() {
        let m = trained(1, &line_bag());
        assert_eq!(m.score(&[2.0]).unwrap(), vec![1.0, 1.0]);
        let at_a = m.score(&[1.0]).unwrap();
        assert_eq!(at_a[0], 0.0);
    }

    #[test]
    fn single_label_bag_errors() {
        let bag = Bag::classification(["A", "B"], vec![vec![0.0], vec![1.0]], vec![0, 0]).unwrap();
        let m = trained(1, &bag);
        assert!(matches!(
            m.score(&[0.5]),
            Err(ConformalError::NotEnoughNeighbours { .. })
        ));
    }

    #[test]
    fn zero_denominator_sentinel() {
        let bag = Bag::classification(
            ["A", "B"],
            vec![vec![0.0], vec![5.0], vec![1.0]],
            vec![0, 0, 1],
        )
        .unwrap();
        let m = trained(1, &bag);
        // x = 1 sits on the B point: label A has d^{-A} = 0.
        let s = m.score(&[1.0]).unwrap();
        assert_eq!(s[0], super::super::INFINITE_SCORE);
        assert_eq!(s[1], 0.0);
    }

    #[test]
    fn untrained_errors() {
        let m = KnnMeasure::new(KnnConfig::new(1).unwrap());
        assert!(matches!(m.score(&[0.0]), Err(ConformalError::Untrained)));
        assert!(KnnConfig::new(0).is_err());
    }

    #[test]
    fn nearest_breaks_ties_by_index() {
        let mut n = Nearest::new(2);
        for (d, i) in [(1.0, 3), (1.0, 1), (0.5, 7), (1.0, 0)] {
            n.offer(d, i);
        }
        assert_eq!(n.items(), &[(0.5, 7), (1.0, 0)]);
        assert_eq!(n.seen(), 4);
    }

    fn regressor(k: usize, bag: &Bag) -> KnnRegressor {
        let mut r = KnnRegressor::new(KnnConfig::new(k).unwrap());
        r.train(bag).unwrap();
        r
    }

    #[test]
    fn regression_coeffs_on_training_bag() {
        let bag =
            Bag::regression(vec![vec![0.0], vec![1.0], vec![2.0]], vec![0.0, 1.0, 2.0]).unwrap();
        let r = regressor(1, &bag);
        let (a, b) = r.coeffs(&bag, true).unwrap();
        assert_eq!(a, vec![-1.0, 1.0, 1.0]);
        assert_eq!(b, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn regression_coeffs_constant_labels() {
        let bag = Bag::regression(vec![vec![0.0], vec![1.0], vec![4.0]], vec![3.0; 3]).unwrap();
        let (a, _) = regressor(2, &bag).coeffs(&bag, true).unwrap();
        assert_eq!(a, vec![0.0; 3]);
    }

    #[test]
    fn regression_coeffs_n() {
        let bag =
            Bag::regression(vec![vec![0.0], vec![10.0], vec![11.0]], vec![5.0, 1.0, 3.0]).unwrap();
        assert_eq!(regressor(1, &bag).coeffs_n(&[0.2]).unwrap(), (-5.0, 1.0));
        assert_eq!(regressor(2, &bag).coeffs_n(&[10.4]).unwrap(), (-2.0, 1.0));
        assert!(regressor(3, &bag).coeffs(&bag, true).is_err());
        let empty = KnnRegressor::new(KnnConfig::new(1).unwrap());
        assert!(empty.coeffs_n(&[0.0]).is_err());
    }
}
