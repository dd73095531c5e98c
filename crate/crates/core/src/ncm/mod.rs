//! Nonconformity measures.
//!
//! Classification measures implement [`NonconformityMeasure`]; regression
//! coefficient providers for the RRCM implement
//! [`RegressionCoefficientProvider`]. Larger scores always mean "stranger".

mod cart;
pub(crate) mod knn;
mod model_output;

pub use self::cart::{CartConfig, CartMeasure, DecisionTree, TreeNode};
pub use self::knn::{KnnConfig, KnnMeasure, KnnRegressor};
pub use self::model_output::{model_output_score, ModelOutputMeasure, ScoreModel, Scorer};

use crate::data::Bag;
use crate::error::Result;

/// Sentinel for an unbounded nonconformity ratio.
pub const INFINITE_SCORE: f64 = f64::MAX;

/// A trainable classification scorer.
///
/// `scores` returns one value per bag element. When `is_training_bag` is
/// true the bag is the one passed to `train`, and a measure may leave each
/// example out of its own reference set. `score` scores a new observation
/// under every label of the training label space, in label-space order.
pub trait NonconformityMeasure: Send + Sync {
    fn train(&mut self, bag: &Bag) -> Result<()>;

    fn scores(&self, bag: &Bag, is_training_bag: bool) -> Result<Vec<f64>>;

    fn score(&self, x: &[f64]) -> Result<Vec<f64>>;
}

/// Supplies the coefficients of the score lines `|a + b·y|` used by the
/// RRCM.
pub trait RegressionCoefficientProvider: Send + Sync {
    fn train(&mut self, bag: &Bag) -> Result<()>;

    /// `(a, b)` for every bag element.
    fn coeffs(&self, bag: &Bag, is_training_bag: bool) -> Result<(Vec<f64>, Vec<f64>)>;

    /// `(a, b)` for a new observation whose label is the unknown `y`.
    fn coeffs_n(&self, x: &[f64]) -> Result<(f64, f64)>;
}

/// Nonconformity ratio with the zero-denominator conventions: `0/0 = 0` and
/// `x/0 = INFINITE_SCORE`.
pub(crate) fn ratio(numerator: f64, denominator: f64) -> f64 {
    if denominator == 0.0 {
        if numerator == 0.0 {
            0.0
        } else {
            INFINITE_SCORE
        }
    } else {
        numerator / denominator
    }
}
