use std::fmt;
use std::sync::Arc;

use super::NonconformityMeasure;
use crate::data::{Bag, LabelKind};
use crate::error::{ConformalError, Result};

/// An externally provided model producing one score per label (for example
/// the output layer of a neural network).
pub trait ScoreModel: Send + Sync {
    fn fit(&mut self, bag: &Bag) -> Result<()>;

    fn predict(&self, x: &[f64]) -> Vec<f64>;
}

/// Any `Fn(&[f64]) -> Vec<f64>` is a pre-trained model; `fit` is a no-op.
impl<F> ScoreModel for F
where
    F: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    fn fit(&mut self, _bag: &Bag) -> Result<()> {
        Ok(())
    }

    fn predict(&self, x: &[f64]) -> Vec<f64> {
        self(x)
    }
}

pub type CustomScorer = Arc<dyn Fn(&[f64], usize) -> f64 + Send + Sync>;

/// How model outputs `o` are turned into a nonconformity score for label `y`.
#[derive(Clone)]
pub enum Scorer {
    /// `Σ_{j≠y} o_j / (o_y + γ)`
    Sum,
    /// `max_{j≠y} o_j − o_y`
    Diff,
    /// `max_{j≠y} o_j / (o_y + γ)`
    Max,
    Custom(CustomScorer),
}

impl fmt::Debug for Scorer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scorer::Sum => f.write_str("Sum"),
            Scorer::Diff => f.write_str("Diff"),
            Scorer::Max => f.write_str("Max"),
            Scorer::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Scores one output vector. An empty "other labels" set counts as 0.
pub fn model_output_score(scorer: &Scorer, gamma: f64, o: &[f64], y: usize) -> Result<f64> {
    if y >= o.len() {
        return Err(ConformalError::InvalidInput(format!(
            "label index {y} outside model output of arity {}",
            o.len()
        )));
    }
    let others = o
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != y)
        .map(|(_, &v)| v);
    let max_other = others
        .clone()
        .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
    let denominator = || {
        let d = o[y] + gamma;
        if d == 0.0 {
            Err(ConformalError::InvalidInput(
                "model output for the label plus gamma is zero".into(),
            ))
        } else {
            Ok(d)
        }
    };
    match scorer {
        Scorer::Sum => Ok(others.sum::<f64>() / denominator()?),
        Scorer::Max => Ok(max_other.unwrap_or(0.0) / denominator()?),
        Scorer::Diff => Ok(max_other.unwrap_or(0.0) - o[y]),
        Scorer::Custom(f) => Ok(f(o, y)),
    }
}

/// Nonconformity measure over an external per-label scoring model.
#[derive(Clone)]
pub struct ModelOutputMeasure<S> {
    model: S,
    scorer: Scorer,
    gamma: f64,
    label_space: Vec<String>,
    trained: bool,
}

impl<S: ScoreModel> ModelOutputMeasure<S> {
    pub fn new(model: S, scorer: Scorer, gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(ConformalError::InvalidConfig(format!(
                "gamma must be a nonnegative real, got {gamma}"
            )));
        }
        Ok(ModelOutputMeasure {
            model,
            scorer,
            gamma,
            label_space: Vec::new(),
            trained: false,
        })
    }

    fn outputs(&self, x: &[f64]) -> Result<Vec<f64>> {
        let o = self.model.predict(x);
        if o.len() != self.label_space.len() {
            return Err(ConformalError::InvalidInput(format!(
                "model returned {} scores for {} labels",
                o.len(),
                self.label_space.len()
            )));
        }
        Ok(o)
    }
}

impl<S: ScoreModel> NonconformityMeasure for ModelOutputMeasure<S> {
    fn train(&mut self, bag: &Bag) -> Result<()> {
        bag.require(LabelKind::Class)?;
        self.model.fit(bag)?;
        self.label_space = bag.label_space().to_vec();
        self.trained = true;
        Ok(())
    }

    fn scores(&self, bag: &Bag, _is_training_bag: bool) -> Result<Vec<f64>> {
        if !self.trained {
            return Err(ConformalError::Untrained);
        }
        let bag = bag.relabel_to(&self.label_space)?;
        let ys = bag.classes()?;
        bag.iter()
            .zip(ys)
            .map(|(e, y)| model_output_score(&self.scorer, self.gamma, &self.outputs(&e.x)?, y))
            .collect()
    }

    fn score(&self, x: &[f64]) -> Result<Vec<f64>> {
        if !self.trained {
            return Err(ConformalError::Untrained);
        }
        let o = self.outputs(x)?;
        (0..o.len())
            .map(|y| model_output_score(&self.scorer, self.gamma, &o, y))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const O: [f64; 3] = [0.7, 0.2, 0.1];

    #[test]
    fn presets() {
        let diff = model_output_score(&Scorer::Diff, 0.0, &O, 0).unwrap();
        assert!((diff - (-0.5)).abs() < 1e-15);
        let sum = model_output_score(&Scorer::Sum, 0.0, &O, 0).unwrap();
        assert!((sum - 0.3 / 0.7).abs() < 1e-15);
        let max = model_output_score(&Scorer::Max, 0.1, &O, 0).unwrap();
        assert!((max - 0.2 / 0.8).abs() < 1e-15);
    }

    #[test]
    fn one_hot_diff_is_negative_hot_value() {
        let o = [0.0, 0.9, 0.0];
        assert_eq!(model_output_score(&Scorer::Diff, 0.0, &o, 1).unwrap(), -0.9);
    }

    #[test]
    fn zero_denominator_errors() {
        let o = [1.0, 0.0];
        assert!(model_output_score(&Scorer::Sum, 0.0, &o, 1).is_err());
        assert!(model_output_score(&Scorer::Max, 0.0, &o, 1).is_err());
        assert!(model_output_score(&Scorer::Sum, 0.5, &o, 1).is_ok());
    }

    #[test]
    fn custom_scorer_and_measure() {
        let scorer = Scorer::Custom(Arc::new(|o: &[f64], y: usize| -o[y]));
        let model = |x: &[f64]| vec![x[0], 1.0 - x[0]];
        let mut m = ModelOutputMeasure::new(model, scorer, 0.0).unwrap();
        let bag = Bag::classification(["a", "b"], vec![vec![0.25]], vec![1]).unwrap();
        m.train(&bag).unwrap();
        assert_eq!(m.score(&[0.25]).unwrap(), vec![-0.25, -0.75]);
        assert_eq!(m.scores(&bag, true).unwrap(), vec![-0.75]);
        assert!(ModelOutputMeasure::new(|_: &[f64]| vec![], Scorer::Sum, -1.0).is_err());
    }
}
