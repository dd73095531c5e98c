//! Parsers for the `--ncm`, `--base` and `--taxonomy` spec strings.

use std::fmt;
use std::str::FromStr;

use clap::ValueEnum;
use conformal::meta::{BaseClassifier, CartClassifier, KnnClassifier};
use conformal::ncm::{CartConfig, CartMeasure, KnnConfig, KnnMeasure, NonconformityMeasure};
use conformal::{Bag, Result};
use serde::Serialize;

/// `knn[:k=N]` or `cart[:max_depth=D,min_leaf=L]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelSpec {
    Knn { k: usize },
    Cart { max_depth: usize, min_leaf: usize },
}

impl ModelSpec {
    pub fn knn_config(&self) -> Option<KnnConfig> {
        match *self {
            ModelSpec::Knn { k } => Some(KnnConfig::new(k).expect("k validated on parse")),
            ModelSpec::Cart { .. } => None,
        }
    }

    pub fn measure(&self) -> Measure {
        match *self {
            ModelSpec::Knn { k } => Measure::Knn(KnnMeasure::new(
                KnnConfig::new(k).expect("k validated on parse"),
            )),
            ModelSpec::Cart {
                max_depth,
                min_leaf,
            } => Measure::Cart(CartMeasure::new(
                CartConfig::new(max_depth, min_leaf).expect("validated on parse"),
            )),
        }
    }

    pub fn classifier(&self) -> Base {
        match *self {
            ModelSpec::Knn { k } => Base::Knn(KnnClassifier::new(
                KnnConfig::new(k).expect("k validated on parse"),
            )),
            ModelSpec::Cart {
                max_depth,
                min_leaf,
            } => Base::Cart(CartClassifier::new(
                CartConfig::new(max_depth, min_leaf).expect("validated on parse"),
            )),
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::Knn { k } => write!(f, "knn:k={k}"),
            ModelSpec::Cart {
                max_depth,
                min_leaf,
            } => write!(f, "cart:max_depth={max_depth},min_leaf={min_leaf}"),
        }
    }
}

impl Serialize for ModelSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

fn parse_params(
    params: &str,
    allowed: &[&str],
) -> std::result::Result<Vec<(String, usize)>, String> {
    if params.is_empty() {
        return Ok(Vec::new());
    }
    params
        .split(',')
        .map(|kv| {
            let (key, value) = kv
                .split_once('=')
                .ok_or_else(|| format!("expected key=value, got `{kv}`"))?;
            let key = key.trim();
            if !allowed.contains(&key) {
                return Err(format!(
                    "unknown parameter `{key}` (expected one of: {})",
                    allowed.join(", ")
                ));
            }
            let value: usize = value
                .trim()
                .parse()
                .map_err(|_| format!("`{key}` needs a nonnegative integer, got `{value}`"))?;
            if value == 0 {
                return Err(format!("`{key}` must be at least 1"));
            }
            Ok((key.to_string(), value))
        })
        .collect()
}

impl FromStr for ModelSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (name, params) = s.split_once(':').unwrap_or((s, ""));
        match name.trim() {
            "knn" => {
                let mut k = 1;
                for (_, v) in parse_params(params, &["k"])? {
                    k = v;
                }
                Ok(ModelSpec::Knn { k })
            }
            "cart" => {
                let defaults = CartConfig::default();
                let (mut max_depth, mut min_leaf) = (defaults.max_depth, defaults.min_leaf);
                for (key, v) in parse_params(params, &["max_depth", "min_leaf"])? {
                    if key == "max_depth" {
                        max_depth = v;
                    } else {
                        min_leaf = v;
                    }
                }
                Ok(ModelSpec::Cart {
                    max_depth,
                    min_leaf,
                })
            }
            other => Err(format!("unknown model `{other}` (expected knn or cart)")),
        }
    }
}

/// Nonconformity measures selectable from the command line.
#[derive(Debug, Clone)]
pub enum Measure {
    Knn(KnnMeasure),
    Cart(CartMeasure),
}

impl NonconformityMeasure for Measure {
    fn train(&mut self, bag: &Bag) -> Result<()> {
        match self {
            Measure::Knn(m) => m.train(bag),
            Measure::Cart(m) => m.train(bag),
        }
    }

    fn scores(&self, bag: &Bag, is_training_bag: bool) -> Result<Vec<f64>> {
        match self {
            Measure::Knn(m) => m.scores(bag, is_training_bag),
            Measure::Cart(m) => m.scores(bag, is_training_bag),
        }
    }

    fn score(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Measure::Knn(m) => m.score(x),
            Measure::Cart(m) => m.score(x),
        }
    }
}

/// Base classifiers selectable from the command line.
#[derive(Debug, Clone)]
pub enum Base {
    Knn(KnnClassifier),
    Cart(CartClassifier),
}

impl BaseClassifier for Base {
    fn train(&mut self, bag: &Bag) -> Result<()> {
        match self {
            Base::Knn(b) => b.train(bag),
            Base::Cart(b) => b.train(bag),
        }
    }

    fn predict(&self, xs: &[Vec<f64>]) -> Result<Vec<usize>> {
        match self {
            Base::Knn(b) => b.predict(xs),
            Base::Cart(b) => b.predict(xs),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TaxonomySpec {
    /// No taxonomy: one category.
    None,
    /// Constant taxonomy: one category, through the Mondrian path.
    Constant,
    /// Label-conditional taxonomy.
    Label,
    /// Label of the nearest neighbour (Venn only).
    Knn1,
}
