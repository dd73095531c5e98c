//! Dataset model shared by every predictor.
//!
//! A [`Bag`] is a multiset of [`Example`]s. It keeps insertion order so that
//! smoothing and reports are reproducible, but nothing downstream is allowed
//! to depend on that order: predictors are checked for permutation
//! invariance.
//!
//! Class labels are stored as indices into the bag's ordered label space.
//! Bags with different label spaces are reconciled by symbol when appended.

mod csv;

pub use self::csv::{load_csv, write_csv, ColumnSelector};

use rand::seq::SliceRandom;
use serde::Serialize;

use crate::error::{ConformalError, Result};
use crate::rng::SeededRng;

/// Label of an example: a class index into the owning bag's label space, or
/// a real-valued regression target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Label {
    Class(usize),
    Real(f64),
}

impl Label {
    pub fn as_class(&self) -> Option<usize> {
        match *self {
            Label::Class(c) => Some(c),
            Label::Real(_) => None,
        }
    }

    pub fn as_real(&self) -> Option<f64> {
        match *self {
            Label::Real(v) => Some(v),
            Label::Class(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub x: Vec<f64>,
    pub y: Label,
}

impl Example {
    pub fn class(x: Vec<f64>, y: usize) -> Self {
        Example {
            x,
            y: Label::Class(y),
        }
    }

    pub fn real(x: Vec<f64>, y: f64) -> Self {
        Example {
            x,
            y: Label::Real(y),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelKind {
    Class,
    Real,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bag {
    kind: LabelKind,
    label_space: Vec<String>,
    examples: Vec<Example>,
    dim: Option<usize>,
}

impl Bag {
    /// Empty classification bag over `label_space`.
    pub fn with_label_space<S: Into<String>>(
        label_space: impl IntoIterator<Item = S>,
    ) -> Result<Self> {
        let label_space: Vec<String> = label_space.into_iter().map(Into::into).collect();
        for (i, l) in label_space.iter().enumerate() {
            if label_space[..i].contains(l) {
                return Err(ConformalError::InvalidInput(format!(
                    "duplicate label `{l}` in label space"
                )));
            }
        }
        Ok(Bag {
            kind: LabelKind::Class,
            label_space,
            examples: Vec::new(),
            dim: None,
        })
    }

    /// Empty regression bag.
    pub fn regression_empty() -> Self {
        Bag {
            kind: LabelKind::Real,
            label_space: Vec::new(),
            examples: Vec::new(),
            dim: None,
        }
    }

    /// Classification bag from observations and label indices.
    pub fn classification<S: Into<String>>(
        label_space: impl IntoIterator<Item = S>,
        xs: Vec<Vec<f64>>,
        ys: Vec<usize>,
    ) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(ConformalError::InvalidInput(format!(
                "{} observations but {} labels",
                xs.len(),
                ys.len()
            )));
        }
        let mut bag = Bag::with_label_space(label_space)?;
        for (x, y) in xs.into_iter().zip(ys) {
            bag.push(Example::class(x, y))?;
        }
        Ok(bag)
    }

    /// Classification bag from label symbols; the label space is the sorted
    /// set of distinct symbols.
    pub fn from_symbols<S: AsRef<str>>(xs: Vec<Vec<f64>>, ys: &[S]) -> Result<Self> {
        let mut space: Vec<String> = ys.iter().map(|s| s.as_ref().to_string()).collect();
        space.sort();
        space.dedup();
        let idx = ys
            .iter()
            .map(|s| space.iter().position(|l| l == s.as_ref()).unwrap())
            .collect();
        Bag::classification(space, xs, idx)
    }

    pub fn regression(xs: Vec<Vec<f64>>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(ConformalError::InvalidInput(format!(
                "{} observations but {} targets",
                xs.len(),
                ys.len()
            )));
        }
        let mut bag = Bag::regression_empty();
        for (x, y) in xs.into_iter().zip(ys) {
            bag.push(Example::real(x, y))?;
        }
        Ok(bag)
    }

    /// An empty bag sharing this bag's kind and label space.
    pub fn empty_like(&self) -> Self {
        Bag {
            kind: self.kind,
            label_space: self.label_space.clone(),
            examples: Vec::new(),
            dim: self.dim,
        }
    }

    pub fn kind(&self) -> LabelKind {
        self.kind
    }

    pub fn is_regression(&self) -> bool {
        self.kind == LabelKind::Real
    }

    pub fn label_space(&self) -> &[String] {
        &self.label_space
    }

    pub fn n_labels(&self) -> usize {
        self.label_space.len()
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Feature dimension, once the first example is known.
    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn get(&self, i: usize) -> &Example {
        &self.examples[i]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Example> {
        self.examples.iter()
    }

    pub fn observations(&self) -> Vec<Vec<f64>> {
        self.examples.iter().map(|e| e.x.clone()).collect()
    }

    /// Class indices of every example. Errors on a regression bag.
    pub fn classes(&self) -> Result<Vec<usize>> {
        self.require(LabelKind::Class)?;
        Ok(self
            .examples
            .iter()
            .map(|e| e.y.as_class().expect("class bag"))
            .collect())
    }

    /// Regression targets of every example. Errors on a classification bag.
    pub fn targets(&self) -> Result<Vec<f64>> {
        self.require(LabelKind::Real)?;
        Ok(self
            .examples
            .iter()
            .map(|e| e.y.as_real().expect("real bag"))
            .collect())
    }

    pub fn require(&self, kind: LabelKind) -> Result<()> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(ConformalError::WrongLabelKind {
                expected: match kind {
                    LabelKind::Class => "classification",
                    LabelKind::Real => "regression",
                },
            })
        }
    }

    pub fn label_index(&self, symbol: &str) -> Option<usize> {
        self.label_space.iter().position(|l| l == symbol)
    }

    pub fn push(&mut self, example: Example) -> Result<()> {
        if let Some(&bad) = example.x.iter().find(|v| !v.is_finite()) {
            return Err(ConformalError::InvalidInput(format!(
                "non-finite feature value {bad}"
            )));
        }
        if let Some(d) = self.dim {
            if d != example.x.len() {
                return Err(ConformalError::DimensionMismatch {
                    expected: d,
                    found: example.x.len(),
                });
            }
        }
        match (self.kind, example.y) {
            (LabelKind::Class, Label::Class(c)) => {
                if c >= self.label_space.len() {
                    return Err(ConformalError::InvalidInput(format!(
                        "class index {c} outside label space of size {}",
                        self.label_space.len()
                    )));
                }
            }
            (LabelKind::Real, Label::Real(v)) => {
                if !v.is_finite() {
                    return Err(ConformalError::InvalidInput(format!(
                        "non-finite regression target {v}"
                    )));
                }
            }
            (kind, _) => {
                return Err(ConformalError::WrongLabelKind {
                    expected: match kind {
                        LabelKind::Class => "classification",
                        LabelKind::Real => "regression",
                    },
                })
            }
        }
        self.dim = Some(example.x.len());
        self.examples.push(example);
        Ok(())
    }

    /// Appends every example of `other`. Class labels are matched by
    /// symbol; symbols unknown to `self` are added at the end of its label
    /// space.
    pub fn append(&mut self, other: &Bag) -> Result<()> {
        if other.kind != self.kind {
            return Err(ConformalError::WrongLabelKind {
                expected: match self.kind {
                    LabelKind::Class => "classification",
                    LabelKind::Real => "regression",
                },
            });
        }
        let remap: Vec<usize> = other
            .label_space
            .iter()
            .map(|s| match self.label_index(s) {
                Some(i) => i,
                None => {
                    self.label_space.push(s.clone());
                    self.label_space.len() - 1
                }
            })
            .collect();
        for e in &other.examples {
            let y = match e.y {
                Label::Class(c) => Label::Class(remap[c]),
                real => real,
            };
            self.push(Example { x: e.x.clone(), y })?;
        }
        Ok(())
    }

    /// Re-expresses this bag's class labels in `label_space` (matching by
    /// symbol). Fails if a used label is missing from `label_space`.
    pub fn relabel_to(&self, label_space: &[String]) -> Result<Bag> {
        if self.kind == LabelKind::Real || self.label_space == label_space {
            return Ok(self.clone());
        }
        let mut out = Bag::with_label_space(label_space.iter().cloned())?;
        for e in &self.examples {
            let c = e.y.as_class().expect("class bag");
            let symbol = &self.label_space[c];
            let mapped = label_space
                .iter()
                .position(|l| l == symbol)
                .ok_or_else(|| ConformalError::UnknownLabel(symbol.clone()))?;
            out.push(Example::class(e.x.clone(), mapped))?;
        }
        Ok(out)
    }

    /// Sub-bag of the given indices, in the given order.
    pub fn select(&self, indices: &[usize]) -> Bag {
        Bag {
            kind: self.kind,
            label_space: self.label_space.clone(),
            examples: indices.iter().map(|&i| self.examples[i].clone()).collect(),
            dim: self.dim,
        }
    }
}

impl<'a> IntoIterator for &'a Bag {
    type Item = &'a Example;
    type IntoIter = std::slice::Iter<'a, Example>;

    fn into_iter(self) -> Self::IntoIter {
        self.examples.iter()
    }
}

/// How to cut a bag into a training part and a held-out part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub shuffle_seed: u64,
}

impl SplitSpec {
    pub fn new(train_fraction: f64, shuffle_seed: u64) -> Result<Self> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(ConformalError::InvalidConfig(format!(
                "train fraction must lie in (0, 1), got {train_fraction}"
            )));
        }
        Ok(SplitSpec {
            train_fraction,
            shuffle_seed,
        })
    }

    /// Size of the training part: ⌈n · fraction⌉, ignoring float noise in the
    /// product (0.7 · 10 is 7, not 8).
    pub fn train_size(&self, n: usize) -> usize {
        let exact = n as f64 * self.train_fraction;
        let nearest = exact.round();
        let size = if (exact - nearest).abs() < 1e-9 {
            nearest
        } else {
            exact.ceil()
        };
        (size as usize).min(n)
    }
}

/// Seeded shuffle followed by a cut at [`SplitSpec::train_size`]. Both parts
/// keep the parent label space.
pub fn split(bag: &Bag, spec: &SplitSpec) -> Result<(Bag, Bag)> {
    if bag.is_empty() {
        return Err(ConformalError::EmptyBag);
    }
    SplitSpec::new(spec.train_fraction, spec.shuffle_seed)?;
    let mut order: Vec<usize> = (0..bag.len()).collect();
    let mut rng = SeededRng::new(spec.shuffle_seed);
    order.shuffle(&mut rng);
    let cut = spec.train_size(bag.len());
    Ok((bag.select(&order[..cut]), bag.select(&order[cut..])))
}
