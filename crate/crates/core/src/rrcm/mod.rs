//! Ridge regression confidence machine: conformal prediction intervals for
//! regression from score lines `α_i(y) = |a_i + b_i·y|`.
//!
//! Each bag line and the new example's line define the region of `y` where
//! the bag example is at least as nonconforming as the new one. The region
//! endpoints are sorted once and a single sweep over per-breakpoint deltas
//! yields the region counts on every open interval and at every breakpoint,
//! giving `O(n log n)` per prediction.

mod region;

pub use self::region::{convex_hull, region, Breakpoint, Interval, Region, ScoreLine, Sweep};

use serde::Serialize;

use crate::data::{Bag, LabelKind};
use crate::error::{ConformalError, Result};
use crate::ncm::RegressionCoefficientProvider;
use crate::par;
use crate::prediction::Epsilons;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RrcmConfig {
    pub epsilons: Epsilons,
    /// Return one interval per level instead of a union with holes.
    pub convex_hull: bool,
    /// Count the new example in its own p-value numerator. Off by default:
    /// a piece is kept when `N / (n + 1) > ε`.
    pub include_test_in_count: bool,
}

impl RrcmConfig {
    pub fn new(epsilons: Epsilons) -> Self {
        RrcmConfig {
            epsilons,
            convex_hull: true,
            include_test_in_count: false,
        }
    }

    pub fn convex_hull(mut self, convex_hull: bool) -> Self {
        self.convex_hull = convex_hull;
        self
    }

    pub fn include_test_in_count(mut self, include: bool) -> Self {
        self.include_test_in_count = include;
        self
    }
}

/// Prediction unions, one per configured significance level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionIntervals {
    pub per_epsilon: Vec<Vec<Interval>>,
}

impl PredictionIntervals {
    pub fn contains(&self, level: usize, y: f64) -> bool {
        self.per_epsilon[level].iter().any(|i| i.contains(y))
    }
}

/// Intervals for one new line against the bag lines.
pub fn predict_lines(
    cfg: &RrcmConfig,
    lines: &[ScoreLine],
    new: ScoreLine,
) -> Result<PredictionIntervals> {
    let regions = lines
        .iter()
        .map(|&l| region(l, new))
        .collect::<Result<Vec<_>>>()?;
    let sweep = Sweep::new(&regions);
    let per_epsilon = cfg
        .epsilons
        .as_slice()
        .iter()
        .map(|&e| {
            let union = sweep.union(e, cfg.include_test_in_count);
            if cfg.convex_hull {
                convex_hull(&union)
            } else {
                union
            }
        })
        .collect();
    Ok(PredictionIntervals { per_epsilon })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntervalStats {
    pub epsilon: f64,
    /// Fraction of rows whose true target lies outside the union.
    pub miss_rate: f64,
    /// Mean total length of the bounded pieces.
    pub mean_width: f64,
    /// Fraction of rows whose union contains a ray.
    pub unbounded_rate: f64,
    pub empty_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionReport {
    pub per_epsilon: Vec<IntervalStats>,
    pub trials: usize,
}

pub fn regression_report(
    epsilons: &Epsilons,
    predictions: &[PredictionIntervals],
    truths: &[f64],
) -> Result<RegressionReport> {
    if predictions.len() != truths.len() {
        return Err(ConformalError::InvalidInput(format!(
            "{} predictions but {} targets",
            predictions.len(),
            truths.len()
        )));
    }
    let n = predictions.len();
    let rate = |v: f64| if n == 0 { 0.0 } else { v / n as f64 };
    let per_epsilon = epsilons
        .as_slice()
        .iter()
        .enumerate()
        .map(|(level, &epsilon)| {
            let mut misses = 0.0;
            let mut width = 0.0;
            let mut unbounded = 0.0;
            let mut empty = 0.0;
            for (p, &y) in predictions.iter().zip(truths) {
                let union = &p.per_epsilon[level];
                misses += f64::from(u8::from(!p.contains(level, y)));
                width += union
                    .iter()
                    .filter(|i| i.is_bounded())
                    .map(Interval::width)
                    .sum::<f64>();
                unbounded += f64::from(u8::from(union.iter().any(|i| !i.is_bounded())));
                empty += f64::from(u8::from(union.is_empty()));
            }
            IntervalStats {
                epsilon,
                miss_rate: rate(misses),
                mean_width: rate(width),
                unbounded_rate: rate(unbounded),
                empty_rate: rate(empty),
            }
        })
        .collect();
    Ok(RegressionReport {
        per_epsilon,
        trials: n,
    })
}

/// RRCM over a regression coefficient provider.
#[derive(Debug, Clone)]
pub struct Rrcm<P> {
    cfg: RrcmConfig,
    provider: P,
    bag: Option<Bag>,
    lines: Vec<ScoreLine>,
}

impl<P: RegressionCoefficientProvider> Rrcm<P> {
    pub fn new(cfg: RrcmConfig, provider: P) -> Self {
        Rrcm {
            cfg,
            provider,
            bag: None,
            lines: Vec::new(),
        }
    }

    pub fn config(&self) -> &RrcmConfig {
        &self.cfg
    }

    pub fn bag(&self) -> Option<&Bag> {
        self.bag.as_ref()
    }

    /// Sign-normalized score lines of the bag.
    pub fn lines(&self) -> &[ScoreLine] {
        &self.lines
    }

    /// Trains on `bag`, or on the held bag with `bag` appended when
    /// `override_bag` is false.
    pub fn train(&mut self, bag: &Bag, override_bag: bool) -> Result<()> {
        bag.require(LabelKind::Real)?;
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
        self.provider.train(&full)?;
        let (a, b) = self.provider.coeffs(&full, true)?;
        self.lines = a
            .into_iter()
            .zip(b)
            .map(|(a, b)| ScoreLine::normalized(a, b))
            .collect::<Result<_>>()?;
        self.bag = Some(full);
        Ok(())
    }

    pub fn predict(&self, xs: &[Vec<f64>]) -> Result<Vec<PredictionIntervals>> {
        let bag = self.bag.as_ref().ok_or(ConformalError::Untrained)?;
        crate::cp::check_dims(bag, xs)?;
        par::try_map_range(xs.len(), |r| {
            let (a, b) = self.provider.coeffs_n(&xs[r])?;
            predict_lines(&self.cfg, &self.lines, ScoreLine::normalized(a, b)?)
        })
    }

    pub fn score(&self, test: &Bag) -> Result<RegressionReport> {
        if test.is_empty() {
            return Err(ConformalError::EmptyBag);
        }
        let predictions = self.predict(&test.observations())?;
        regression_report(&self.cfg.epsilons, &predictions, &test.targets()?)
    }

    /// Predicts each stream element, then appends it and retrains.
    pub fn score_online(&mut self, stream: &Bag) -> Result<RegressionReport> {
        if self.bag.is_none() {
            return Err(ConformalError::Untrained);
        }
        let truths = stream.targets()?;
        let mut predictions = Vec::with_capacity(stream.len());
        for (i, e) in stream.iter().enumerate() {
            let p = self.predict(std::slice::from_ref(&e.x))?;
            predictions.extend(p);
            self.train(&stream.select(&[i]), false)?;
        }
        regression_report(&self.cfg.epsilons, &predictions, &truths)
    }
}
