use serde::Serialize;

use crate::error::{ConformalError, Result};

/// Score function `α(y) = |a + b·y|` of one example.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScoreLine {
    pub a: f64,
    pub b: f64,
}

impl ScoreLine {
    /// Builds a line with `b ≥ 0`, negating both coefficients if needed.
    /// `|a + b·y|` is unchanged.
    pub fn normalized(a: f64, b: f64) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() {
            return Err(ConformalError::InvalidInput(format!(
                "score line coefficients must be finite, got a = {a}, b = {b}"
            )));
        }
        Ok(if b < 0.0 {
            ScoreLine { a: -a, b: -b }
        } else {
            ScoreLine { a, b: b + 0.0 }
        })
    }

    pub fn eval(&self, y: f64) -> f64 {
        (self.a + self.b * y).abs()
    }
}

/// Set of `y` where an example is at least as nonconforming as the new one:
/// `{y : |a_i + b_i·y| ≥ |a_new + b_new·y|}`. Finite endpoints are closed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Region {
    Interval(f64, f64),
    /// `(−∞, u] ∪ [v, ∞)` with `u < v`.
    TwoRays(f64, f64),
    RayUp(f64),
    RayDown(f64),
    Full,
    Empty,
}

impl Region {
    pub fn contains(&self, y: f64) -> bool {
        match *self {
            Region::Interval(u, v) => u <= y && y <= v,
            Region::TwoRays(u, v) => y <= u || y >= v,
            Region::RayUp(u) => y >= u,
            Region::RayDown(u) => y <= u,
            Region::Full => true,
            Region::Empty => false,
        }
    }

    /// Finite endpoints, in ascending order.
    pub fn endpoints(&self) -> Vec<f64> {
        match *self {
            Region::Interval(u, v) | Region::TwoRays(u, v) => {
                if u == v {
                    vec![u]
                } else {
                    vec![u, v]
                }
            }
            Region::RayUp(u) | Region::RayDown(u) => vec![u],
            Region::Full | Region::Empty => Vec::new(),
        }
    }
}

/// Maps `-0.0` to `0.0` so equal breakpoints compare equal bitwise.
fn canonical(v: f64) -> f64 {
    v + 0.0
}

/// Case analysis of [`Region`] for a bag line against the new example's
/// line. Both lines must be sign-normalized.
pub fn region(line: ScoreLine, new: ScoreLine) -> Result<Region> {
    if line.b < 0.0 || new.b < 0.0 {
        return Err(ConformalError::InvalidInput(
            "score lines must be sign-normalized (b ≥ 0)".into(),
        ));
    }
    let (ai, bi, an, bn) = (line.a, line.b, new.a, new.b);
    if bn != bi {
        let r1 = canonical(-(ai - an) / (bi - bn));
        let r2 = canonical(-(ai + an) / (bi + bn));
        let (u, v) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        return Ok(if bn > bi {
            Region::Interval(u, v)
        } else if u == v {
            Region::Full
        } else {
            Region::TwoRays(u, v)
        });
    }
    if bi > 0.0 {
        let u = canonical(-(ai + an) / (2.0 * bi));
        return Ok(if an < ai {
            Region::RayUp(u)
        } else if an > ai {
            Region::RayDown(u)
        } else {
            Region::Full
        });
    }
    Ok(if an.abs() <= ai.abs() {
        Region::Full
    } else {
        Region::Empty
    })
}

/// A distinct breakpoint with the changes it causes while sweeping left to
/// right: `interval_delta` is the count on the open interval just after the
/// breakpoint minus the count just before it; `point_delta` is the count at
/// this breakpoint minus the count at the previous one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Breakpoint {
    pub value: f64,
    pub interval_delta: i64,
    pub point_delta: i64,
}

/// Region counts along the real line: `interval_counts[q]` covers the open
/// interval between breakpoints `q − 1` and `q` (the outer two are rays),
/// `point_counts[j]` the breakpoint `j` itself.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweep {
    pub breakpoints: Vec<Breakpoint>,
    pub interval_counts: Vec<usize>,
    pub point_counts: Vec<usize>,
    pub n: usize,
}

impl Sweep {
    /// Sorts the finite endpoints of all regions and accumulates the counts
    /// from per-breakpoint deltas in one pass.
    pub fn new(regions: &[Region]) -> Self {
        let mut values: Vec<f64> = regions.iter().flat_map(Region::endpoints).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        let m = values.len();
        let index = |v: f64| {
            values
                .binary_search_by(|s| s.total_cmp(&v))
                .expect("endpoint was collected")
        };
        // d_interval[q] = N_q − N_{q−1}; d_point[j] = M_j − M_{j−1}.
        let mut d_interval = vec![0i64; m + 2];
        let mut d_point = vec![0i64; m + 1];
        let mut add = |intervals: (usize, usize), points: Option<(usize, usize)>| {
            let (lo, hi) = intervals;
            if lo <= hi {
                d_interval[lo] += 1;
                d_interval[hi + 1] -= 1;
            }
            if let Some((lo, hi)) = points {
                d_point[lo] += 1;
                d_point[hi + 1] -= 1;
            }
        };
        for r in regions {
            match *r {
                Region::Interval(u, v) => {
                    let (pu, pv) = (index(u), index(v));
                    add((pu + 1, pv), Some((pu, pv)));
                }
                Region::RayDown(u) => {
                    let pu = index(u);
                    add((0, pu), Some((0, pu)));
                }
                Region::RayUp(u) => {
                    let pu = index(u);
                    add((pu + 1, m), Some((pu, m - 1)));
                }
                Region::TwoRays(u, v) => {
                    let (pu, pv) = (index(u), index(v));
                    add((0, pu), Some((0, pu)));
                    add((pv + 1, m), Some((pv, m - 1)));
                }
                Region::Full => add((0, m), (m > 0).then(|| (0, m - 1))),
                Region::Empty => {}
            }
        }
        let mut interval_counts = Vec::with_capacity(m + 1);
        let mut acc = 0i64;
        for d in &d_interval[..=m] {
            acc += d;
            interval_counts.push(acc as usize);
        }
        let mut point_counts = Vec::with_capacity(m);
        let mut acc = 0i64;
        for d in &d_point[..m] {
            acc += d;
            point_counts.push(acc as usize);
        }
        let breakpoints = values
            .iter()
            .enumerate()
            .map(|(j, &value)| Breakpoint {
                value,
                interval_delta: d_interval[j + 1],
                point_delta: d_point[j],
            })
            .collect();
        Sweep {
            breakpoints,
            interval_counts,
            point_counts,
            n: regions.len(),
        }
    }

    /// Union of the pieces whose p-value exceeds `epsilon`, as sorted
    /// disjoint closed intervals. The p-value of a piece with count `c` is
    /// `c / (n + 1)`, or `(c + 1) / (n + 1)` when the new example counts
    /// itself.
    pub fn union(&self, epsilon: f64, include_test_in_count: bool) -> Vec<Interval> {
        let extra = usize::from(include_test_in_count);
        let denominator = (self.n + 1) as f64;
        let keep = |c: usize| (c + extra) as f64 / denominator > epsilon;
        let m = self.breakpoints.len();
        let s = |j: usize| self.breakpoints[j].value;
        // Pieces in order: interval 0, point 0, interval 1, ..., interval m.
        let mut out = Vec::new();
        let mut open: Option<f64> = None;
        let mut last_high = f64::NEG_INFINITY;
        for piece in 0..(2 * m + 1) {
            let q = piece / 2;
            let (included, low, high) = if piece % 2 == 0 {
                let low = if q == 0 { f64::NEG_INFINITY } else { s(q - 1) };
                let high = if q == m { f64::INFINITY } else { s(q) };
                (keep(self.interval_counts[q]), low, high)
            } else {
                (keep(self.point_counts[q]), s(q), s(q))
            };
            if included {
                open.get_or_insert(low);
                last_high = high;
            } else if let Some(low) = open.take() {
                out.push(Interval {
                    low,
                    high: last_high,
                });
            }
        }
        if let Some(low) = open {
            out.push(Interval {
                low,
                high: last_high,
            });
        }
        out
    }
}

/// Closed interval over the extended reals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

impl Interval {
    pub fn contains(&self, y: f64) -> bool {
        self.low <= y && y <= self.high
    }

    pub fn is_bounded(&self) -> bool {
        self.low.is_finite() && self.high.is_finite()
    }

    pub fn width(&self) -> f64 {
        self.high - self.low
    }
}

/// Smallest single interval containing every piece of `union`.
pub fn convex_hull(union: &[Interval]) -> Vec<Interval> {
    match (union.first(), union.last()) {
        (Some(first), Some(last)) => vec![Interval {
            low: first.low,
            high: last.high,
        }],
        _ => Vec::new(),
    }
}
