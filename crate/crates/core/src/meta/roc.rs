use serde::Serialize;

use crate::error::{ConformalError, Result};

/// One operating point of the score-ratio classifier. `score_ratio` is the
/// threshold `T` that realizes the point under the strict rule
/// `ratio > T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    pub score_ratio: f64,
}

/// `p_p / p_n`, with `p_p = 0 ↦ 0` and `p_n = 0 ↦ +∞`.
pub fn score_ratio(p_p: f64, p_n: f64) -> f64 {
    if p_p == 0.0 {
        0.0
    } else if p_n == 0.0 {
        f64::INFINITY
    } else {
        p_p / p_n
    }
}

/// ROC staircase of `(ratio, positive)` pairs: one point per distinct ratio,
/// from the highest down, treating `ratio ≥ threshold` as positive. Starts at
/// `(0, 0)` and ends at `(1, 1)`.
pub fn roc_points(scored: &[(f64, bool)]) -> Result<Vec<RocPoint>> {
    let n_pos = scored.iter().filter(|s| s.1).count();
    let n_neg = scored.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(ConformalError::InvalidInput(
            "ROC analysis needs both positive and negative examples".into(),
        ));
    }
    if let Some(bad) = scored.iter().find(|s| s.0.is_nan() || s.0 < 0.0) {
        return Err(ConformalError::InvalidInput(format!(
            "score ratio {} is not a nonnegative number",
            bad.0
        )));
    }
    let mut sorted = scored.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut thresholds: Vec<f64> = sorted.iter().map(|s| s.0).collect();
    thresholds.dedup();

    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        score_ratio: thresholds[0],
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    for (t, &threshold) in thresholds.iter().enumerate() {
        while i < sorted.len() && sorted[i].0 == threshold {
            if sorted[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / n_neg as f64,
            tpr: tp as f64 / n_pos as f64,
            score_ratio: thresholds.get(t + 1).copied().unwrap_or(0.0),
        });
    }
    let last = points[points.len() - 1];
    if last.fpr != 1.0 || last.tpr != 1.0 {
        points.push(RocPoint {
            fpr: 1.0,
            tpr: 1.0,
            score_ratio: 0.0,
        });
    }
    Ok(points)
}

fn cross(o: &RocPoint, a: &RocPoint, b: &RocPoint) -> f64 {
    (a.fpr - o.fpr) * (b.tpr - o.tpr) - (a.tpr - o.tpr) * (b.fpr - o.fpr)
}

/// Upper convex hull in ascending FPr (monotone chain). Collinear interior
/// points are dropped.
pub fn rocch(points: &[RocPoint]) -> Vec<RocPoint> {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.fpr.total_cmp(&b.fpr).then(a.tpr.total_cmp(&b.tpr)));
    let mut hull: Vec<RocPoint> = Vec::with_capacity(sorted.len());
    for p in sorted {
        while hull.len() >= 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], &p) >= 0.0 {
            hull.pop();
        }
        if hull
            .last()
            .is_some_and(|h| h.fpr == p.fpr && h.tpr == p.tpr)
        {
            continue;
        }
        hull.push(p);
    }
    hull
}

/// Slope of the iso-precision line `TPr = slope · FPr`.
pub fn iso_precision_slope(target_precision: f64, n_neg: usize, n_pos: usize) -> f64 {
    target_precision / (1.0 - target_precision) * n_neg as f64 / n_pos as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IsoThreshold {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
    /// The line meets the hull only at the origin and runs above it: the
    /// target precision is out of reach and the threshold falls back to 0.
    pub unreachable: bool,
}

const ON_LINE: f64 = 1e-12;

/// Intersection of the iso-precision line with the hull that has the
/// largest TPr. At a vertex the threshold is the vertex ratio; strictly
/// inside a segment it is the larger of the two endpoint ratios.
pub fn iso_precision_threshold(
    hull: &[RocPoint],
    target_precision: f64,
    n_neg: usize,
    n_pos: usize,
) -> Result<IsoThreshold> {
    if !(target_precision > 0.0 && target_precision < 1.0) {
        return Err(ConformalError::InvalidConfig(format!(
            "target precision must lie in (0, 1), got {target_precision}"
        )));
    }
    if n_neg == 0 || n_pos == 0 || hull.len() < 2 {
        return Err(ConformalError::InvalidInput(
            "iso-precision threshold needs a hull and both meta classes".into(),
        ));
    }
    let slope = iso_precision_slope(target_precision, n_neg, n_pos);
    // Positive where the hull is above the line (precision above target).
    let gap = |p: &RocPoint| {
        let g = p.tpr - slope * p.fpr;
        if g.abs() <= ON_LINE * (1.0 + slope) {
            0.0
        } else {
            g
        }
    };
    let is_origin = |fpr: f64, tpr: f64| fpr == 0.0 && tpr == 0.0;
    let mut best: Option<IsoThreshold> = None;
    let mut offer = |c: IsoThreshold| {
        if !is_origin(c.fpr, c.tpr) && best.is_none_or(|b| c.tpr > b.tpr) {
            best = Some(c);
        }
    };
    for (i, p) in hull.iter().enumerate() {
        if gap(p) == 0.0 {
            offer(IsoThreshold {
                threshold: p.score_ratio,
                fpr: p.fpr,
                tpr: p.tpr,
                unreachable: false,
            });
        }
        if let Some(q) = hull.get(i + 1) {
            let (gp, gq) = (gap(p), gap(q));
            if gp != 0.0 && gq != 0.0 && (gp > 0.0) != (gq > 0.0) {
                let s = gp / (gp - gq);
                offer(IsoThreshold {
                    threshold: p.score_ratio.max(q.score_ratio),
                    fpr: p.fpr + s * (q.fpr - p.fpr),
                    tpr: p.tpr + s * (q.tpr - p.tpr),
                    unreachable: false,
                });
            }
        }
    }
    if let Some(best) = best {
        return Ok(best);
    }
    // No crossing: either every hull point beats the target, so accept all,
    // or none does and the target is out of reach.
    let end = hull[hull.len() - 1];
    let above = gap(&end) > 0.0;
    Ok(IsoThreshold {
        threshold: 0.0,
        fpr: if above { end.fpr } else { 0.0 },
        tpr: if above { end.tpr } else { 0.0 },
        unreachable: !above,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(fpr: f64, tpr: f64) -> RocPoint {
        RocPoint {
            fpr,
            tpr,
            score_ratio: 0.0,
        }
    }

    fn coords(points: &[RocPoint]) -> Vec<(f64, f64)> {
        points.iter().map(|p| (p.fpr, p.tpr)).collect()
    }

    #[test]
    fn ratios() {
        assert_eq!(score_ratio(0.8, 0.2), 4.0);
        assert_eq!(score_ratio(0.5, 0.5), 1.0);
        assert_eq!(score_ratio(0.5, 0.0), f64::INFINITY);
        assert_eq!(score_ratio(0.0, 0.0), 0.0);
    }

    #[test]
    fn hand_sweep() {
        let points = roc_points(&[(3.0, true), (2.0, true), (1.0, false)]).unwrap();
        assert_eq!(
            coords(&points),
            vec![(0.0, 0.0), (0.0, 0.5), (0.0, 1.0), (1.0, 1.0)]
        );
        let ratios: Vec<f64> = points.iter().map(|p| p.score_ratio).collect();
        assert_eq!(ratios, vec![3.0, 2.0, 1.0, 0.0]);
    }

    #[test]
    fn identical_ratios_give_two_points() {
        let points = roc_points(&[(2.0, true), (2.0, false), (2.0, true)]).unwrap();
        assert_eq!(coords(&points), vec![(0.0, 0.0), (1.0, 1.0)]);
        assert!(roc_points(&[(1.0, true)]).is_err());
    }

    #[test]
    fn hull_examples() {
        let hull = rocch(&[pt(0.0, 0.0), pt(0.5, 0.5), pt(1.0, 1.0), pt(0.2, 0.8)]);
        assert_eq!(coords(&hull), vec![(0.0, 0.0), (0.2, 0.8), (1.0, 1.0)]);
        let collinear = rocch(&[pt(0.0, 0.0), pt(0.25, 0.25), pt(0.5, 0.5), pt(1.0, 1.0)]);
        assert_eq!(coords(&collinear), vec![(0.0, 0.0), (1.0, 1.0)]);
    }

    #[test]
    fn worked_iso_threshold() {
        let hull = vec![
            RocPoint {
                fpr: 0.0,
                tpr: 0.0,
                score_ratio: 9.0,
            },
            RocPoint {
                fpr: 0.2,
                tpr: 0.8,
                score_ratio: 2.5,
            },
            RocPoint {
                fpr: 1.0,
                tpr: 1.0,
                score_ratio: 0.0,
            },
        ];
        let t = iso_precision_threshold(&hull, 0.8, 10, 10).unwrap();
        assert_eq!(
            (t.threshold, t.fpr, t.tpr, t.unreachable),
            (2.5, 0.2, 0.8, false)
        );

        let base = iso_precision_threshold(&hull, 0.5, 10, 10).unwrap();
        assert_eq!((base.threshold, base.tpr), (0.0, 1.0));

        // Slope 2 crosses the second segment in its interior.
        let mid = iso_precision_threshold(&hull, 2.0 / 3.0, 10, 10).unwrap();
        assert_eq!(mid.threshold, 2.5);
        assert!(mid.fpr > 0.2 && mid.fpr < 1.0);
    }

    #[test]
    fn unreachable_target_falls_back_to_zero() {
        let diagonal = vec![pt(0.0, 0.0), pt(1.0, 1.0)];
        let t = iso_precision_threshold(&diagonal, 0.9, 5, 5).unwrap();
        assert!(t.unreachable);
        assert_eq!(t.threshold, 0.0);
    }

    #[test]
    fn target_below_base_precision_accepts_all() {
        let hull = vec![pt(0.0, 0.0), pt(0.1, 0.9), pt(1.0, 1.0)];
        let t = iso_precision_threshold(&hull, 0.6, 3, 97).unwrap();
        assert!(!t.unreachable);
        assert_eq!((t.threshold, t.fpr, t.tpr), (0.0, 1.0, 1.0));
    }

    #[test]
    fn slope_formula() {
        assert_eq!(iso_precision_slope(0.5, 3, 1), 3.0);
    }
}
