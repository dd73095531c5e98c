use conformal::rrcm::Interval;

/// Roots of `a_i + b_i·y = ±(a_n + b_n·y)` for every bag line.
pub fn candidate_points(lines: &[(f64, f64)], new: (f64, f64)) -> Vec<f64> {
    let (an, bn) = new;
    let mut out = Vec::new();
    for &(a, b) in lines {
        if b != bn {
            out.push((an - a) / (b - bn) + 0.0);
        }
        if b != -bn {
            out.push(-(a + an) / (b + bn) + 0.0);
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Direct evaluation: bag scores at least as large as the new score, up to
/// `tol` (breakpoints are rounded, so equality there is approximate).
pub fn count_at(lines: &[(f64, f64)], new: (f64, f64), y: f64, tol: f64) -> usize {
    let alpha_new = (new.0 + new.1 * y).abs();
    lines
        .iter()
        .filter(|&&(a, b)| (a + b * y).abs() >= alpha_new - tol * (1.0 + alpha_new))
        .count()
}

pub const TOL: f64 = 1e-9;

/// O(n²) union: every candidate point and every gap between neighbours is
/// tested by evaluating all score functions.
pub fn oracle_union(
    lines: &[(f64, f64)],
    new: (f64, f64),
    epsilon: f64,
    own: bool,
) -> Vec<Interval> {
    let points = candidate_points(lines, new);
    let denominator = (lines.len() + 1) as f64;
    let keep =
        |y: f64| (count_at(lines, new, y, TOL) + usize::from(own)) as f64 / denominator > epsilon;
    // Probe sequence: (low, high, probe) for rays, points and gaps.
    let mut pieces: Vec<(f64, f64, f64)> = Vec::new();
    match (points.first(), points.last()) {
        (Some(&first), Some(&last)) => {
            pieces.push((f64::NEG_INFINITY, first, first - 1.0 - first.abs()));
            for (i, &p) in points.iter().enumerate() {
                pieces.push((p, p, p));
                if let Some(&q) = points.get(i + 1) {
                    pieces.push((p, q, p + (q - p) / 2.0));
                }
            }
            pieces.push((last, f64::INFINITY, last + 1.0 + last.abs()));
        }
        _ => pieces.push((f64::NEG_INFINITY, f64::INFINITY, 0.0)),
    }
    let mut out: Vec<Interval> = Vec::new();
    let mut open = false;
    for (low, high, probe) in pieces {
        if keep(probe) {
            if open {
                out.last_mut().unwrap().high = high;
            } else {
                out.push(Interval { low, high });
                open = true;
            }
        } else {
            open = false;
        }
    }
    out
}

pub fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-9
}

pub fn same_union(a: &[Interval], b: &[Interval]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| close(x.low, y.low) && close(x.high, y.high))
}
