fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Upper hull by all-pairs elimination. The lowest point of the leftmost
/// column starts the hull; any other point is a vertex unless a higher
/// point shares its FPr or some pair strictly straddling it lies on or
/// above it.
pub fn brute_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    let start = pts[0];
    let mut out = vec![start];
    for &p in &pts[1..] {
        let covered = pts.iter().any(|&q| q.0 == p.0 && q.1 > p.1);
        let below = pts.iter().any(|&a| {
            pts.iter()
                .any(|&b| a.0 < p.0 && p.0 < b.0 && cross(a, b, p) <= 0.0)
        });
        if !covered && !below {
            out.push(p);
        }
    }
    out
}
