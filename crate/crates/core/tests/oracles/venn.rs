use conformal::Bag;

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// 1-NN category by exhaustive scan. `skip` removes one bag entry (the
/// example itself); with nothing left the fallback label is used.
fn nn_label(
    xs: &[Vec<f64>],
    ys: &[usize],
    x: &[f64],
    skip: Option<usize>,
    fallback: usize,
) -> usize {
    let mut best: Option<(f64, usize)> = None;
    for (j, xj) in xs.iter().enumerate() {
        if Some(j) == skip {
            continue;
        }
        let d = distance(x, xj);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, j));
        }
    }
    best.map_or(fallback, |(_, j)| ys[j])
}

/// Matrix by enumeration: for every hypothesis, count labels over the bag
/// members sharing the test example's category, plus the test example.
pub fn oracle_matrix(bag: &Bag, x: &[f64]) -> Vec<Vec<f64>> {
    let xs = bag.observations();
    let ys = bag.classes().unwrap();
    let n_labels = bag.n_labels();
    let member_category: Vec<usize> = (0..xs.len())
        .map(|i| nn_label(&xs, &ys, &xs[i], Some(i), ys[i]))
        .collect();
    (0..n_labels)
        .map(|h| {
            let k = nn_label(&xs, &ys, x, None, h);
            let mut counts = vec![0.0; n_labels];
            counts[h] += 1.0;
            let mut size = 1.0;
            for i in 0..xs.len() {
                if member_category[i] == k {
                    counts[ys[i]] += 1.0;
                    size += 1.0;
                }
            }
            counts.iter().map(|c| c / size).collect()
        })
        .collect()
}
