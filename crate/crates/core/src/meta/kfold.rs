use rand::seq::SliceRandom;

use crate::error::{ConformalError, Result};
use crate::rng::SeededRng;

/// Splits `0..n` into `k` folds after a seeded shuffle. Fold sizes differ by
/// at most one, the larger folds first. With `strata` the indices of each
/// stratum are dealt round-robin so every fold gets a near-equal share.
pub fn fold_indices(
    n: usize,
    k: usize,
    seed: u64,
    strata: Option<&[usize]>,
) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(ConformalError::InvalidConfig(format!(
            "k-fold needs k ≥ 2, got {k}"
        )));
    }
    if k > n {
        return Err(ConformalError::InvalidConfig(format!(
            "k = {k} folds requested for only {n} examples"
        )));
    }
    let mut rng = SeededRng::new(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut folds = vec![Vec::new(); k];
    match strata {
        None => {
            let (base, extra) = (n / k, n % k);
            let mut start = 0;
            for (f, fold) in folds.iter_mut().enumerate() {
                let size = base + usize::from(f < extra);
                fold.extend_from_slice(&order[start..start + size]);
                start += size;
            }
        }
        Some(strata) => {
            if strata.len() != n {
                return Err(ConformalError::InvalidInput(format!(
                    "{} strata labels for {n} examples",
                    strata.len()
                )));
            }
            let mut groups: Vec<usize> = strata.to_vec();
            groups.sort_unstable();
            groups.dedup();
            let mut next = 0;
            for g in groups {
                for &i in order.iter().filter(|&&i| strata[i] == g) {
                    folds[next].push(i);
                    next = (next + 1) % k;
                }
            }
        }
    }
    Ok(folds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_into_three() {
        let folds = fold_indices(10, 3, 0, None).unwrap();
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![4, 3, 3]);
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn stratified_folds_balance_each_class() {
        let strata: Vec<usize> = (0..12).map(|i| usize::from(i < 4)).collect();
        let folds = fold_indices(12, 4, 9, Some(&strata)).unwrap();
        for fold in &folds {
            assert_eq!(fold.len(), 3);
            assert_eq!(fold.iter().filter(|&&i| strata[i] == 1).count(), 1);
        }
    }

    #[test]
    fn rejects_bad_k() {
        assert!(fold_indices(3, 4, 0, None).is_err());
        assert!(fold_indices(3, 1, 0, None).is_err());
        assert_eq!(
            fold_indices(5, 2, 7, None).unwrap(),
            fold_indices(5, 2, 7, None).unwrap()
        );
    }
}
