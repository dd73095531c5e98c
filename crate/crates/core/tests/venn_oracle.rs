use conformal::venn::{NearestNeighbourTaxonomy, VennPredictor};
use conformal::Bag;
use proptest::prelude::*;

mod oracles;

use oracles::venn::oracle_matrix;

/// Coordinates on a coarse grid so exact duplicates occur.
fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((-3i32..=3).prop_map(f64::from), 2)
}

fn bag() -> impl Strategy<Value = Bag> {
    prop::collection::vec((point(), 0usize..3), 0..=10).prop_map(|rows| {
        let (xs, ys) = rows.into_iter().unzip();
        Bag::classification(["a", "b", "c"], xs, ys).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn matrix_matches_enumeration(bag in bag(), x in point()) {
        let mut venn = VennPredictor::new(NearestNeighbourTaxonomy::new());
        venn.train(&bag, true).unwrap();
        prop_assert_eq!(venn.matrix(&x).unwrap(), oracle_matrix(&bag, &x));
    }

    #[test]
    fn rows_are_distributions_and_intervals_ordered(bag in bag(), x in point()) {
        let mut venn = VennPredictor::new(NearestNeighbourTaxonomy::new());
        venn.train(&bag, true).unwrap();
        let p = &venn.predict_full(&[x]).unwrap()[0];
        for row in &p.matrix {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            prop_assert!(row.iter().all(|v| (0.0..=1.0).contains(v)));
        }
        prop_assert!(0.0 <= p.error.low && p.error.low <= p.error.high && p.error.high <= 1.0);
        let quality = |c: usize| p.matrix.iter().map(|r| r[c]).fold(f64::INFINITY, f64::min);
        prop_assert!((0..3).all(|c| quality(c) <= quality(p.label)));
        prop_assert!((0..p.label).all(|c| quality(c) < quality(p.label)));
    }
}
