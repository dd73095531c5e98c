//! Mondrian taxonomies: example-wise category assignment used to make
//! p-values conditional.

/// Maps a hypothetical example `(x, y)` (with `y` an index into the
/// predictor's label space) to a category.
pub trait Taxonomy: Send + Sync {
    fn category(&self, x: &[f64], y: usize) -> u64;
}

/// One category for everything: conditional p-values reduce to the
/// unconditional ones.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConstantTaxonomy;

impl Taxonomy for ConstantTaxonomy {
    fn category(&self, _x: &[f64], _y: usize) -> u64 {
        0
    }
}

/// The label itself is the category (label-conditional validity).
#[derive(Debug, Clone, Copy, Default)]
pub struct LabelTaxonomy;

impl Taxonomy for LabelTaxonomy {
    fn category(&self, _x: &[f64], y: usize) -> u64 {
        y as u64
    }
}

impl<F> Taxonomy for F
where
    F: Fn(&[f64], usize) -> u64 + Send + Sync,
{
    fn category(&self, x: &[f64], y: usize) -> u64 {
        self(x, y)
    }
}
