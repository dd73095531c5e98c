use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use conformal::Epsilons;

use crate::spec::{ModelSpec, TaxonomySpec};

/// Conformal prediction on CSV data. Every run writes a JSON report that
/// echoes the resolved configuration.
#[derive(Debug, Parser)]
#[command(name = "conformal", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Transductive conformal predictor, optionally Mondrian.
    Cp(CpArgs),
    /// Inductive conformal predictor with a calibration set.
    Icp(IcpArgs),
    /// Regression intervals (ridge regression confidence machine).
    Rrcm(RrcmArgs),
    /// Venn predictor with the 1-NN taxonomy.
    Venn(VennArgs),
    /// Base classifier plus conformal meta classifier that may abstain.
    Meta(MetaArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Training CSV file with a header row.
    #[arg(long)]
    pub train: PathBuf,
    /// Test CSV file (the stream in online mode).
    #[arg(long)]
    pub test: PathBuf,
    /// Label column by header name or zero-based index [default: last column].
    #[arg(long)]
    pub label_column: Option<String>,
    /// Seed for shuffles and tie-breaking draws.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Report file [default: standard output].
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct LevelArgs {
    /// Comma-separated significance levels, strictly increasing.
    #[arg(long, default_value = "0.05,0.1")]
    pub epsilons: Epsilons,
}

#[derive(Debug, Clone, Args)]
pub struct CpArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub levels: LevelArgs,
    /// Nonconformity measure: `knn:k=N` or `cart:max_depth=D,min_leaf=L`.
    #[arg(long, default_value = "knn:k=1")]
    pub ncm: ModelSpec,
    /// Smoothed p-values.
    #[arg(long)]
    pub smoothed: bool,
    /// Mondrian taxonomy.
    #[arg(long, value_enum, default_value_t = TaxonomySpec::None)]
    pub taxonomy: TaxonomySpec,
    /// Retrain the measure for every hypothesis instead of scoring offline.
    #[arg(long)]
    pub exact: bool,
    /// Predict each test example, then add it to the bag.
    #[arg(long)]
    pub online: bool,
}

#[derive(Debug, Clone, Args)]
pub struct IcpArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub levels: LevelArgs,
    /// Calibration CSV file.
    #[arg(long, conflicts_with = "calibration_fraction")]
    pub calibration: Option<PathBuf>,
    /// Hold out this fraction of the training file for calibration.
    #[arg(long)]
    pub calibration_fraction: Option<f64>,
    #[arg(long, default_value = "knn:k=1")]
    pub ncm: ModelSpec,
    #[arg(long)]
    pub smoothed: bool,
    #[arg(long, value_enum, default_value_t = TaxonomySpec::None)]
    pub taxonomy: TaxonomySpec,
    /// Count the test example in its own p-value numerator.
    #[arg(long)]
    pub include_test_in_count: bool,
}

#[derive(Debug, Clone, Args)]
pub struct RrcmArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub levels: LevelArgs,
    /// Coefficient provider: `knn:k=N`.
    #[arg(long, default_value = "knn:k=1")]
    pub ncm: ModelSpec,
    /// Report the union of intervals instead of its convex hull.
    #[arg(long)]
    pub no_convex_hull: bool,
    /// Count the test example in its own p-value numerator.
    #[arg(long)]
    pub include_test_in_count: bool,
    #[arg(long)]
    pub online: bool,
}

#[derive(Debug, Clone, Args)]
pub struct VennArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Venn taxonomy.
    #[arg(long, value_enum, default_value_t = TaxonomySpec::Knn1)]
    pub taxonomy: TaxonomySpec,
    #[arg(long)]
    pub online: bool,
}

#[derive(Debug, Clone, Args)]
pub struct MetaArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Base classifier: `knn:k=N` or `cart:max_depth=D,min_leaf=L`.
    #[arg(long, default_value = "knn:k=3")]
    pub base: ModelSpec,
    /// Nonconformity measure of the meta classifier.
    #[arg(long, default_value = "knn:k=1")]
    pub ncm: ModelSpec,
    /// Number of folds for meta data and score ratios.
    #[arg(long, default_value_t = 5)]
    pub k_folds: usize,
    /// Stratify the score-ratio folds by meta class.
    #[arg(long)]
    pub stratify: bool,
    /// Precision the accepted predictions should reach.
    #[arg(long, default_value_t = 0.9)]
    pub target_precision: f64,
    /// Write ROC, hull and iso-precision points to this file.
    #[arg(long)]
    pub emit_roc: Option<PathBuf>,
}
