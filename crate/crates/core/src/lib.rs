//! Conformal prediction: set-valued classifiers and interval regressors with
//! finite-sample validity under exchangeability.
//!
//! * [`cp::ConformalPredictor`]: conformal predictor over a full bag, offline
//!   or exact transductive, optionally Mondrian.
//! * [`icp::InductivePredictor`]: inductive predictor with calibration.
//! * [`rrcm::Rrcm`]: regression intervals from score lines `|a + b·y|`.
//! * [`venn::VennPredictor`]: Venn multi-probabilistic predictor.
//! * [`meta::CombinedClassifier`]: base classifier plus conformal meta
//!   classifier that abstains below a precision-driven threshold.
//!
//! Row-level work runs on rayon when the `parallel` feature is enabled (the
//! default). Results are identical with and without it.

pub mod cp;
pub mod data;
pub mod error;
pub mod icp;
pub mod meta;
pub mod metrics;
pub mod ncm;
pub mod par;
pub mod prediction;
pub mod rng;
pub mod rrcm;
pub mod taxonomy;
pub mod venn;

pub use crate::cp::{ConformalClassifier, ConformalPredictor, CpConfig, CpMode};
pub use crate::data::{Bag, Example, Label, LabelKind, SplitSpec};
pub use crate::error::{ConformalError, Result};
pub use crate::icp::{IcpConfig, InductivePredictor};
pub use crate::meta::{CombinedClassifier, MetaConfig, MetaPrediction};
pub use crate::metrics::{ConfusionMatrix, ValidityReport};
pub use crate::prediction::{Epsilons, PValueTable, PredictionSet};
pub use crate::rng::SeededRng;
pub use crate::rrcm::{PredictionIntervals, Rrcm, RrcmConfig};
pub use crate::venn::{VennPrediction, VennPredictor};
