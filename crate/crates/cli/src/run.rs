use std::io::Write;
use std::path::{Path, PathBuf};

use conformal::data::{load_csv, split, ColumnSelector};
use conformal::meta::{ConformalMetaClassifier, IsoThreshold, MetaReport};
use conformal::metrics::validity_report;
use conformal::rrcm::RegressionReport;
use conformal::taxonomy::{ConstantTaxonomy, LabelTaxonomy};
use conformal::venn::{NearestNeighbourTaxonomy, VennReport};
use conformal::{
    Bag, CombinedClassifier, ConformalClassifier, ConformalError, ConformalPredictor, CpConfig,
    CpMode, Epsilons, IcpConfig, InductivePredictor, LabelKind, MetaConfig, PredictionSet, Rrcm,
    RrcmConfig, SeededRng, SplitSpec, ValidityReport, VennPredictor,
};
use serde::Serialize;

use crate::args::{CpArgs, DataArgs, IcpArgs, MetaArgs, RrcmArgs, VennArgs};
use crate::spec::{ModelSpec, TaxonomySpec};

#[derive(Debug)]
pub enum CliError {
    /// Bad flag combination or spec string: exit 2.
    Usage(String),
    /// Unreadable data or a failing predictor: exit 1.
    Data(String),
}

impl From<ConformalError> for CliError {
    fn from(e: ConformalError) -> Self {
        match e {
            ConformalError::InvalidConfig(m) => CliError::Usage(m),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

type Outcome<T> = Result<T, CliError>;

#[derive(Serialize)]
struct Report<'a, C: Serialize, R: Serialize> {
    command: &'a str,
    config: C,
    data: DataSummary,
    result: R,
}

#[derive(Serialize)]
struct DataSummary {
    train: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    calibration: Option<usize>,
    test: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    labels: Vec<String>,
}

#[derive(Serialize)]
struct Sources {
    train: String,
    test: String,
    label_column: String,
    seed: u64,
}

impl Sources {
    fn new(data: &DataArgs) -> Self {
        Sources {
            train: data.train.display().to_string(),
            test: data.test.display().to_string(),
            label_column: data.label_column.clone().unwrap_or_else(|| "last".into()),
            seed: data.seed,
        }
    }
}

fn selector(data: &DataArgs) -> ColumnSelector {
    data.label_column
        .clone()
        .map_or(ColumnSelector::Last, ColumnSelector::Name)
}

fn load(path: &Path, data: &DataArgs, kind: LabelKind) -> Outcome<Bag> {
    Ok(load_csv(path, &selector(data), kind)?)
}

fn emit<C: Serialize, R: Serialize>(
    output: Option<&PathBuf>,
    command: &str,
    config: C,
    data: DataSummary,
    result: R,
) -> Outcome<()> {
    let report = Report {
        command,
        config,
        data,
        result,
    };
    let mut text = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Data(format!("cannot serialize report: {e}")))?;
    text.push('\n');
    match output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

#[derive(Serialize)]
struct ClassificationResult {
    #[serde(flatten)]
    report: ValidityReport,
    /// `(row, label)` pairs whose Mondrian category had no reference scores.
    empty_categories: usize,
}

/// Offline scoring through the p-value table, keeping empty-category counts.
fn score_table<P: ConformalClassifier>(
    predictor: &P,
    test: &Bag,
    rng: &mut SeededRng,
) -> Outcome<ClassificationResult> {
    if test.is_empty() {
        return Err(ConformalError::EmptyBag.into());
    }
    let test = test.relabel_to(predictor.label_space())?;
    let table = predictor.p_values(&test.observations(), rng)?;
    let sets: Vec<PredictionSet> = table
        .rows
        .iter()
        .map(|p| PredictionSet::from_p_values(p, predictor.epsilons()))
        .collect();
    Ok(ClassificationResult {
        report: validity_report(predictor.epsilons(), &sets, &test.classes()?)?,
        empty_categories: table.empty_categories.len(),
    })
}

fn with_taxonomy(cfg: CpConfig, taxonomy: TaxonomySpec) -> Outcome<CpConfig> {
    match taxonomy {
        TaxonomySpec::None => Ok(cfg),
        TaxonomySpec::Constant => Ok(cfg.taxonomy(ConstantTaxonomy)),
        TaxonomySpec::Label => Ok(cfg.taxonomy(LabelTaxonomy)),
        TaxonomySpec::Knn1 => Err(CliError::Usage(
            "taxonomy knn1 is a Venn taxonomy; use none, constant or label".into(),
        )),
    }
}

#[derive(Serialize)]
struct CpEcho {
    #[serde(flatten)]
    sources: Sources,
    epsilons: Epsilons,
    ncm: ModelSpec,
    smoothed: bool,
    taxonomy: TaxonomySpec,
    mode: &'static str,
    online: bool,
}

pub fn cp(args: &CpArgs) -> Outcome<()> {
    if args.exact && args.online {
        return Err(CliError::Usage(
            "--exact and --online cannot be combined".into(),
        ));
    }
    let train = load(&args.data.train, &args.data, LabelKind::Class)?;
    let test = load(&args.data.test, &args.data, LabelKind::Class)?;
    let mode = if args.exact {
        CpMode::TransductiveExact
    } else {
        CpMode::Offline
    };
    let cfg = with_taxonomy(
        CpConfig::new(args.levels.epsilons.clone())
            .smoothed(args.smoothed)
            .mode(mode),
        args.taxonomy,
    )?;
    let mut cp = ConformalPredictor::new(cfg, args.ncm.measure());
    cp.train(&train, true)?;
    let mut rng = SeededRng::new(args.data.seed);
    let result = if args.online {
        let online = cp.score_online(&test, &mut rng)?;
        ClassificationResult {
            report: online.report,
            empty_categories: 0,
        }
    } else {
        score_table(&cp, &test, &mut rng)?
    };
    let echo = CpEcho {
        sources: Sources::new(&args.data),
        epsilons: args.levels.epsilons.clone(),
        ncm: args.ncm,
        smoothed: args.smoothed,
        taxonomy: args.taxonomy,
        mode: if args.exact { "exact" } else { "offline" },
        online: args.online,
    };
    let summary = DataSummary {
        train: train.len(),
        calibration: None,
        test: test.len(),
        labels: cp.label_space().to_vec(),
    };
    emit(args.data.output.as_ref(), "cp", echo, summary, result)
}

#[derive(Serialize)]
struct IcpEcho {
    #[serde(flatten)]
    sources: Sources,
    #[serde(skip_serializing_if = "Option::is_none")]
    calibration: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    calibration_fraction: Option<f64>,
    epsilons: Epsilons,
    ncm: ModelSpec,
    smoothed: bool,
    taxonomy: TaxonomySpec,
    include_test_in_count: bool,
}

pub fn icp(args: &IcpArgs) -> Outcome<()> {
    let full = load(&args.data.train, &args.data, LabelKind::Class)?;
    let (train, calibration) = match (&args.calibration, args.calibration_fraction) {
        (Some(path), None) => {
            let calibration = load(path, &args.data, LabelKind::Class)?;
            (full, calibration)
        }
        (None, Some(fraction)) => {
            if !(fraction > 0.0 && fraction < 1.0) {
                return Err(CliError::Usage(format!(
                    "--calibration-fraction must lie in (0, 1), got {fraction}"
                )));
            }
            split(&full, &SplitSpec::new(1.0 - fraction, args.data.seed)?)?
        }
        _ => {
            return Err(CliError::Usage(
                "icp needs --calibration FILE or --calibration-fraction F".into(),
            ))
        }
    };
    let test = load(&args.data.test, &args.data, LabelKind::Class)?;
    let base = IcpConfig::new(args.levels.epsilons.clone())
        .smoothed(args.smoothed)
        .include_test_in_count(args.include_test_in_count);
    let cfg = match args.taxonomy {
        TaxonomySpec::None => base,
        TaxonomySpec::Constant => base.taxonomy(ConstantTaxonomy),
        TaxonomySpec::Label => base.taxonomy(LabelTaxonomy),
        TaxonomySpec::Knn1 => {
            return Err(CliError::Usage(
                "taxonomy knn1 is a Venn taxonomy; use none, constant or label".into(),
            ))
        }
    };
    let mut icp = InductivePredictor::new(cfg, args.ncm.measure());
    icp.train(&train, true)?;
    icp.calibrate(&calibration, true)?;
    let result = score_table(&icp, &test, &mut SeededRng::new(args.data.seed))?;
    let echo = IcpEcho {
        sources: Sources::new(&args.data),
        calibration: args.calibration.as_ref().map(|p| p.display().to_string()),
        calibration_fraction: args.calibration_fraction,
        epsilons: args.levels.epsilons.clone(),
        ncm: args.ncm,
        smoothed: args.smoothed,
        taxonomy: args.taxonomy,
        include_test_in_count: args.include_test_in_count,
    };
    let summary = DataSummary {
        train: train.len(),
        calibration: Some(calibration.len()),
        test: test.len(),
        labels: icp.label_space().to_vec(),
    };
    emit(args.data.output.as_ref(), "icp", echo, summary, result)
}

#[derive(Serialize)]
struct RrcmEcho {
    #[serde(flatten)]
    sources: Sources,
    epsilons: Epsilons,
    ncm: ModelSpec,
    convex_hull: bool,
    include_test_in_count: bool,
    online: bool,
}

pub fn rrcm(args: &RrcmArgs) -> Outcome<()> {
    let knn = args
        .ncm
        .knn_config()
        .ok_or_else(|| CliError::Usage("rrcm supports only the knn coefficient provider".into()))?;
    let train = load(&args.data.train, &args.data, LabelKind::Real)?;
    let test = load(&args.data.test, &args.data, LabelKind::Real)?;
    let cfg = RrcmConfig::new(args.levels.epsilons.clone())
        .convex_hull(!args.no_convex_hull)
        .include_test_in_count(args.include_test_in_count);
    let mut rrcm = Rrcm::new(cfg, conformal::ncm::KnnRegressor::new(knn));
    rrcm.train(&train, true)?;
    let result: RegressionReport = if args.online {
        rrcm.score_online(&test)?
    } else {
        rrcm.score(&test)?
    };
    let echo = RrcmEcho {
        sources: Sources::new(&args.data),
        epsilons: args.levels.epsilons.clone(),
        ncm: args.ncm,
        convex_hull: !args.no_convex_hull,
        include_test_in_count: args.include_test_in_count,
        online: args.online,
    };
    let summary = DataSummary {
        train: train.len(),
        calibration: None,
        test: test.len(),
        labels: Vec::new(),
    };
    emit(args.data.output.as_ref(), "rrcm", echo, summary, result)
}

#[derive(Serialize)]
struct VennEcho {
    #[serde(flatten)]
    sources: Sources,
    taxonomy: TaxonomySpec,
    online: bool,
}

pub fn venn(args: &VennArgs) -> Outcome<()> {
    if args.taxonomy != TaxonomySpec::Knn1 {
        return Err(CliError::Usage(
            "venn supports only the knn1 taxonomy".into(),
        ));
    }
    let train = load(&args.data.train, &args.data, LabelKind::Class)?;
    let test = load(&args.data.test, &args.data, LabelKind::Class)?;
    let mut venn = VennPredictor::new(NearestNeighbourTaxonomy::new());
    venn.train(&train, true)?;
    let labels = train.label_space().to_vec();
    let result: VennReport = if args.online {
        venn.score_online(&test)?
    } else {
        venn.score(&test)?
    };
    let echo = VennEcho {
        sources: Sources::new(&args.data),
        taxonomy: args.taxonomy,
        online: args.online,
    };
    let summary = DataSummary {
        train: train.len(),
        calibration: None,
        test: test.len(),
        labels,
    };
    emit(args.data.output.as_ref(), "venn", echo, summary, result)
}

#[derive(Serialize)]
struct MetaEcho {
    #[serde(flatten)]
    sources: Sources,
    base: ModelSpec,
    ncm: ModelSpec,
    k_folds: usize,
    stratify: bool,
    target_precision: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    emit_roc: Option<String>,
}

#[derive(Serialize)]
struct MetaTrainingSummary {
    threshold: IsoThreshold,
    slope: f64,
    meta_positive: usize,
    meta_negative: usize,
    fold_sizes: Vec<usize>,
    hull_vertices: usize,
}

#[derive(Serialize)]
struct MetaResult {
    training: MetaTrainingSummary,
    #[serde(flatten)]
    test: MetaReport,
}

pub fn meta(args: &MetaArgs) -> Outcome<()> {
    let train = load(&args.data.train, &args.data, LabelKind::Class)?;
    let test = load(&args.data.test, &args.data, LabelKind::Class)?;
    let cfg = MetaConfig::new(args.k_folds, args.target_precision, args.data.seed)?
        .stratified(args.stratify);
    let mut bm = CombinedClassifier::new(
        cfg,
        args.base.classifier(),
        ConformalMetaClassifier::new(args.ncm.measure()),
    );
    let trained = bm.train(&train)?.clone();
    if let Some(path) = &args.emit_roc {
        trained
            .write_roc(path)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    }
    let result = MetaResult {
        training: MetaTrainingSummary {
            threshold: trained.threshold,
            slope: trained.slope,
            meta_positive: trained.n_pos,
            meta_negative: trained.n_neg,
            fold_sizes: trained.fold_sizes.clone(),
            hull_vertices: trained.hull.len(),
        },
        test: bm.score(&test)?,
    };
    let echo = MetaEcho {
        sources: Sources::new(&args.data),
        base: args.base,
        ncm: args.ncm,
        k_folds: args.k_folds,
        stratify: args.stratify,
        target_precision: args.target_precision,
        emit_roc: args.emit_roc.as_ref().map(|p| p.display().to_string()),
    };
    let summary = DataSummary {
        train: train.len(),
        calibration: None,
        test: test.len(),
        labels: train.label_space().to_vec(),
    };
    emit(args.data.output.as_ref(), "meta", echo, summary, result)
}
