//! The construction pipeline end to end, the comparison arms, stratified
//! cross-validation and report rendering.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{encode, Attribute, Dataset, Metric, Value};
use crate::dcfringe::{self, DEFAULT_MAX_ITERATIONS};
use crate::error::{Error, Result};
use crate::learners::{accuracy, LearnerKind};
use crate::lof::{detect_class_outliers, ClassOutlierReport, LofParams};
use crate::neighborhood::{gate_mixed_class, has_mergeable_pair, k_neighborhood, merge_neighborhoods, Neighborhood};
use crate::ruleminer::{feature_name, mine, ConjunctiveFeature};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    None,
    Cobfc,
    Dcfringe,
    Baseline,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::None, Method::Cobfc, Method::Dcfringe, Method::Baseline];

    pub fn name(&self) -> &'static str {
        match self {
            Method::None => "none",
            Method::Cobfc => "cobfc",
            Method::Dcfringe => "dcfringe",
            Method::Baseline => "baseline",
        }
    }

    /// Column heading in markdown tables.
    pub fn title(&self) -> &'static str {
        match self {
            Method::None => "Unaugmented",
            Method::Cobfc => "CobFC",
            Method::Dcfringe => "DC-Fringe",
            Method::Baseline => "Outlier removal",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Method> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method '{}' (expected none, cobfc, dcfringe or baseline)", s)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Neighborhood size around each outlier.
    pub k: usize,
    pub lof: LofParams,
    /// Minimum feature support as a percentage of the training set.
    pub min_support_pct: f64,
    /// Chosen from the attribute types when absent.
    pub metric: Option<Metric>,
    pub learner: LearnerKind,
    pub folds: usize,
    pub seed: u64,
    /// Arms to evaluate besides the unaugmented run, which always runs.
    pub methods: Vec<Method>,
    /// Cap on DC-Fringe rounds.
    pub max_iterations: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            k: 10,
            lof: LofParams::default(),
            min_support_pct: 0.0,
            metric: None,
            learner: LearnerKind::NaiveBayes,
            folds: 10,
            seed: 42,
            methods: vec![Method::Cobfc, Method::Dcfringe, Method::Baseline],
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.lof.validate()?;
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.folds < 2 {
            return Err(Error::Config(format!("need at least 2 folds, got {}", self.folds)));
        }
        if !(0.0..=100.0).contains(&self.min_support_pct) {
            return Err(Error::Config(format!(
                "minimum support must be a percentage in [0, 100], got {}",
                self.min_support_pct
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        Ok(())
    }

    /// Smallest instance count that meets the support percentage on a
    /// training set of `n` instances.
    pub fn min_support(&self, n: usize) -> usize {
        let exact = self.min_support_pct * n as f64 / 100.0;
        (exact - 1e-9).ceil().max(0.0) as usize
    }

    /// The unaugmented run first, then the requested arms in a fixed order.
    pub fn evaluated_methods(&self) -> Vec<Method> {
        let mut m: BTreeSet<Method> = self.methods.iter().copied().collect();
        m.insert(Method::None);
        m.into_iter().collect()
    }
}

/// Everything one pass of the construction pipeline produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Construction {
    pub metric: Metric,
    pub outliers: ClassOutlierReport,
    /// Outliers whose neighborhood holds more than one class.
    pub mixed_outliers: usize,
    /// Mixed neighborhoods after merging.
    pub neighborhoods: Vec<Neighborhood>,
    pub min_support: usize,
    pub features: Vec<ConjunctiveFeature>,
}

/// Detect class outliers, collect their k-neighborhoods, keep the mixed
/// ones, merge, mine.
pub fn construct_features(train: &Dataset, config: &PipelineConfig) -> Result<Construction> {
    config.validate()?;
    if train.present_classes() < 2 {
        return Err(Error::Data("feature construction needs at least two classes".into()));
    }
    let metric = config.metric.unwrap_or_else(|| Metric::for_dataset(train));
    let view = encode(train, metric)?;
    let outliers = detect_class_outliers(train, &view, &config.lof)?;
    let ids: Vec<usize> = outliers.outliers.iter().copied().collect();
    let neighborhoods = ids
        .par_iter()
        .map(|&id| k_neighborhood(&view, train, id, config.k))
        .collect::<Result<Vec<_>>>()?;
    let mixed: Vec<Neighborhood> = neighborhoods.into_iter().filter(|n| gate_mixed_class(n, train)).collect();
    let mixed_outliers = mixed.len();
    let merged = merge_neighborhoods(mixed, train);
    let min_support = config.min_support(train.len());
    let features = mine(&merged, train, min_support);
    log::debug!(
        "{}: {} outliers, {} mixed, {} merged neighborhoods, {} features",
        train.relation(),
        outliers.outliers.len(),
        mixed_outliers,
        merged.len(),
        features.len()
    );
    Ok(Construction {
        metric,
        outliers,
        mixed_outliers,
        neighborhoods: merged,
        min_support,
        features,
    })
}

/// Column names for `features`, unique against each other and against the
/// attributes of `data`.
pub fn feature_columns(features: &[ConjunctiveFeature], data: &Dataset) -> Vec<String> {
    let mut taken: BTreeSet<String> = data.attributes().iter().map(|a| a.name.clone()).collect();
    taken.insert(data.class_attribute().name.clone());
    features
        .iter()
        .map(|f| {
            let base = feature_name(f, data);
            let mut name = base.clone();
            let mut n = 1;
            while taken.contains(&name) {
                n += 1;
                name = format!("{}_{}", base, n);
            }
            taken.insert(name.clone());
            name
        })
        .collect()
}

/// Appends one `{0,1}` column per feature.
pub fn augment(data: &Dataset, features: &[ConjunctiveFeature]) -> Result<Dataset> {
    if features.is_empty() {
        return Ok(data.clone());
    }
    let attrs = feature_columns(features, data)
        .into_iter()
        .map(|name| Attribute::nominal(name, ["0", "1"]))
        .collect();
    let columns = features
        .iter()
        .map(|f| {
            data.instances()
                .iter()
                .map(|i| Value::Nominal(u32::from(f.matches(i))))
                .collect()
        })
        .collect();
    data.with_columns(attrs, columns)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reduced {
    pub dataset: Dataset,
    pub removed: Vec<usize>,
    pub outliers: ClassOutlierReport,
}

/// The training data without its class outliers. A class whose every
/// instance is an outlier keeps its lowest-scoring one.
pub fn remove_outliers_baseline(train: &Dataset, config: &PipelineConfig) -> Result<Reduced> {
    config.validate()?;
    let metric = config.metric.unwrap_or_else(|| Metric::for_dataset(train));
    let view = encode(train, metric)?;
    let outliers = detect_class_outliers(train, &view, &config.lof)?;
    let mut removed: BTreeSet<usize> = outliers.outliers.clone();
    for class in &outliers.classes {
        if class.scored && class.outliers.len() == class.size {
            let keep = class
                .scores
                .iter()
                .min_by(|a, b| a.score.total_cmp(&b.score).then(a.id.cmp(&b.id)))
                .map(|s| s.id)
                .expect("scored class is non-empty");
            log::warn!("every instance of class '{}' is an outlier; keeping instance {}", class.label, keep);
            removed.remove(&keep);
        }
    }
    let dataset = train.subset(train.ids().filter(|id| !removed.contains(id)));
    Ok(Reduced {
        dataset,
        removed: removed.into_iter().collect(),
        outliers,
    })
}

/// Number of folds actually used: the request, lowered to the smallest
/// class size when some class is too small.
pub fn effective_folds(data: &Dataset, requested: usize) -> Result<usize> {
    let smallest = data.class_counts().into_iter().filter(|&c| c > 0).min().unwrap_or(0);
    if smallest < 2 {
        return Err(Error::Data("every class needs at least two instances for cross-validation".into()));
    }
    if smallest < requested {
        log::warn!("smallest class has {} instances; using {} folds instead of {}", smallest, smallest, requested);
        return Ok(smallest);
    }
    Ok(requested)
}

/// Test ids of each fold. Each class is shuffled with a seeded generator
/// and dealt round-robin, continuing where the previous class stopped.
pub fn stratified_folds(data: &Dataset, folds: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![Vec::new(); folds];
    let mut next = 0;
    for mut ids in data.class_partition() {
        ids.shuffle(&mut rng);
        for id in ids {
            out[next].push(id);
            next = (next + 1) % folds;
        }
    }
    for fold in &mut out {
        fold.sort_unstable();
    }
    out
}

/// Independent re-check of a construction's guarantees.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Soundness {
    pub features_checked: usize,
    /// Features whose cover on their source neighborhood mixes labels, or
    /// whose source neighborhood is not among the merged ones.
    pub inconsistent: usize,
    pub below_support: usize,
    /// True iff no two merged neighborhoods still qualify for merging.
    pub merge_fixed_point: bool,
}

impl Soundness {
    pub fn ok(&self) -> bool {
        self.inconsistent == 0 && self.below_support == 0 && self.merge_fixed_point
    }
}

pub fn verify_construction(train: &Dataset, construction: &Construction) -> Soundness {
    let mut report = Soundness {
        merge_fixed_point: !has_mergeable_pair(&construction.neighborhoods),
        ..Soundness::default()
    };
    for f in &construction.features {
        report.features_checked += 1;
        let origin: BTreeSet<usize> = f.origin.iter().copied().collect();
        let home = construction.neighborhoods.iter().find(|n| n.sources == origin);
        let consistent = home.is_some_and(|n| {
            let mut labels = BTreeSet::new();
            for id in n.members.iter().chain(&n.sources) {
                let inst = train.instance(*id).expect("neighborhood ids come from the training set");
                if f.tests.iter().all(|t| t.matches(inst)) {
                    labels.insert(inst.label);
                }
            }
            labels.len() <= 1
        });
        if !consistent {
            report.inconsistent += 1;
        }
        let support = train
            .instances()
            .iter()
            .filter(|i| f.tests.iter().all(|t| t.matches(i)))
            .count();
        if support < construction.min_support {
            report.below_support += 1;
        }
    }
    report
}

/// Panics if any id handed to a training-side stage belongs to the test
/// fold. Returns the number of ids checked.
fn guard<'a>(stage: &str, ids: impl IntoIterator<Item = &'a usize>, test: &BTreeSet<usize>) -> usize {
    let mut n = 0;
    for id in ids {
        assert!(!test.contains(id), "test instance {} reached {}", id, stage);
        n += 1;
    }
    n
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub sd: f64,
}

impl MeanSd {
    pub fn of(values: &[f64]) -> MeanSd {
        if values.is_empty() {
            return MeanSd { mean: 0.0, sd: 0.0 };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        MeanSd { mean, sd }
    }
}

impl fmt::Display for MeanSd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2} ± {:.2}", self.mean, self.sd)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub train_size: usize,
    pub test_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outliers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixed_outliers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes_without_outliers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neighborhoods: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub removed: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soundness: Option<Soundness>,
    /// Ids checked against the test fold before reaching a training stage.
    pub leakage_checks: usize,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
}

impl FoldResult {
    fn new(fold: usize, train: &Dataset, test: &Dataset) -> FoldResult {
        FoldResult {
            fold,
            train_size: train.len(),
            test_size: test.len(),
            outliers: None,
            mixed_outliers: None,
            classes_without_outliers: None,
            neighborhoods: None,
            features: None,
            iterations: None,
            removed: None,
            soundness: None,
            leakage_checks: 0,
            train_accuracy: 0.0,
            test_accuracy: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: Method,
    pub train_accuracy: MeanSd,
    pub test_accuracy: MeanSd,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outliers: Option<MeanSd>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixed_outliers: Option<MeanSd>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes_without_outliers: Option<MeanSd>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neighborhoods: Option<MeanSd>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<MeanSd>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<MeanSd>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub removed: Option<MeanSd>,
    /// Test accuracy above the unaugmented run.
    pub improved: bool,
    /// Training accuracy above the unaugmented run while test accuracy is
    /// not.
    pub overfit: bool,
    pub folds: Vec<FoldResult>,
}

impl MethodReport {
    pub fn from_folds(method: Method, folds: Vec<FoldResult>) -> MethodReport {
        fn stat(folds: &[FoldResult], get: impl Fn(&FoldResult) -> Option<usize>) -> Option<MeanSd> {
            let values: Option<Vec<f64>> = folds.iter().map(|f| get(f).map(|v| v as f64)).collect();
            values.filter(|v| !v.is_empty()).map(|v| MeanSd::of(&v))
        }
        let train: Vec<f64> = folds.iter().map(|f| f.train_accuracy).collect();
        let test: Vec<f64> = folds.iter().map(|f| f.test_accuracy).collect();
        MethodReport {
            method,
            train_accuracy: MeanSd::of(&train),
            test_accuracy: MeanSd::of(&test),
            outliers: stat(&folds, |f| f.outliers),
            mixed_outliers: stat(&folds, |f| f.mixed_outliers),
            classes_without_outliers: stat(&folds, |f| f.classes_without_outliers),
            neighborhoods: stat(&folds, |f| f.neighborhoods),
            features: stat(&folds, |f| f.features),
            iterations: stat(&folds, |f| f.iterations),
            removed: stat(&folds, |f| f.removed),
            improved: false,
            overfit: false,
            folds,
        }
    }
}

/// Accuracies are compared at the two decimals shown in tables.
fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Sets `improved` and `overfit` on every row against the unaugmented row.
/// Rows stay unflagged when there is no unaugmented row.
pub fn assign_flags(methods: &mut [MethodReport]) {
    let Some(reference) = methods.iter().find(|m| m.method == Method::None).cloned() else {
        return;
    };
    for m in methods.iter_mut() {
        if m.method == Method::None {
            m.improved = false;
            m.overfit = false;
            continue;
        }
        m.improved = round2(m.test_accuracy.mean) > round2(reference.test_accuracy.mean);
        m.overfit = !m.improved && round2(m.train_accuracy.mean) > round2(reference.train_accuracy.mean);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub instances: usize,
    pub attributes: usize,
    pub classes: usize,
    pub folds: usize,
    pub config: PipelineConfig,
    pub methods: Vec<MethodReport>,
}

impl EvalReport {
    pub fn method(&self, method: Method) -> Option<&MethodReport> {
        self.methods.iter().find(|m| m.method == method)
    }
}

fn run_fold(data: &Dataset, config: &PipelineConfig, fold: usize, test_ids: &[usize]) -> Result<Vec<FoldResult>> {
    let test_set: BTreeSet<usize> = test_ids.iter().copied().collect();
    let train = data.subset(data.ids().filter(|id| !test_set.contains(id)));
    let test = data.subset(test_ids.iter().copied());
    let base_checks = guard("the training folds", &train.ids().collect::<Vec<_>>(), &test_set);

    let mut results = Vec::new();
    for method in config.evaluated_methods() {
        let mut r = FoldResult::new(fold, &train, &test);
        r.leakage_checks = base_checks;
        let (fit_on, eval_test) = match method {
            Method::None => (train.clone(), test.clone()),
            Method::Cobfc => {
                let c = construct_features(&train, config)?;
                r.leakage_checks += guard("outlier detection", &c.outliers.outliers, &test_set);
                for n in &c.neighborhoods {
                    r.leakage_checks += guard("neighborhood mining", &n.mining_set(), &test_set);
                }
                r.outliers = Some(c.outliers.outliers.len());
                r.mixed_outliers = Some(c.mixed_outliers);
                r.classes_without_outliers = Some(c.outliers.classes_without_outliers);
                r.neighborhoods = Some(c.neighborhoods.len());
                r.features = Some(c.features.len());
                r.soundness = Some(verify_construction(&train, &c));
                (augment(&train, &c.features)?, augment(&test, &c.features)?)
            }
            Method::Dcfringe => {
                let res = dcfringe::dc_fringe(&train, config.max_iterations)?;
                r.leakage_checks += guard("DC-Fringe", &res.dataset.ids().collect::<Vec<_>>(), &test_set);
                r.features = Some(res.features.len());
                r.iterations = Some(res.iterations);
                let test_aug = dcfringe::apply(&res.features, &test)?;
                (res.dataset, test_aug)
            }
            Method::Baseline => {
                let reduced = remove_outliers_baseline(&train, config)?;
                r.leakage_checks += guard("outlier removal", &reduced.dataset.ids().collect::<Vec<_>>(), &test_set);
                r.outliers = Some(reduced.outliers.outliers.len());
                r.classes_without_outliers = Some(reduced.outliers.classes_without_outliers);
                r.removed = Some(reduced.removed.len());
                (reduced.dataset, test.clone())
            }
        };
        let model = config.learner.fit(&fit_on);
        r.train_accuracy = accuracy(model.as_ref(), &fit_on);
        r.test_accuracy = accuracy(model.as_ref(), &eval_test);
        results.push(r);
    }
    Ok(results)
}

/// Stack size for fold workers; tree growth recurses once per level.
const WORKER_STACK: usize = 64 << 20;

/// Stratified cross-validation of every configured arm. Folds run in
/// parallel; results are assembled in fold order.
pub fn cross_validate(data: &Dataset, config: &PipelineConfig) -> Result<EvalReport> {
    config.validate()?;
    let folds = effective_folds(data, config.folds)?;
    let assignment = stratified_folds(data, folds, config.seed);
    let pool = rayon::ThreadPoolBuilder::new()
        .stack_size(WORKER_STACK)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {}", e)))?;
    let per_fold: Vec<Vec<FoldResult>> = pool.install(|| {
        assignment
            .par_iter()
            .enumerate()
            .map(|(i, test)| run_fold(data, config, i, test))
            .collect::<Result<_>>()
    })?;

    let methods = config.evaluated_methods();
    let mut reports: Vec<MethodReport> = methods
        .iter()
        .enumerate()
        .map(|(m, &method)| MethodReport::from_folds(method, per_fold.iter().map(|f| f[m].clone()).collect()))
        .collect();
    assign_flags(&mut reports);
    Ok(EvalReport {
        dataset: data.relation().to_string(),
        instances: data.len(),
        attributes: data.attributes().len(),
        classes: data.class_labels().len(),
        folds,
        config: config.clone(),
        methods: reports,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub min_support_pct: f64,
    pub min_support: usize,
    pub features: usize,
}

pub const SWEEP_PERCENTAGES: [f64; 6] = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];

/// Feature counts on the whole of `data` for each support percentage.
pub fn support_sweep(data: &Dataset, config: &PipelineConfig, percentages: &[f64]) -> Result<Vec<SweepPoint>> {
    percentages
        .iter()
        .map(|&pct| {
            let cfg = PipelineConfig {
                min_support_pct: pct,
                ..config.clone()
            };
            let c = construct_features(data, &cfg)?;
            Ok(SweepPoint {
                min_support_pct: pct,
                min_support: c.min_support,
                features: c.features.len(),
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<ReportFormat> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "md" | "markdown" => Ok(ReportFormat::Markdown),
            _ => Err(Error::Config(format!("unknown report format '{}' (expected json or md)", s))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub runs: Vec<EvalReport>,
}

pub fn render(report: &Report, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::Markdown => {
            let mut s = accuracy_table(&report.runs);
            s.push('\n');
            s.push_str(&characteristics_table(&report.runs));
            s
        }
    }
}

/// `**x**` when improved, `<u>x</u>` when over-fitting.
fn emphasize(cell: String, m: &MethodReport) -> String {
    if m.improved {
        format!("**{}**", cell)
    } else if m.overfit {
        format!("<u>{}</u>", cell)
    } else {
        cell
    }
}

fn arms(runs: &[EvalReport]) -> Vec<Method> {
    let set: BTreeSet<Method> = runs
        .iter()
        .flat_map(|r| r.methods.iter().map(|m| m.method))
        .filter(|&m| m != Method::None)
        .collect();
    set.into_iter().collect()
}

/// Train and test accuracy of the unaugmented run, test accuracy of each
/// arm, then per-arm counts of improved and over-fitting datasets.
pub fn accuracy_table(runs: &[EvalReport]) -> String {
    let arms = arms(runs);
    let mut s = String::from("| Data set | Train | Test |");
    let mut rule = String::from("|---|---|---|");
    for a in &arms {
        s.push_str(&format!(" {} |", a.title()));
        rule.push_str("---|");
    }
    s.push('\n');
    s.push_str(&rule);
    s.push('\n');
    for run in runs {
        let none = run.method(Method::None);
        let cell = |f: fn(&MethodReport) -> MeanSd| none.map_or(String::new(), |m| f(m).to_string());
        s.push_str(&format!(
            "| {} | {} | {} |",
            run.dataset,
            cell(|m| m.train_accuracy),
            cell(|m| m.test_accuracy)
        ));
        for a in &arms {
            let text = run
                .method(*a)
                .map_or(String::new(), |m| emphasize(m.test_accuracy.to_string(), m));
            s.push_str(&format!(" {} |", text));
        }
        s.push('\n');
    }
    for (label, pick) in [
        ("Improvements", (|m: &MethodReport| m.improved) as fn(&MethodReport) -> bool),
        ("Over-fitting", |m: &MethodReport| m.overfit),
    ] {
        s.push_str(&format!("| {} | | |", label));
        for a in &arms {
            let n = runs.iter().filter_map(|r| r.method(*a)).filter(|m| pick(m)).count();
            s.push_str(&format!(" {} |", n));
        }
        s.push('\n');
    }
    s
}

/// Fold means of the construction statistics.
pub fn characteristics_table(runs: &[EvalReport]) -> String {
    let mut s = String::from(
        "| Data set | Outliers | Mixed outliers | Classes w/o outliers | Merged neighborhoods | CobFC features | DC-Fringe features | DC-Fringe iterations |\n\
         |---|---|---|---|---|---|---|---|\n",
    );
    let fmt = |v: Option<MeanSd>| v.map_or("-".to_string(), |m| format!("{:.2}", m.mean));
    for run in runs {
        let cob = run.method(Method::Cobfc);
        let dcf = run.method(Method::Dcfringe);
        s.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} | {} | {} |\n",
            run.dataset,
            fmt(cob.and_then(|m| m.outliers)),
            fmt(cob.and_then(|m| m.mixed_outliers)),
            fmt(cob.and_then(|m| m.classes_without_outliers)),
            fmt(cob.and_then(|m| m.neighborhoods)),
            fmt(cob.and_then(|m| m.features)),
            fmt(dcf.and_then(|m| m.features)),
            fmt(dcf.and_then(|m| m.iterations)),
        ));
    }
    s
}

/// One row per dataset, one column per support percentage, CobFC test
/// accuracy with the same emphasis as the accuracy table.
pub fn sweep_table(rows: &[(String, Vec<(f64, MethodReport)>)]) -> String {
    let percentages: Vec<f64> = rows.first().map_or(Vec::new(), |(_, r)| r.iter().map(|(p, _)| *p).collect());
    let mut s = String::from("| Data set |");
    let mut rule = String::from("|---|");
    for p in &percentages {
        s.push_str(&format!(" {}% |", p));
        rule.push_str("---|");
    }
    s.push('\n');
    s.push_str(&rule);
    s.push('\n');
    for (name, cells) in rows {
        s.push_str(&format!("| {} |", name));
        for (_, m) in cells {
            s.push_str(&format!(" {} |", emphasize(m.test_accuracy.to_string(), m)));
        }
        s.push('\n');
    }
    s
}
