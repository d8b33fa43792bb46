use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use cobfc::data::{encode, parse_dataset, write_dataset, Dataset, Format, Metric};
use cobfc::dcfringe::{self, DEFAULT_MAX_ITERATIONS};
use cobfc::harness::{
    self, construct_features, cross_validate, feature_columns, render, support_sweep, Method, PipelineConfig, Report,
    ReportFormat, SWEEP_PERCENTAGES,
};
use cobfc::learners::LearnerKind;
use cobfc::lof::{detect_class_outliers, LofParams};
use cobfc::neighborhood::{gate_mixed_class, k_neighborhood};
use cobfc::ruleminer::FeatureRecord;
use cobfc::synth;

#[derive(Parser)]
#[command(name = "cobfc", version, about = "Class-outlier based feature construction and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cross-validate the unaugmented data against the chosen arms.
    Run(RunArgs),
    /// Build features on a whole dataset and write the augmented data.
    Construct(ConstructArgs),
    /// Run DC-Fringe on a whole dataset and write the augmented data.
    Dcfringe(FringeArgs),
    /// Dump per-class LOF scores, outliers and neighborhoods as JSON.
    Outliers(ConstructArgs),
    /// Feature counts (or CobFC accuracies) over minimum-support values.
    Sweep(SweepArgs),
    /// Write one of the built-in synthetic datasets.
    Synth(SynthArgs),
}

#[derive(Args)]
struct Input {
    /// ARFF or CSV file; the format follows the extension.
    #[arg(long, short)]
    input: PathBuf,
    /// Class column name; defaults to the last column.
    #[arg(long)]
    class: Option<String>,
}

#[derive(Args, Clone)]
struct PipelineArgs {
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 10)]
    min_pts: usize,
    #[arg(long, default_value_t = 1.5)]
    lof_threshold: f64,
    #[arg(long, default_value_t = 0.0)]
    min_support_pct: f64,
    /// euclidean or manhattan; picked from the attribute types if omitted.
    #[arg(long, value_parser = parse_metric)]
    metric: Option<Metric>,
}

impl PipelineArgs {
    fn config(&self) -> PipelineConfig {
        PipelineConfig {
            k: self.k,
            lof: LofParams {
                min_pts: self.min_pts,
                threshold: self.lof_threshold,
            },
            min_support_pct: self.min_support_pct,
            metric: self.metric,
            ..PipelineConfig::default()
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Repeat for several datasets in one report.
    #[arg(long, short, required = true)]
    input: Vec<PathBuf>,
    #[arg(long)]
    class: Option<String>,
    /// cobfc, dcfringe, baseline or none; repeat or comma-separate.
    #[arg(long, value_delimiter = ',', default_values_t = [Method::Cobfc, Method::Dcfringe, Method::Baseline])]
    method: Vec<Method>,
    /// nb or tree.
    #[arg(long, default_value = "nb", value_parser = parse_learner)]
    learner: LearnerKind,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
    max_iterations: usize,
    /// json or md.
    #[arg(long, default_value = "json")]
    report: ReportFormat,
    /// Write the report here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ConstructArgs {
    #[command(flatten)]
    input: Input,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Feature (or outlier) JSON; stdout if omitted.
    #[arg(long)]
    features: Option<PathBuf>,
    /// Augmented dataset, ARFF or CSV by extension.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct FringeArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
    max_iterations: usize,
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, short, required = true)]
    input: Vec<PathBuf>,
    #[arg(long)]
    class: Option<String>,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Support percentages; defaults to 0 through 5.
    #[arg(long, value_delimiter = ',')]
    pct: Vec<f64>,
    /// Cross-validate CobFC at every percentage and print a markdown table.
    #[arg(long)]
    evaluate: bool,
    #[arg(long, default_value = "nb", value_parser = parse_learner)]
    learner: LearnerKind,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
struct SynthArgs {
    /// figure-one, xor, grids, rings, checkerboard or linear.
    #[arg(long)]
    kind: String,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, short)]
    output: PathBuf,
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    match s {
        "euclidean" | "euclidean_normalized" => Ok(Metric::EuclideanNormalized),
        "manhattan" | "manhattan_binarized" => Ok(Metric::ManhattanBinarized),
        _ => Err(format!("unknown metric '{}' (expected euclidean or manhattan)", s)),
    }
}

fn parse_learner(s: &str) -> Result<LearnerKind, String> {
    match s {
        "nb" => Ok(LearnerKind::NaiveBayes),
        "tree" => Ok(LearnerKind::Tree),
        _ => Err(format!("unknown learner '{}' (expected nb or tree)", s)),
    }
}

fn load(path: &Path, class: Option<&str>) -> Result<Dataset> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let ds = parse_dataset(&bytes, Format::from_path(path), class).with_context(|| format!("parsing {}", path.display()))?;
    // CSV has no relation name; use the file stem.
    if ds.relation() == "data" {
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            return Ok(ds.with_relation(stem));
        }
    }
    Ok(ds)
}

fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(bytes).context("writing to stdout")
        }
    }
}

fn emit_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    emit(path, s.as_bytes())
}

fn run(args: RunArgs) -> Result<()> {
    let config = PipelineConfig {
        learner: args.learner,
        folds: args.folds,
        seed: args.seed,
        methods: args.method.clone(),
        max_iterations: args.max_iterations,
        ..args.pipeline.config()
    };
    config.validate()?;
    let mut report = Report::default();
    for path in &args.input {
        let ds = load(path, args.class.as_deref())?;
        log::info!("{}", ds);
        report.runs.push(cross_validate(&ds, &config)?);
    }
    emit(args.output.as_deref(), render(&report, args.report).as_bytes())
}

#[derive(Serialize)]
struct FeatureFile {
    dataset: String,
    min_support: usize,
    outliers: usize,
    mixed_outliers: usize,
    neighborhoods: usize,
    features: Vec<FeatureRecord>,
}

fn construct(args: ConstructArgs) -> Result<()> {
    let ds = load(&args.input.input, args.input.class.as_deref())?;
    let config = args.pipeline.config();
    let c = construct_features(&ds, &config)?;
    let names = feature_columns(&c.features, &ds);
    let records = c
        .features
        .iter()
        .zip(names)
        .map(|(f, name)| FeatureRecord {
            name,
            ..f.to_record(&ds)
        })
        .collect();
    let file = FeatureFile {
        dataset: ds.relation().to_string(),
        min_support: c.min_support,
        outliers: c.outliers.outliers.len(),
        mixed_outliers: c.mixed_outliers,
        neighborhoods: c.neighborhoods.len(),
        features: records,
    };
    if let Some(out) = &args.output {
        let aug = harness::augment(&ds, &c.features)?;
        emit(Some(out), &write_dataset(&aug, Format::from_path(out)))?;
    }
    emit_json(args.features.as_deref(), &file)
}

#[derive(Serialize)]
struct FringeFile {
    dataset: String,
    iterations: usize,
    stop_reason: dcfringe::StopReason,
    features: Vec<dcfringe::FringeRecord>,
}

fn fringe(args: FringeArgs) -> Result<()> {
    let ds = load(&args.input.input, args.input.class.as_deref())?;
    let r = dcfringe::dc_fringe(&ds, args.max_iterations)?;
    if let Some(out) = &args.output {
        emit(Some(out), &write_dataset(&r.dataset, Format::from_path(out)))?;
    }
    let file = FringeFile {
        dataset: ds.relation().to_string(),
        iterations: r.iterations,
        stop_reason: r.stop_reason,
        features: dcfringe::records(&r.features, &r.dataset),
    };
    emit_json(args.features.as_deref(), &file)
}

#[derive(Serialize)]
struct OutlierFile {
    dataset: String,
    metric: Metric,
    report: cobfc::lof::ClassOutlierReport,
    neighborhoods: Vec<cobfc::neighborhood::Neighborhood>,
    mixed: Vec<usize>,
    merged: Vec<cobfc::neighborhood::Neighborhood>,
}

fn outliers(args: ConstructArgs) -> Result<()> {
    let ds = load(&args.input.input, args.input.class.as_deref())?;
    let config = args.pipeline.config();
    config.validate()?;
    let metric = config.metric.unwrap_or_else(|| Metric::for_dataset(&ds));
    let view = encode(&ds, metric)?;
    let report = detect_class_outliers(&ds, &view, &config.lof)?;
    let neighborhoods = report
        .outliers
        .iter()
        .map(|&id| k_neighborhood(&view, &ds, id, config.k))
        .collect::<cobfc::Result<Vec<_>>>()?;
    let mixed_sets: Vec<_> = neighborhoods.iter().filter(|n| gate_mixed_class(n, &ds)).cloned().collect();
    let mixed = mixed_sets.iter().flat_map(|n| n.sources.iter().copied()).collect();
    let merged = cobfc::neighborhood::merge_neighborhoods(mixed_sets, &ds);
    let file = OutlierFile {
        dataset: ds.relation().to_string(),
        metric,
        report,
        neighborhoods,
        mixed,
        merged,
    };
    emit_json(args.features.as_deref().or(args.output.as_deref()), &file)
}

fn sweep(args: SweepArgs) -> Result<()> {
    let pcts = if args.pct.is_empty() {
        SWEEP_PERCENTAGES.to_vec()
    } else {
        args.pct.clone()
    };
    let base = PipelineConfig {
        learner: args.learner,
        folds: args.folds,
        seed: args.seed,
        methods: vec![Method::Cobfc],
        ..args.pipeline.config()
    };
    base.validate()?;
    if !args.evaluate {
        #[derive(Serialize)]
        struct Row {
            dataset: String,
            points: Vec<harness::SweepPoint>,
        }
        let mut rows = Vec::new();
        for path in &args.input {
            let ds = load(path, args.class.as_deref())?;
            rows.push(Row {
                dataset: ds.relation().to_string(),
                points: support_sweep(&ds, &base, &pcts)?,
            });
        }
        return emit_json(None, &rows);
    }
    let mut rows = Vec::new();
    for path in &args.input {
        let ds = load(path, args.class.as_deref())?;
        let mut cells = Vec::new();
        for &pct in &pcts {
            let cfg = PipelineConfig {
                min_support_pct: pct,
                ..base.clone()
            };
            let r = cross_validate(&ds, &cfg)?;
            let cob = r.method(Method::Cobfc).cloned().context("missing CobFC row")?;
            cells.push((pct, cob));
        }
        rows.push((ds.relation().to_string(), cells));
    }
    emit(None, harness::sweep_table(&rows).as_bytes())
}

fn synth_cmd(args: SynthArgs) -> Result<()> {
    let ds = match args.kind.as_str() {
        "figure-one" => synth::figure_one(args.seed).dataset,
        "xor" => synth::xor_blobs(args.seed),
        "grids" => synth::separated_grids(),
        "rings" => synth::rings(args.seed),
        "checkerboard" => synth::checkerboard(args.seed),
        "linear" => synth::noisy_linear(args.seed),
        other => bail!("unknown synthetic dataset '{}'", other),
    };
    emit(Some(&args.output), &write_dataset(&ds, Format::from_path(&args.output)))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Construct(a) => construct(a),
        Command::Dcfringe(a) => fringe(a),
        Command::Outliers(a) => outliers(a),
        Command::Sweep(a) => sweep(a),
        Command::Synth(a) => synth_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e);
            ExitCode::from(2)
        }
    }
}
