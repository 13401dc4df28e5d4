//! The `cbir` command line.
//!
//! Every subcommand that writes files also writes a [`RunManifest`] next to
//! them; [`replay`] re-runs a manifest after checking its input hashes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::parser::ValueSource;
use clap::{ArgAction, ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{load_feature_set, read_manifest, save_feature_set, FeatureFormat, FeatureSet, SplitSpec};
use crate::error::{Error, Result};
use crate::eval::{run_experiments_cached, EvalReport, Experiment, ExperimentConfig};
use crate::features::{color_histogram, gabor_features, hog_features, GaborSpec, ImageBuffer};
use crate::metrics::MetricKind;
use crate::reduce::{DctSpec, PdfRange, PdfSpec};
use crate::retrieval::{
    apply_pipeline, fit_transform, rank_query, transform_set, DictCache, DictLearnSpec, DictSource, StageSpec,
    TransformPipeline,
};
use crate::sparse::{encode_set, read_dictionary, write_dictionary, ClAlgorithm, ClSpec, Lambda, Learner};

const IMAGE_EXTENSIONS: [&str; 7] = ["png", "jpg", "jpeg", "bmp", "pgm", "ppm", "pnm"];

#[derive(Debug, Parser)]
#[command(name = "cbir", version, about = "Content-based image retrieval with sparse representations")]
struct Cli {
    /// Worker threads (default: available parallelism)
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute low-level features from a directory of images
    Extract(ExtractArgs),
    /// Learn a dictionary from a feature set
    LearnDict(LearnDictArgs),
    /// Replace every feature vector by its sparse code
    Encode(EncodeArgs),
    /// Apply transforms (in flag order) to a feature set
    Reduce(ReduceArgs),
    /// Rank a gallery against one query
    Query(QueryArgs),
    /// Run one retrieval experiment and write its report
    Evaluate(EvaluateArgs),
    /// Collect summary lines into a table
    Report(ReportArgs),
    /// Evaluate dictionary size x learner x metric grids
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Binary,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FeatureKind {
    Gabor,
    Hist,
    Hog,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SplitArg {
    Holdout,
    Loocv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TableValue {
    Map,
    Er,
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Feature file (CSV or binary)
    #[arg(long, value_name = "FILE")]
    features: PathBuf,
    /// `id,label` manifest
    #[arg(long, value_name = "FILE")]
    manifest: PathBuf,
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Output format (default: binary for .cbfv/.bin, otherwise CSV)
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Debug, Args)]
struct TransformArgs {
    /// DCT, keeping the first N coefficients or `all`
    #[arg(long, value_name = "KEEP", num_args = 0..=1, default_missing_value = "all", action = ArgAction::Append)]
    dct: Vec<DctSpec>,
    /// Z-score normalization fitted on the training vectors
    #[arg(long, action = ArgAction::Count)]
    zscore: u8,
    /// PCA to K components
    #[arg(long, value_name = "K", action = ArgAction::Append)]
    pca: Vec<usize>,
    /// Haar wavelet approximation, repeated LEVELS times
    #[arg(long, value_name = "LEVELS", action = ArgAction::Append)]
    dwt: Vec<usize>,
    /// Histogram of each vector's values with BINS bins
    #[arg(long, value_name = "BINS", action = ArgAction::Append)]
    pdf: Vec<usize>,
    /// Fixed histogram range for --pdf (default: per-vector min and max)
    #[arg(long, value_name = "LO:HI")]
    pdf_range: Option<String>,
}

#[derive(Debug, Args)]
struct ClArgs {
    /// Coefficient learner
    #[arg(long, default_value = "homotopy")]
    cl: ClAlgorithm,
    /// l1 weight: `0.1` means 0.1 x lambda_max per signal, `abs:0.5` is absolute
    #[arg(long, default_value = "0.1")]
    lambda: Lambda,
    /// Elastic-net l2 weight (default: the resolved l1 weight)
    #[arg(long)]
    lambda2: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
}

impl ClArgs {
    fn spec(&self) -> ClSpec {
        let mut spec = ClSpec::new(self.cl)
            .with_lambda(self.lambda)
            .with_max_iter(self.max_iter)
            .with_tol(self.tol);
        if let Some(l2) = self.lambda2 {
            spec = spec.with_lambda2(l2);
        }
        spec
    }
}

#[derive(Debug, Args)]
struct DictArgs {
    /// Learn a dictionary with this method and sparse-encode as the last stage
    #[arg(long, value_name = "METHOD", conflicts_with = "dict")]
    dict_method: Option<Learner>,
    /// Dictionary size K
    #[arg(long, default_value_t = 10)]
    dict_size: usize,
    #[arg(long, default_value_t = 0)]
    dict_seed: u64,
    /// Learning iterations (default: 100 for kmeans, 50 for ksvd)
    #[arg(long)]
    dict_iters: Option<usize>,
    /// K-SVD nonzeros per signal (default: max(2, K/10))
    #[arg(long)]
    sparsity: Option<usize>,
    /// Use a saved dictionary and sparse-encode as the last stage
    #[arg(long, value_name = "FILE")]
    dict: Option<PathBuf>,
}

impl DictArgs {
    fn learn_spec(&self, method: Learner, size: usize) -> DictLearnSpec {
        let mut spec = DictLearnSpec::new(method, size, self.dict_seed);
        if let Some(iters) = self.dict_iters {
            spec.iters = iters;
        }
        spec.sparsity = self.sparsity;
        spec
    }
}

#[derive(Debug, Args)]
struct SplitArgs {
    #[arg(long, value_enum, default_value = "holdout")]
    split: SplitArg,
    /// Holdout: test items drawn from each class
    #[arg(long, default_value_t = 10)]
    test_per_class: usize,
    /// Holdout: split seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Leave-one-out: refit every stage without the query
    #[arg(long)]
    strict_loocv: bool,
    /// Length of the error-rate curve
    #[arg(long, default_value_t = 99)]
    er_ranks: usize,
}

impl SplitArgs {
    fn spec(&self) -> SplitSpec {
        match self.split {
            SplitArg::Holdout => SplitSpec::holdout(self.test_per_class, self.seed),
            SplitArg::Loocv => SplitSpec::loocv(),
        }
    }
}

#[derive(Debug, Args)]
struct ExtractArgs {
    #[arg(long, value_enum)]
    kind: FeatureKind,
    /// Image directory; files are matched to manifest ids by name or stem
    #[arg(long = "in", value_name = "DIR")]
    input: PathBuf,
    #[arg(long, value_name = "FILE")]
    manifest: PathBuf,
    #[command(flatten)]
    output: OutputArgs,
    /// Histogram bins per channel (hist) or orientation bins (hog)
    #[arg(long)]
    bins: Option<usize>,
    /// HOG cell size in pixels
    #[arg(long, default_value_t = 8)]
    cell: usize,
    #[arg(long, default_value_t = 5)]
    scales: usize,
    #[arg(long, default_value_t = 5)]
    orientations: usize,
    /// Keep the Gabor kernel DC component
    #[arg(long)]
    no_zero_mean: bool,
}

#[derive(Debug, Args)]
struct LearnDictArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value = "ksvd")]
    method: Learner,
    #[arg(long, default_value_t = 10)]
    size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Iterations (default: 100 for kmeans, 50 for ksvd)
    #[arg(long)]
    iters: Option<usize>,
    /// K-SVD nonzeros per signal (default: max(2, K/10))
    #[arg(long)]
    sparsity: Option<usize>,
    /// Dictionary file to write
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EncodeArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_name = "FILE")]
    dict: PathBuf,
    #[command(flatten)]
    cl: ClArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct ReduceArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    transforms: TransformArgs,
    /// Apply a saved pipeline instead of fitting transforms
    #[arg(long, value_name = "FILE", conflicts_with_all = ["dct", "zscore", "pca", "dwt", "pdf"])]
    pipeline: Option<PathBuf>,
    /// Save the fitted pipeline as JSON
    #[arg(long, value_name = "FILE")]
    save_pipeline: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct QueryArgs {
    /// Gallery features (raw; the pipeline is applied to them)
    #[arg(long, value_name = "FILE")]
    gallery: PathBuf,
    #[arg(long, value_name = "FILE")]
    manifest: PathBuf,
    /// Saved pipeline (default: identity)
    #[arg(long, value_name = "FILE")]
    pipeline: Option<PathBuf>,
    #[arg(long, default_value = "ed")]
    metric: MetricKind,
    #[arg(long, value_name = "ID")]
    query_id: String,
    /// Feature file holding the query (default: the gallery)
    #[arg(long, value_name = "FILE", requires = "query_manifest")]
    queries: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    query_manifest: Option<PathBuf>,
    /// Print only the K nearest
    #[arg(long, value_name = "K")]
    top: Option<usize>,
    /// Also write the ranking to this CSV file
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    split: SplitArgs,
    #[command(flatten)]
    transforms: TransformArgs,
    #[command(flatten)]
    dict: DictArgs,
    #[command(flatten)]
    cl: ClArgs,
    #[arg(long, default_value = "ed")]
    metric: MetricKind,
    /// Also write every ranking to rankings.csv
    #[arg(long)]
    save_rankings: bool,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Summary files or directories searched recursively for summary.txt
    #[arg(required = true, value_name = "PATH")]
    inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "map")]
    value: TableValue,
    /// Write the table here as well as to stdout
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    split: SplitArgs,
    #[command(flatten)]
    transforms: TransformArgs,
    #[arg(long, value_delimiter = ',', default_value = "kmeans,ksvd")]
    methods: Vec<Learner>,
    #[arg(long, value_delimiter = ',', default_value = "10,20,30,40,50,256,512")]
    sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "homotopy,lasso,en,ssf")]
    cls: Vec<ClAlgorithm>,
    #[arg(long, value_delimiter = ',', default_value = "ed,md,hd,cd")]
    metrics: Vec<MetricKind>,
    #[arg(long, value_delimiter = ',', default_value = "0.1")]
    lambdas: Vec<Lambda>,
    #[arg(long, default_value_t = 0)]
    dict_seed: u64,
    #[arg(long)]
    dict_iters: Option<usize>,
    #[arg(long)]
    sparsity: Option<usize>,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

/// Everything needed to re-run a command and check it saw the same inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub argv: Vec<String>,
    pub seeds: BTreeMap<String, u64>,
    /// Input path to sha256 of its contents.
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    fn new(subcommand: &str, argv: &[String]) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            argv: argv.to_vec(),
            seeds: BTreeMap::new(),
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.insert(path.display().to_string(), file_sha256(path)?);
        Ok(())
    }

    fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(bytes)))
}

/// Manifest path for a single output file: `<file>.manifest.json`.
pub fn manifest_path_for(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

/// Re-runs a recorded command after checking that every input still hashes
/// to the recorded value.
pub fn replay(manifest: impl AsRef<Path>, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let m = RunManifest::load(manifest)?;
    for (path, hash) in &m.inputs {
        let now = file_sha256(Path::new(path))?;
        if &now != hash {
            return Err(Error::Data(format!("input {path} changed since the recorded run")));
        }
    }
    Ok(run_with(&m.argv, out, err))
}

/// Runs the command line with process stdout and stderr; returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    run_with(&argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

/// Exit codes: 0 success, 1 usage error, 2 data or runtime error.
pub fn run_with(argv: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let matches = match Cli::command().try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{e}");
            return 1;
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let (mut o, mut e) = (Vec::new(), Vec::new());
    let result = match cli.jobs {
        Some(0) => Err(Error::Spec("--jobs must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Spec(e.to_string()))
            .and_then(|pool| pool.install(|| dispatch(&cli.command, name, sub, argv, &mut o, &mut e))),
        None => dispatch(&cli.command, name, sub, argv, &mut o, &mut e),
    };
    let _ = out.write_all(&o);
    let _ = err.write_all(&e);
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

fn dispatch(
    cmd: &Command,
    name: &str,
    m: &ArgMatches,
    argv: &[String],
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<()> {
    let manifest = RunManifest::new(name, argv);
    match cmd {
        Command::Extract(a) => extract(a, manifest, err),
        Command::LearnDict(a) => learn_dict(a, manifest, err),
        Command::Encode(a) => encode(a, manifest, err),
        Command::Reduce(a) => reduce(a, m, manifest),
        Command::Query(a) => query(a, manifest, out),
        Command::Evaluate(a) => evaluate(a, m, manifest, out),
        Command::Report(a) => report(a, out),
        Command::Sweep(a) => sweep(a, m, manifest, out, err),
    }
}

fn output_format(path: &Path, explicit: Option<FormatArg>) -> FeatureFormat {
    match explicit {
        Some(FormatArg::Csv) => FeatureFormat::Csv,
        Some(FormatArg::Binary) => FeatureFormat::Binary,
        None => match path.extension().and_then(|e| e.to_str()) {
            Some("cbfv" | "bin") => FeatureFormat::Binary,
            _ => FeatureFormat::Csv,
        },
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

fn load_input(input: &InputArgs, manifest: &mut RunManifest) -> Result<FeatureSet> {
    manifest.input(&input.features)?;
    manifest.input(&input.manifest)?;
    load_feature_set(&input.features, &input.manifest)
}

/// Transform stages in the order their flags appear on the command line.
fn transform_stages(t: &TransformArgs, m: &ArgMatches) -> Result<Vec<StageSpec>> {
    let pdf_range = match &t.pdf_range {
        None => PdfRange::Auto,
        Some(s) => {
            let parsed = s
                .split_once(':')
                .and_then(|(lo, hi)| Some((lo.trim().parse::<f64>().ok()?, hi.trim().parse::<f64>().ok()?)));
            match parsed {
                Some((lo, hi)) => PdfRange::Explicit { lo, hi },
                None => return Err(Error::Spec(format!("--pdf-range expects LO:HI, got `{s}`"))),
            }
        }
    };
    let positions = |id: &str| -> Vec<usize> {
        if m.value_source(id) != Some(ValueSource::CommandLine) {
            return Vec::new();
        }
        m.indices_of(id).map(|it| it.collect()).unwrap_or_default()
    };
    let mut staged: Vec<(usize, StageSpec)> = Vec::new();
    staged.extend(positions("dct").into_iter().zip(&t.dct).map(|(i, &keep)| (i, StageSpec::Dct { keep })));
    staged.extend(positions("zscore").into_iter().map(|i| (i, StageSpec::ZScore)));
    staged.extend(positions("pca").into_iter().zip(&t.pca).map(|(i, &k)| (i, StageSpec::Pca { k })));
    staged.extend(positions("dwt").into_iter().zip(&t.dwt).map(|(i, &levels)| (i, StageSpec::Dwt { levels })));
    staged.extend(positions("pdf").into_iter().zip(&t.pdf).map(|(i, &bins)| {
        (
            i,
            StageSpec::Pdf {
                spec: PdfSpec { bins, range: pdf_range },
            },
        )
    }));
    staged.sort_by_key(|(i, _)| *i);
    Ok(staged.into_iter().map(|(_, s)| s).collect())
}

fn find_image(dir: &Path, id: &str) -> Option<PathBuf> {
    let direct = dir.join(id);
    if direct.is_file() {
        return Some(direct);
    }
    IMAGE_EXTENSIONS
        .iter()
        .flat_map(|ext| [ext.to_string(), ext.to_uppercase()])
        .map(|ext| dir.join(format!("{id}.{ext}")))
        .find(|p| p.is_file())
}

fn extract(a: &ExtractArgs, mut manifest: RunManifest, err: &mut dyn Write) -> Result<()> {
    manifest.input(&a.manifest)?;
    let entries = read_manifest(&a.manifest)?;
    let gabor = GaborSpec {
        zero_mean: !a.no_zero_mean,
        ..GaborSpec::geometric(a.scales, a.orientations, 2.0, 8.0)
    };
    let rows = entries
        .par_iter()
        .map(|(id, label)| {
            let path = find_image(&a.input, id)
                .ok_or_else(|| Error::Manifest(format!("no image for id `{id}` in {}", a.input.display())))?;
            let img = ImageBuffer::open(&path)?;
            let values = match a.kind {
                FeatureKind::Gabor => gabor_features(&img, &gabor),
                FeatureKind::Hist => color_histogram(&img, a.bins.unwrap_or(8)),
                FeatureKind::Hog => hog_features(&img, a.cell, a.bins.unwrap_or(9)),
            }
            .map_err(|e| Error::Encode {
                id: id.clone(),
                source: Box::new(e),
            })?;
            Ok((id.clone(), label.clone(), values, path))
        })
        .collect::<Result<Vec<_>>>()?;
    for (_, _, _, path) in &rows {
        manifest.input(path)?;
    }
    let fs = FeatureSet::from_rows(rows.into_iter().map(|(id, label, v, _)| (id, label, v)))?;
    save_feature_set(&fs, &a.output.out, output_format(&a.output.out, a.output.format))?;
    manifest.output(&a.output.out);
    manifest.write(&manifest_path_for(&a.output.out))?;
    let _ = writeln!(err, "extracted {} x {} features", fs.len(), fs.dim());
    Ok(())
}

fn learn_dict(a: &LearnDictArgs, mut manifest: RunManifest, err: &mut dyn Write) -> Result<()> {
    let fs = load_input(&a.input, &mut manifest)?;
    let mut spec = DictLearnSpec::new(a.method, a.size, a.seed);
    if let Some(iters) = a.iters {
        spec.iters = iters;
    }
    spec.sparsity = a.sparsity;
    let dict = spec.learn(&fs)?;
    write_dictionary(&dict, &a.out)?;
    manifest.seeds.insert("dict".into(), a.seed);
    manifest.output(&a.out);
    manifest.write(&manifest_path_for(&a.out))?;
    let _ = writeln!(err, "learned {} dictionary: {} x {}", dict.learner(), dict.dim(), dict.size());
    Ok(())
}

fn encode(a: &EncodeArgs, mut manifest: RunManifest, err: &mut dyn Write) -> Result<()> {
    let fs = load_input(&a.input, &mut manifest)?;
    manifest.input(&a.dict)?;
    let dict = read_dictionary(&a.dict)?;
    let (codes, report) = encode_set(&dict, &fs, &a.cl.spec())?;
    save_feature_set(&codes, &a.output.out, output_format(&a.output.out, a.output.format))?;
    let report_path = a.output.out.with_extension("encode.json");
    std::fs::write(&report_path, serde_json::to_string_pretty(&report)? + "\n").map_err(io_err(&report_path))?;
    manifest.output(&a.output.out);
    manifest.output(&report_path);
    manifest.write(&manifest_path_for(&a.output.out))?;
    let _ = writeln!(
        err,
        "encoded {} vectors, mean nonzeros {:.3}, {} not converged",
        report.total,
        report.mean_nonzeros,
        report.not_converged.len()
    );
    Ok(())
}

fn reduce(a: &ReduceArgs, m: &ArgMatches, mut manifest: RunManifest) -> Result<()> {
    let fs = load_input(&a.input, &mut manifest)?;
    let (pipeline, reduced) = match &a.pipeline {
        Some(path) => {
            manifest.input(path)?;
            let p = TransformPipeline::load(path)?;
            let reduced = transform_set(&p, &fs)?;
            (p, reduced)
        }
        None => fit_transform(&transform_stages(&a.transforms, m)?, &fs)?,
    };
    save_feature_set(&reduced, &a.output.out, output_format(&a.output.out, a.output.format))?;
    manifest.output(&a.output.out);
    if let Some(path) = &a.save_pipeline {
        pipeline.save(path)?;
        manifest.output(path);
    }
    manifest.write(&manifest_path_for(&a.output.out))
}

fn query(a: &QueryArgs, mut manifest: RunManifest, out: &mut dyn Write) -> Result<()> {
    manifest.input(&a.gallery)?;
    manifest.input(&a.manifest)?;
    let gallery = load_feature_set(&a.gallery, &a.manifest)?;
    let pipeline = match &a.pipeline {
        Some(p) => {
            manifest.input(p)?;
            TransformPipeline::load(p)?
        }
        None => TransformPipeline::identity(gallery.dim()),
    };
    let source = match (&a.queries, &a.query_manifest) {
        (Some(q), Some(qm)) => {
            manifest.input(q)?;
            manifest.input(qm)?;
            load_feature_set(q, qm)?
        }
        _ => gallery.clone(),
    };
    let index = source
        .index_of(&a.query_id)
        .ok_or_else(|| Error::Manifest(format!("query id `{}` not found", a.query_id)))?;
    let q = apply_pipeline(&pipeline, &source.vectors()[index].values)?;
    let g = transform_set(&pipeline, &gallery)?;
    let ranked = rank_query(&g, &q, &a.query_id, a.metric)?;
    let mut text = String::from("id,distance\n");
    for (id, d) in ranked.top(a.top.unwrap_or(usize::MAX)) {
        let _ = writeln!(text, "{id},{d}");
    }
    out.write_all(text.as_bytes()).map_err(io_err(Path::new("<stdout>")))?;
    if let Some(path) = &a.out {
        std::fs::write(path, &text).map_err(io_err(path))?;
        manifest.output(path);
        manifest.write(&manifest_path_for(path))?;
    }
    Ok(())
}

fn sparse_stage(d: &DictArgs, cl: &ClArgs, manifest: &mut RunManifest) -> Result<Option<StageSpec>> {
    let source = match (&d.dict, d.dict_method) {
        (Some(path), _) => {
            manifest.input(path)?;
            DictSource::Fixed(read_dictionary(path)?)
        }
        (None, Some(method)) => {
            manifest.seeds.insert("dict".into(), d.dict_seed);
            DictSource::Learn(d.learn_spec(method, d.dict_size))
        }
        (None, None) => return Ok(None),
    };
    Ok(Some(StageSpec::SparseEncode {
        dict: source,
        cl: cl.spec(),
    }))
}

/// Writes report.json, pr.csv, er.csv and summary.txt into `dir`.
pub fn write_report_files(report: &EvalReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut pr = String::from("recall,precision\n");
    for (r, p) in &report.pr_curve {
        let _ = writeln!(pr, "{r},{p}");
    }
    let mut er = String::from("rank,er\n");
    for (k, e) in report.er_curve.iter().enumerate() {
        let _ = writeln!(er, "{},{e}", k + 1);
    }
    let files = [
        ("report.json", serde_json::to_string_pretty(report)? + "\n"),
        ("pr.csv", pr),
        ("er.csv", er),
        ("summary.txt", report.summary_line() + "\n"),
    ];
    let mut written = Vec::new();
    for (name, text) in files {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(io_err(&path))?;
        written.push(path);
    }
    Ok(written)
}

fn write_rankings(exp: &Experiment, dir: &Path) -> Result<PathBuf> {
    let mut text = String::from("query,rank,id,distance\n");
    for r in &exp.results {
        for (k, (id, d)) in r.entries.iter().enumerate() {
            let _ = writeln!(text, "{},{},{id},{d}", r.query_id, k + 1);
        }
    }
    let path = dir.join("rankings.csv");
    std::fs::write(&path, text).map_err(io_err(&path))?;
    Ok(path)
}

fn evaluate(a: &EvaluateArgs, m: &ArgMatches, mut manifest: RunManifest, out: &mut dyn Write) -> Result<()> {
    let fs = load_input(&a.input, &mut manifest)?;
    let mut stages = transform_stages(&a.transforms, m)?;
    stages.extend(sparse_stage(&a.dict, &a.cl, &mut manifest)?);
    let mut config = ExperimentConfig::new(a.split.spec(), stages, a.metric);
    config.strict_loocv = a.split.strict_loocv;
    config.er_ranks = a.split.er_ranks;
    if a.split.split == SplitArg::Holdout {
        manifest.seeds.insert("split".into(), a.split.seed);
    }
    let exp = run_experiments_cached(&fs, &config, &[a.metric], None)?
        .pop()
        .expect("one metric requested");
    for path in write_report_files(&exp.report, &a.out)? {
        manifest.output(&path);
    }
    if a.save_rankings {
        manifest.output(&write_rankings(&exp, &a.out)?);
    }
    manifest.write(&a.out.join("manifest.json"))?;
    writeln!(out, "{}", exp.report.summary_line()).map_err(io_err(Path::new("<stdout>")))?;
    Ok(())
}

/// One parsed `config=...,map=...,er=...` line.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryLine {
    pub config: String,
    pub map: f64,
    pub er: f64,
}

impl SummaryLine {
    pub fn parse(line: &str) -> Option<Self> {
        let rest = line.trim().strip_prefix("config=")?;
        let (config, rest) = rest.rsplit_once(",map=")?;
        let (map, er) = rest.split_once(",er=")?;
        Some(SummaryLine {
            config: config.to_string(),
            map: map.parse().ok()?,
            er: er.parse().ok()?,
        })
    }

    /// Row key (everything but the metric) and metric code.
    fn row_and_metric(&self) -> (&str, &str) {
        self.config.rsplit_once('|').unwrap_or((&self.config, ""))
    }
}

fn collect_summaries(path: &Path, found: &mut Vec<PathBuf>) -> Result<()> {
    if path.is_file() {
        found.push(path.to_path_buf());
        return Ok(());
    }
    let mut entries: Vec<PathBuf> = std::fs::read_dir(path)
        .map_err(io_err(path))?
        .map(|e| e.map(|e| e.path()).map_err(io_err(path)))
        .collect::<Result<_>>()?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            collect_summaries(&p, found)?;
        } else if p.file_name().is_some_and(|n| n == "summary.txt") {
            found.push(p);
        }
    }
    Ok(())
}

/// Grid of one value with configurations as rows and metrics as columns.
pub fn summary_table(lines: &[SummaryLine], use_er: bool) -> String {
    let mut rows: Vec<&str> = Vec::new();
    let mut cols: Vec<&str> = Vec::new();
    let mut cells: BTreeMap<(&str, &str), f64> = BTreeMap::new();
    for l in lines {
        let (row, col) = l.row_and_metric();
        if !rows.contains(&row) {
            rows.push(row);
        }
        if !cols.contains(&col) {
            cols.push(col);
        }
        cells.insert((row, col), if use_er { l.er } else { l.map });
    }
    let metric_rank = |c: &str| MetricKind::ALL.iter().position(|m| m.code() == c).unwrap_or(usize::MAX);
    cols.sort_by_key(|c| metric_rank(c));
    let width = rows.iter().map(|r| r.len()).max().unwrap_or(0).max(6);
    let mut text = format!("{:<width$}", "config");
    for c in &cols {
        let _ = write!(text, "  {c:>6}");
    }
    text.push('\n');
    for r in &rows {
        let _ = write!(text, "{r:<width$}");
        for c in &cols {
            match cells.get(&(*r, *c)) {
                Some(v) => {
                    let _ = write!(text, "  {v:>6.3}");
                }
                None => text.push_str("       -"),
            }
        }
        text.push('\n');
    }
    text
}

fn report(a: &ReportArgs, out: &mut dyn Write) -> Result<()> {
    let mut files = Vec::new();
    for p in &a.inputs {
        collect_summaries(p, &mut files)?;
    }
    let mut lines = Vec::new();
    for f in &files {
        let text = std::fs::read_to_string(f).map_err(io_err(f))?;
        for (row, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            lines.push(SummaryLine::parse(line).ok_or_else(|| Error::Format {
                path: f.clone(),
                row,
                msg: "expected config=...,map=...,er=...".into(),
            })?);
        }
    }
    if lines.is_empty() {
        return Err(Error::Empty("no summary lines found".into()));
    }
    let table = summary_table(&lines, matches!(a.value, TableValue::Er));
    out.write_all(table.as_bytes()).map_err(io_err(Path::new("<stdout>")))?;
    if let Some(path) = &a.out {
        std::fs::write(path, &table).map_err(io_err(path))?;
    }
    Ok(())
}

fn lambda_tag(l: Lambda) -> String {
    match l {
        Lambda::Relative(v) => format!("rel{v}"),
        Lambda::Absolute(v) => format!("abs{v}"),
    }
}

fn sweep(
    a: &SweepArgs,
    m: &ArgMatches,
    mut manifest: RunManifest,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<()> {
    let fs = load_input(&a.input, &mut manifest)?;
    let pre = transform_stages(&a.transforms, m)?;
    manifest.seeds.insert("dict".into(), a.dict_seed);
    if a.split.split == SplitArg::Holdout {
        manifest.seeds.insert("split".into(), a.split.seed);
    }
    let train_size = match a.split.split {
        SplitArg::Holdout => fs.len().saturating_sub(a.split.test_per_class * fs.classes().len()),
        SplitArg::Loocv if a.split.strict_loocv => fs.len() - 1,
        SplitArg::Loocv => fs.len(),
    };
    let cache = DictCache::new();
    let mut summaries = Vec::new();
    for &method in &a.methods {
        for &size in &a.sizes {
            if size > train_size {
                let _ = writeln!(err, "skipping {method}{size}: only {train_size} training vectors");
                continue;
            }
            let mut learn = DictLearnSpec::new(method, size, a.dict_seed);
            if let Some(iters) = a.dict_iters {
                learn.iters = iters;
            }
            learn.sparsity = a.sparsity;
            for &cl in &a.cls {
                for &lambda in &a.lambdas {
                    let mut stages = pre.clone();
                    stages.push(StageSpec::SparseEncode {
                        dict: DictSource::Learn(learn.clone()),
                        cl: ClSpec::new(cl).with_lambda(lambda),
                    });
                    let mut config = ExperimentConfig::new(a.split.spec(), stages, a.metrics[0]);
                    config.strict_loocv = a.split.strict_loocv;
                    config.er_ranks = a.split.er_ranks;
                    for exp in run_experiments_cached(&fs, &config, &a.metrics, Some(&cache))? {
                        let dir = a.out.join(format!(
                            "{method}{size}_{cl}_{}_{}",
                            lambda_tag(lambda),
                            exp.report.config.metric
                        ));
                        for path in write_report_files(&exp.report, &dir)? {
                            manifest.output(&path);
                        }
                        let line = exp.report.summary_line();
                        let _ = writeln!(err, "{line}");
                        summaries.push(SummaryLine::parse(&line).expect("own summary parses"));
                    }
                }
            }
        }
    }
    if summaries.is_empty() {
        return Err(Error::Spec("sweep produced no runs".into()));
    }
    let table = summary_table(&summaries, false);
    let table_path = a.out.join("table.txt");
    std::fs::write(&table_path, &table).map_err(io_err(&table_path))?;
    manifest.output(&table_path);
    manifest.write(&a.out.join("manifest.json"))?;
    out.write_all(table.as_bytes()).map_err(io_err(Path::new("<stdout>")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    fn stages_of(cmdline: &str) -> Vec<StageSpec> {
        let m = Cli::command().try_get_matches_from(argv(cmdline)).unwrap();
        let cli = Cli::from_arg_matches(&m).unwrap();
        let (_, sub) = m.subcommand().unwrap();
        match cli.command {
            Command::Reduce(a) => transform_stages(&a.transforms, sub).unwrap(),
            _ => unreachable!(),
        }
    }

    #[test]
    fn transforms_follow_flag_order() {
        let s = stages_of("cbir reduce --features f --manifest m --out o --zscore --dct 300 --pca 10");
        assert_eq!(
            s,
            vec![StageSpec::ZScore, StageSpec::Dct { keep: DctSpec::Keep(300) }, StageSpec::Pca { k: 10 }]
        );
        let s = stages_of("cbir reduce --features f --manifest m --out o --dct --zscore --dwt 3 --dct 5");
        assert_eq!(
            s,
            vec![
                StageSpec::Dct { keep: DctSpec::All },
                StageSpec::ZScore,
                StageSpec::Dwt { levels: 3 },
                StageSpec::Dct { keep: DctSpec::Keep(5) },
            ]
        );
        assert!(stages_of("cbir reduce --features f --manifest m --out o").is_empty());
    }

    #[test]
    fn help_and_usage_exit_codes() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run_with(&argv("cbir evaluate --help"), &mut out, &mut err), 0);
        assert!(String::from_utf8_lossy(&out).contains("--metric"));
        assert_eq!(run_with(&argv("cbir frobnicate"), &mut out, &mut err), 1);
        assert_eq!(run_with(&argv("cbir evaluate --bogus"), &mut out, &mut err), 1);
        assert_eq!(run_with(&argv("cbir query --gallery g --manifest m --query-id q --metric xx"), &mut out, &mut err), 1);
        assert!(!err.is_empty());
    }

    #[test]
    fn missing_input_is_data_error() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run_with(
            &argv("cbir evaluate --features /nonexistent/f.csv --manifest /nonexistent/m.csv --out /tmp/x"),
            &mut out,
            &mut err,
        );
        assert_eq!(code, 2);
    }

    #[test]
    fn summary_line_parse_and_table() {
        let lines: Vec<SummaryLine> = [
            "config=holdout10/seed0|ksvd10+homotopy(0.1*max)|ed,map=0.950000,er=0.050000",
            "config=holdout10/seed0|ksvd10+homotopy(0.1*max)|cd,map=0.900000,er=0.100000",
            "config=loocv|raw|ed,map=0.500000,er=0.250000",
        ]
        .iter()
        .map(|l| SummaryLine::parse(l).unwrap())
        .collect();
        assert_eq!(lines[0].map, 0.95);
        let table = summary_table(&lines, false);
        let rows: Vec<&str> = table.lines().collect();
        assert_eq!(rows.len(), 3);
        assert!(rows[0].ends_with("ed      cd"));
        assert!(rows[1].contains("0.950") && rows[1].contains("0.900"));
        assert!(rows[2].contains("0.500") && rows[2].ends_with('-'));
        assert!(SummaryLine::parse("map=1").is_none());
    }

    #[test]
    fn manifest_path_naming() {
        assert_eq!(manifest_path_for(Path::new("/a/b/f.cbfv")), PathBuf::from("/a/b/f.cbfv.manifest.json"));
    }
}
