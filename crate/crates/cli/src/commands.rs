use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::Args;
use rayon::prelude::*;
use serde::Serialize;

use infostruct::bench::{self, Method, SweepConfig, GAUSSIAN_RECIPE};
use infostruct::descriptors::{Backend, DEFAULT_ANCHORS, DEFAULT_MAX_ITERS, DEFAULT_PROBES, DEFAULT_SCALE};
use infostruct::info::spearman;
use infostruct::io::{self as archive_io, canonical_json, long_format, ReportDocument};
use infostruct::signal::{
    generate_language, signal_report, CorrelationMethod, LanguageKind, MeaningSignalDataset, SignalMeasure,
    DEFAULT_MAX_PAIRS,
};
use infostruct::structure::AnalysisConfig;
use infostruct::synthetic::PLANTED_CORPUS;
use infostruct::{Correlation, Error, Result, Weighting};

#[derive(Debug, Clone, Args)]
pub struct EstimatorArgs {
    /// Label sets to analyze; bigram/trigram are derived from `token` when
    /// the table lacks them.
    #[arg(long, value_delimiter = ',', default_value = "token")]
    labels: Vec<String>,
    #[arg(long, alias = "backend", default_value = "soft")]
    estimator: Backend,
    #[arg(long, default_value_t = DEFAULT_ANCHORS)]
    anchors: usize,
    #[arg(long, default_value_t = DEFAULT_SCALE)]
    scale: f64,
    /// Column chunk width for soft descriptors; 0 uses the full width.
    #[arg(long, default_value_t = 32)]
    subspace: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    bins: usize,
    #[arg(long, default_value_t = 100)]
    clusters: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    max_iters: usize,
    #[arg(long, default_value = "uniform")]
    weighting: Weighting,
    /// Labels with fewer rows are left out of the conditionals.
    #[arg(long, default_value_t = 1)]
    min_count: usize,
    /// Include a per-label table.
    #[arg(long)]
    detail: bool,
}

impl EstimatorArgs {
    fn config(&self) -> AnalysisConfig {
        AnalysisConfig {
            backend: self.estimator,
            anchors: self.anchors,
            scale: self.scale,
            subspace: (self.subspace > 0).then_some(self.subspace),
            seed: self.seed,
            bins: self.bins,
            clusters: self.clusters,
            max_iters: self.max_iters,
            weighting: self.weighting,
            min_count: self.min_count,
            detail: self.detail,
        }
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Archive directory; repeat for one archive per layer.
    #[arg(long, required = true)]
    data: Vec<PathBuf>,
    #[command(flatten)]
    estimator: EstimatorArgs,
    /// Report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn analyze(a: AnalyzeArgs) -> Result<()> {
    let doc = archive_io::analyze_archives(&a.data, &a.estimator.labels, &a.estimator.config())?;
    emit(a.out.as_deref(), &doc.to_canonical_json())
}

#[derive(Debug, Args)]
pub struct TimecourseArgs {
    /// Glob matching checkpoint archive directories.
    #[arg(long)]
    checkpoints: String,
    #[command(flatten)]
    estimator: EstimatorArgs,
    /// Directory receiving one report per checkpoint and `timecourse.csv`.
    #[arg(long)]
    out_dir: PathBuf,
    /// Checkpoints analyzed at once; 0 lets the thread pool decide.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

/// Training step of a checkpoint: the last run of digits in its directory
/// name.
fn checkpoint_step(path: &Path) -> Option<u64> {
    let name = path.file_name()?.to_str()?;
    let digits: String = name
        .chars()
        .rev()
        .skip_while(|c| !c.is_ascii_digit())
        .take_while(|c| c.is_ascii_digit())
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    digits.parse().ok()
}

pub fn timecourse(a: TimecourseArgs) -> Result<()> {
    let paths = glob_paths(&a.checkpoints)?;
    let mut names = BTreeMap::new();
    for p in &paths {
        let name = p
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        if let Some(prev) = names.insert(name.clone(), p) {
            return Err(Error::validation(format!(
                "checkpoints {} and {} share the report name `{name}`",
                prev.display(),
                p.display()
            )));
        }
    }
    let cfg = a.estimator.config();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs)
        .build()
        .map_err(|e| Error::validation(format!("thread pool: {e}")))?;
    let docs: Vec<ReportDocument> = pool.install(|| {
        paths
            .par_iter()
            .map(|p| archive_io::analyze_archives(&[p], &a.estimator.labels, &cfg))
            .collect::<Result<Vec<_>>>()
    })?;

    fs::create_dir_all(&a.out_dir).map_err(|e| Error::io(&a.out_dir, e))?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["step", "measure", "set", "value"])
        .map_err(csv_err)?;
    for (i, (path, doc)) in paths.iter().zip(&docs).enumerate() {
        let name = path.file_name().expect("glob match has a name").to_string_lossy();
        emit(
            Some(&a.out_dir.join(format!("{name}.json"))),
            &doc.to_canonical_json(),
        )?;
        let step = checkpoint_step(path).unwrap_or(i as u64).to_string();
        for (measure, set, value) in long_format(&doc.report) {
            w.write_record([step.as_str(), &measure, &set, &value.to_string()])
                .map_err(csv_err)?;
        }
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::format("timecourse.csv", e.to_string()))?;
    write_file(&a.out_dir.join("timecourse.csv"), &bytes)
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [16, 64])]
    dims: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [100, 1000, 10000])]
    samples: Vec<usize>,
    /// Bins per dimension, anchors or clusters.
    #[arg(long, value_delimiter = ',', default_values_t = [10, 100])]
    cells: Vec<usize>,
    /// Comma-separated methods, or `all`.
    #[arg(long, default_value = "all")]
    methods: String,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = bench::DEFAULT_CONDITION_CAP)]
    condition_cap: f64,
    /// Monte-Carlo probes for Voronoi cell volumes.
    #[arg(long, default_value_t = DEFAULT_PROBES)]
    probes: usize,
    /// Relative expansion of the attested bounding box.
    #[arg(long, default_value_t = bench::DEFAULT_EXPAND)]
    expand: f64,
    #[arg(long, default_value_t = DEFAULT_SCALE)]
    scale: f64,
    #[arg(long, default_value_t = bench::BENCH_MAX_ITERS)]
    max_iters: usize,
    /// CSV path; stdout when omitted. A `.meta.json` sidecar with the
    /// configuration and per-cell summary is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct BenchMeta<'a> {
    config: &'a SweepConfig,
    gaussian: &'a str,
    rows: usize,
    csv_sha256: String,
    summary: Vec<bench::CellSummary>,
}

pub fn bench(a: BenchArgs) -> Result<()> {
    let cfg = SweepConfig {
        dims: a.dims,
        samples: a.samples,
        cells: a.cells,
        methods: Method::parse_list(&a.methods)?,
        trials: a.trials,
        seed: a.seed,
        condition_cap: a.condition_cap,
        probes: a.probes,
        expand: a.expand,
        scale: a.scale,
        max_iters: a.max_iters,
    };
    let rows = bench::run_sweep(&cfg)?;
    let mut csv = Vec::new();
    bench::write_csv(&rows, &mut csv)?;
    match a.out {
        None => emit_bytes(None, &csv),
        Some(path) => {
            write_file(&path, &csv)?;
            let meta = BenchMeta {
                config: &cfg,
                gaussian: GAUSSIAN_RECIPE,
                rows: rows.len(),
                csv_sha256: archive_io::sha256_hex(&csv),
                summary: bench::summarize(&rows),
            };
            write_file(
                &path.with_extension("meta.json"),
                canonical_json(&meta)?.as_bytes(),
            )
        }
    }
}

#[derive(Debug, Args)]
pub struct SignalArgs {
    /// Tab-separated meaning/signal pairs, one per line (`0:1 1:0<TAB>AB`).
    #[arg(long, required_unless_present = "generate", conflicts_with = "generate")]
    pairs: Option<PathBuf>,
    /// Generate a calibration language instead of reading pairs.
    #[arg(long, value_parser = ["ideal", "random"])]
    generate: Option<String>,
    #[arg(long, default_value_t = 3)]
    roles: usize,
    #[arg(long, default_value_t = 25)]
    atoms: usize,
    #[arg(long, default_value_t = 26)]
    alphabet: usize,
    #[arg(long, default_value_t = 6)]
    length: usize,
    /// Comma-separated measures, or `all`.
    #[arg(long, default_value = "all")]
    measures: String,
    #[arg(long, default_value_t = DEFAULT_MAX_PAIRS)]
    max_pairs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "spearman")]
    correlation: CorrelationMethod,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn signal(a: SignalArgs) -> Result<()> {
    let data = match (&a.pairs, a.generate.as_deref()) {
        (Some(path), _) => {
            let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
            MeaningSignalDataset::from_tsv(BufReader::new(file))?
        }
        (None, Some(kind)) => {
            let kind = if kind == "ideal" {
                LanguageKind::Ideal
            } else {
                LanguageKind::Random
            };
            generate_language(kind, a.roles, a.atoms, a.alphabet, a.length, a.seed)?.dataset
        }
        (None, None) => return Err(Error::validation("either --pairs or --generate is required")),
    };
    let measures = SignalMeasure::parse_list(&a.measures)?;
    let report = signal_report(&data, &measures, a.max_pairs, a.seed, a.correlation)?;
    emit(a.out.as_deref(), &canonical_json(&report)?)
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    /// Glob matching report JSON files.
    #[arg(long)]
    reports: String,
    /// Dotted path into each report, e.g. `per_set.token.disentanglement`.
    #[arg(long)]
    metric: String,
    /// CSV with columns `report` (path, file name or stem) and `score`.
    #[arg(long)]
    scores: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct CorrelateEntry {
    report: String,
    metric: f64,
    score: f64,
}

#[derive(Serialize)]
struct CorrelateOutput {
    metric: String,
    method: &'static str,
    n: usize,
    rho: Option<f64>,
    correlation: Correlation,
    entries: Vec<CorrelateEntry>,
}

pub fn correlate(a: CorrelateArgs) -> Result<()> {
    let paths = glob_paths(&a.reports)?;
    let docs = paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            ReportDocument::from_json(&text).map_err(|e| match e {
                Error::Format { field, message } => {
                    Error::format(format!("{}: {field}", p.display()), message)
                }
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    for (p, d) in paths.iter().zip(&docs).skip(1) {
        if d.report.config != docs[0].report.config {
            return Err(Error::validation(format!(
                "mixed configs: {} was produced with different estimator settings from {}",
                p.display(),
                paths[0].display()
            )));
        }
    }

    let scores = read_scores(&a.scores)?;
    let mut entries = Vec::with_capacity(paths.len());
    for (p, d) in paths.iter().zip(&docs) {
        let keys = [
            Some(p.display().to_string()),
            p.file_name().map(|s| s.to_string_lossy().into_owned()),
            p.file_stem().map(|s| s.to_string_lossy().into_owned()),
        ];
        let score = keys
            .iter()
            .flatten()
            .find_map(|k| scores.get(k))
            .ok_or_else(|| Error::validation(format!("no score for report {}", p.display())))?;
        entries.push(CorrelateEntry {
            report: p.display().to_string(),
            metric: d.metric(&a.metric)?,
            score: *score,
        });
    }
    let xs: Vec<f64> = entries.iter().map(|e| e.metric).collect();
    let ys: Vec<f64> = entries.iter().map(|e| e.score).collect();
    let correlation = spearman(&xs, &ys)?;
    let out = CorrelateOutput {
        metric: a.metric,
        method: "spearman",
        n: correlation.n(),
        rho: correlation.rho(),
        correlation,
        entries,
    };
    emit(a.out.as_deref(), &canonical_json(&out)?)
}

fn read_scores(path: &Path) -> Result<BTreeMap<String, f64>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let header = r.headers().map_err(csv_err)?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::format("scores", format!("missing `{name}` column")))
    };
    let (ki, si) = (col("report")?, col("score")?);
    let mut out = BTreeMap::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let key = rec.get(ki).unwrap_or("").trim().to_string();
        let raw = rec.get(si).unwrap_or("").trim();
        let score: f64 = raw
            .parse()
            .map_err(|_| Error::format("scores", format!("row {row}: `{raw}` is not a number")))?;
        if out.insert(key.clone(), score).is_some() {
            return Err(Error::format(
                "scores",
                format!("row {row}: duplicate report `{key}`"),
            ));
        }
    }
    Ok(out)
}

#[derive(Debug, Args)]
pub struct FixtureArgs {
    #[arg(long)]
    out: PathBuf,
}

pub fn fixture(a: FixtureArgs) -> Result<()> {
    let (vectors, labels) = PLANTED_CORPUS.generate()?;
    archive_io::write_archive(&vectors, PLANTED_CORPUS.dim, &labels, &a.out)
}

fn glob_paths(pattern: &str) -> Result<Vec<PathBuf>> {
    let entries = glob::glob(pattern).map_err(|e| Error::validation(format!("bad glob `{pattern}`: {e}")))?;
    let mut paths = Vec::new();
    for entry in entries {
        let p = entry.map_err(|e| {
            let path = e.path().to_path_buf();
            Error::io(path, e.into())
        })?;
        paths.push(p);
    }
    if paths.is_empty() {
        return Err(Error::validation(format!("nothing matches `{pattern}`")));
    }
    paths.sort();
    Ok(paths)
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    emit_bytes(path, text.as_bytes())
}

fn emit_bytes(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => write_file(p, bytes),
        None => std::io::stdout()
            .lock()
            .write_all(bytes)
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn csv_err(e: csv::Error) -> Error {
    Error::format("csv", e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steps_come_from_trailing_digits() {
        assert_eq!(checkpoint_step(Path::new("runs/step_1200")), Some(1200));
        assert_eq!(checkpoint_step(Path::new("ckpt-00300-final")), Some(300));
        assert_eq!(checkpoint_step(Path::new("final")), None);
    }
}
