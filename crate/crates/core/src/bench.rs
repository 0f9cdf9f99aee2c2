//! Estimator error against closed-form Gaussian differential entropy.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::descriptors::{
    equal_log_widths, kmeans_descriptor, sample_anchors, soft_descriptor, to_differential_log,
    voronoi_log_widths, BinGrid, BoundingBox, Geometry, RepresentationSet, DEFAULT_PROBES,
};
use crate::error::{Error, Result};
use crate::info::{entropy_of, miller_madow, Categorical};
use crate::numeric::matmul_transposed;

pub const DEFAULT_CONDITION_CAP: f64 = 1e3;
/// Ridge added to every covariance.
pub const COVARIANCE_EPSILON: f64 = 1e-6;
/// Box expansion on each side, as a fraction of the attested range.
pub const DEFAULT_EXPAND: f64 = 0.01;
/// Lloyd iterations per k-means estimate in the bench.
pub const BENCH_MAX_ITERS: usize = 20;
/// Largest number of distinct joint cells full discretization will hold.
pub const MAX_JOINT_CELLS: usize = 10_000_000;

/// How the bench draws covariances; copied into bench metadata.
pub const GAUSSIAN_RECIPE: &str = "mean 0; covariance = A·Aᵀ with A standard normal (seeded), \
rescaled to mean eigenvalue 1, eigenvalues clipped below λmax/condition_cap, plus ε·I";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    pub dim: usize,
    pub mean: Vec<f64>,
    /// Row-major `dim × dim`.
    pub covariance: Vec<f64>,
    pub seed: u64,
}

impl GaussianSpec {
    /// Checks symmetry within 1e-9 and positive-definiteness.
    pub fn new(mean: Vec<f64>, covariance: Vec<f64>, seed: u64) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 || covariance.len() != dim * dim {
            return Err(Error::shape(format!(
                "covariance has {} entries for dimension {dim}",
                covariance.len()
            )));
        }
        for i in 0..dim {
            for j in 0..i {
                if (covariance[i * dim + j] - covariance[j * dim + i]).abs() > 1e-9 {
                    return Err(Error::validation(format!(
                        "covariance is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let spec = Self {
            dim,
            mean,
            covariance,
            seed,
        };
        spec.cholesky()?;
        Ok(spec)
    }

    fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.covariance)
    }

    fn cholesky(&self) -> Result<DMatrix<f64>> {
        self.matrix()
            .cholesky()
            .map(|c| c.l())
            .ok_or_else(|| Error::validation("covariance is not positive-definite"))
    }

    /// The same distribution with covariance multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(
            self.mean.clone(),
            self.covariance.iter().map(|v| v * c).collect(),
            self.seed,
        )
    }

    /// `n` draws as rows.
    pub fn sample<R: Rng>(&self, n: usize, rng: &mut R) -> Result<RepresentationSet> {
        let l = self.cholesky()?;
        let d = self.dim;
        let mut data = Vec::with_capacity(n * d);
        let mut z = vec![0.0; d];
        for _ in 0..n {
            z.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
            for i in 0..d {
                let mut x = self.mean[i];
                for j in 0..=i {
                    x += l[(i, j)] * z[j];
                }
                data.push(x);
            }
        }
        RepresentationSet::new(data, n, d)
    }
}

/// A random zero-mean Gaussian whose covariance has condition number at
/// most `condition_cap`.
pub fn random_gaussian(dim: usize, seed: u64, condition_cap: f64) -> Result<GaussianSpec> {
    if dim == 0 {
        return Err(Error::validation("dimension must be at least 1"));
    }
    if condition_cap.is_nan() || condition_cap < 1.0 {
        return Err(Error::validation("condition cap must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let s = &a * a.transpose();
    let eig = SymmetricEigen::new(s);
    let mean_eig = eig.eigenvalues.sum() / dim as f64;
    let mut values = eig.eigenvalues.map(|v| v / mean_eig);
    let floor = values.max() / condition_cap;
    values.iter_mut().for_each(|v| *v = v.max(floor));
    let mut cov = &eig.eigenvectors * DMatrix::from_diagonal(&values) * eig.eigenvectors.transpose();
    cov = (&cov + cov.transpose()) * 0.5;
    for i in 0..dim {
        cov[(i, i)] += COVARIANCE_EPSILON;
    }
    let row_major = (0..dim * dim).map(|k| cov[(k / dim, k % dim)]).collect();
    GaussianSpec::new(vec![0.0; dim], row_major, seed)
}

/// `½·ln((2πe)^d · det Σ)` through a Cholesky log-determinant.
pub fn closed_form_entropy(g: &GaussianSpec) -> Result<f64> {
    let l = g.cholesky()?;
    let log_det: f64 = 2.0 * (0..g.dim).map(|i| l[(i, i)].ln()).sum::<f64>();
    Ok(0.5 * (g.dim as f64 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln() + log_det))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    /// Some dimension has zero width; the estimate is `−∞`.
    Degenerate,
    Error(String),
}

impl Status {
    pub fn is_ok(&self) -> bool {
        matches!(self, Status::Ok)
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Ok => f.write_str("ok"),
            Status::Degenerate => f.write_str("degenerate"),
            Status::Error(msg) => write!(f, "error: {msg}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    /// Differential entropy in nats.
    pub value: f64,
    /// Entropy of the underlying discrete descriptor.
    pub discrete: f64,
    pub status: Status,
    /// Sampling error from Monte-Carlo cell volumes.
    pub standard_error: Option<f64>,
}

fn finish(value: f64, discrete: f64, standard_error: Option<f64>) -> Estimate {
    let status = if value.is_finite() {
        Status::Ok
    } else {
        Status::Degenerate
    };
    Estimate {
        value,
        discrete,
        status,
        standard_error,
    }
}

/// Joint equal-width grid over all dimensions with sparse cell counts,
/// Miller–Madow entropy, and exact cell volumes.
pub fn estimate_full_discretization(y: &RepresentationSet, bins: usize) -> Result<Estimate> {
    let grid = BinGrid::fit(y, bins)?;
    let mut counts: HashMap<Vec<u32>, u64> = HashMap::new();
    for row in y.rows() {
        let key: Vec<u32> = row
            .iter()
            .enumerate()
            .map(|(d, &v)| grid.bin(d, v) as u32)
            .collect();
        *counts.entry(key).or_insert(0) += 1;
        if counts.len() > MAX_JOINT_CELLS {
            return Err(Error::Capacity(format!(
                "more than {MAX_JOINT_CELLS} distinct joint cells; reduce bins or samples"
            )));
        }
    }
    // Sorted so the entropy sum runs in a fixed order.
    let mut c: Vec<u64> = counts.into_values().collect();
    c.sort_unstable();
    let h = entropy_of(Categorical::from_counts(&c)?.probs());
    let active: Vec<usize> = grid.active_dims().collect();
    let cap = active.len() as f64 * (bins as f64).ln();
    let discrete = miller_madow(h, c.len(), y.count(), cap)?;
    if active.len() < grid.dim() {
        return Ok(finish(f64::NEG_INFINITY, discrete, None));
    }
    let log_volume: f64 = active.iter().map(|&d| grid.width(d).unwrap().ln()).sum();
    Ok(finish(discrete + log_volume, discrete, None))
}

/// Cell-width model for soft and k-means estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WidthModel {
    Equal,
    Voronoi,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftBenchParams {
    pub anchors: usize,
    pub scale: f64,
    pub seed: u64,
    pub width_model: WidthModel,
    pub geometry: Geometry,
    pub probes: usize,
    pub probe_seed: u64,
    pub expand: f64,
}

/// Euclidean soft descriptor: anchors uniform in the box, logits
/// `−scale·‖y − a‖² / diagonal²`.
fn euclidean_soft(y: &RepresentationSet, anchors: &[f64], n: usize, scale: f64, diag_sq: f64) -> Vec<f64> {
    let d = y.dim();
    let anchor_sq: Vec<f64> = anchors
        .chunks_exact(d)
        .map(|a| a.iter().map(|v| v * v).sum())
        .collect();
    let mut sums = vec![0.0; n];
    let mut dots = vec![0.0; 512 * n];
    for block in y.as_slice().chunks(512 * d) {
        let m = block.len() / d;
        let dots = &mut dots[..m * n];
        matmul_transposed(block, anchors, m, d, n, dots);
        for (row, logits) in block.chunks_exact(d).zip(dots.chunks_exact_mut(n)) {
            let y_sq: f64 = row.iter().map(|v| v * v).sum();
            for (l, a_sq) in logits.iter_mut().zip(&anchor_sq) {
                *l = -scale * (y_sq - 2.0 * *l + a_sq).max(0.0) / diag_sq;
            }
            let max = logits.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            let mut total = 0.0;
            for l in logits.iter_mut() {
                *l = (*l - max).exp();
                total += *l;
            }
            for (s, l) in sums.iter_mut().zip(logits.iter()) {
                *s += l / total;
            }
        }
    }
    sums
}

pub fn estimate_soft(y: &RepresentationSet, p: &SoftBenchParams) -> Result<Estimate> {
    let bbox = BoundingBox::attested(y, p.expand);
    let (probs, centers) = match p.geometry {
        Geometry::Angular => {
            let anchors = sample_anchors(y.dim(), p.anchors, p.seed, p.scale)?;
            let d = soft_descriptor(y, &anchors)?;
            (d.descriptor.dist.into_probs(), anchors.points().to_vec())
        }
        Geometry::Euclidean => {
            if p.anchors < 2 {
                return Err(Error::validation("at least 2 anchors are needed"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
            let mut anchors = vec![0.0; p.anchors * y.dim()];
            for a in anchors.chunks_exact_mut(y.dim()) {
                bbox.sample(&mut rng, a);
            }
            let diag_sq = bbox.diagonal_sq();
            if diag_sq <= 0.0 {
                return Ok(finish(f64::NEG_INFINITY, 0.0, None));
            }
            let sums = euclidean_soft(y, &anchors, p.anchors, p.scale, diag_sq);
            (Categorical::from_weights(&sums)?.into_probs(), anchors)
        }
    };
    let discrete = entropy_of(&probs);
    if bbox.is_degenerate() {
        return Ok(finish(f64::NEG_INFINITY, discrete, None));
    }
    let (log_widths, se) = match p.width_model {
        WidthModel::Equal => (equal_log_widths(&bbox, p.anchors), None),
        WidthModel::Voronoi => {
            let v = voronoi_log_widths(&bbox, &centers, p.geometry, p.probes, p.probe_seed)?;
            let se = v.standard_error(&probs);
            (v.log_widths, Some(se))
        }
    };
    Ok(finish(to_differential_log(&probs, &log_widths)?, discrete, se))
}

/// k-means occupancy with Monte-Carlo Voronoi cell volumes.
pub fn estimate_kmeans(
    y: &RepresentationSet,
    k: usize,
    seed: u64,
    max_iters: usize,
    probes: usize,
    probe_seed: u64,
    expand: f64,
) -> Result<Estimate> {
    let km = kmeans_descriptor(y, k, seed, max_iters)?;
    let probs = km.descriptor.dist.probs();
    let discrete = entropy_of(probs);
    let bbox = BoundingBox::attested(y, expand);
    if bbox.is_degenerate() {
        return Ok(finish(f64::NEG_INFINITY, discrete, None));
    }
    let v = voronoi_log_widths(&bbox, &km.centers, Geometry::Euclidean, probes, probe_seed)?;
    let se = v.standard_error(probs);
    Ok(finish(
        to_differential_log(probs, &v.log_widths)?,
        discrete,
        Some(se),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    FullDiscretization,
    SoftEqual,
    SoftVoronoi,
    Kmeans,
    SoftEqualEuclidean,
    SoftVoronoiEuclidean,
}

impl Method {
    /// The methods run for `all`.
    pub const ALL: [Method; 4] = [
        Method::FullDiscretization,
        Method::SoftEqual,
        Method::SoftVoronoi,
        Method::Kmeans,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::FullDiscretization => "full_discretization",
            Method::SoftEqual => "soft_equal",
            Method::SoftVoronoi => "soft_voronoi",
            Method::Kmeans => "kmeans",
            Method::SoftEqualEuclidean => "soft_equal_euclidean",
            Method::SoftVoronoiEuclidean => "soft_voronoi_euclidean",
        }
    }

    /// Comma-separated names, with `all` expanding to [`Method::ALL`].
    pub fn parse_list(s: &str) -> Result<Vec<Method>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if part == "all" {
                out.extend(Method::ALL);
            } else {
                out.push(part.parse()?);
            }
        }
        out.sort();
        out.dedup();
        if out.is_empty() {
            return Err(Error::validation("no methods given"));
        }
        Ok(out)
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Method::FullDiscretization,
            Method::SoftEqual,
            Method::SoftVoronoi,
            Method::Kmeans,
            Method::SoftEqualEuclidean,
            Method::SoftVoronoiEuclidean,
        ]
        .into_iter()
        .find(|m| m.as_str() == s)
        .ok_or_else(|| Error::validation(format!("unknown method `{s}`")))
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub dims: Vec<usize>,
    pub samples: Vec<usize>,
    /// Bins per dimension, anchors, or clusters, depending on the method.
    pub cells: Vec<usize>,
    pub methods: Vec<Method>,
    pub trials: usize,
    pub seed: u64,
    pub condition_cap: f64,
    pub probes: usize,
    pub expand: f64,
    pub scale: f64,
    pub max_iters: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            dims: vec![16, 64],
            samples: vec![100, 1000, 10_000],
            cells: vec![10, 100],
            methods: Method::ALL.to_vec(),
            trials: 200,
            seed: 0,
            condition_cap: DEFAULT_CONDITION_CAP,
            probes: DEFAULT_PROBES,
            expand: DEFAULT_EXPAND,
            scale: crate::descriptors::DEFAULT_SCALE,
            max_iters: BENCH_MAX_ITERS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub method: Method,
    pub dim: usize,
    pub samples: usize,
    pub cells: usize,
    pub trial: usize,
    pub estimate: f64,
    pub truth: f64,
    /// `estimate − truth`.
    pub error: f64,
    pub status: Status,
    /// Monte-Carlo volume error, when Voronoi widths were used.
    pub standard_error: Option<f64>,
}

/// Seeds for one (dim, trial) job, drawn from their own ChaCha stream.
struct TrialSeeds {
    gaussian: u64,
    samples: u64,
    anchors: u64,
    probes: u64,
    kmeans: u64,
}

impl TrialSeeds {
    fn new(base: u64, dim: usize, trial: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(base);
        rng.set_stream(((dim as u64) << 32) | trial as u64);
        Self {
            gaussian: rng.next_u64(),
            samples: rng.next_u64(),
            anchors: rng.next_u64(),
            probes: rng.next_u64(),
            kmeans: rng.next_u64(),
        }
    }
}

fn run_method(
    method: Method,
    y: &RepresentationSet,
    cells: usize,
    cfg: &SweepConfig,
    s: &TrialSeeds,
) -> Result<Estimate> {
    let soft = |width_model, geometry| SoftBenchParams {
        anchors: cells,
        scale: cfg.scale,
        seed: s.anchors,
        width_model,
        geometry,
        probes: cfg.probes,
        probe_seed: s.probes,
        expand: cfg.expand,
    };
    match method {
        Method::FullDiscretization => estimate_full_discretization(y, cells),
        Method::SoftEqual => estimate_soft(y, &soft(WidthModel::Equal, Geometry::Angular)),
        Method::SoftVoronoi => estimate_soft(y, &soft(WidthModel::Voronoi, Geometry::Angular)),
        Method::SoftEqualEuclidean => estimate_soft(y, &soft(WidthModel::Equal, Geometry::Euclidean)),
        Method::SoftVoronoiEuclidean => estimate_soft(y, &soft(WidthModel::Voronoi, Geometry::Euclidean)),
        Method::Kmeans => estimate_kmeans(
            y,
            cells,
            s.kmeans,
            cfg.max_iters,
            cfg.probes,
            s.probes,
            cfg.expand,
        ),
    }
}

fn check_sweep(cfg: &SweepConfig) -> Result<()> {
    for (name, empty) in [
        ("dims", cfg.dims.is_empty()),
        ("samples", cfg.samples.is_empty()),
        ("cells", cfg.cells.is_empty()),
        ("methods", cfg.methods.is_empty()),
    ] {
        if empty {
            return Err(Error::validation(format!("sweep list `{name}` is empty")));
        }
    }
    if cfg.trials == 0 {
        return Err(Error::validation("trials must be at least 1"));
    }
    if cfg.dims.contains(&0) || cfg.samples.contains(&0) || cfg.cells.contains(&0) {
        return Err(Error::validation("dims, samples and cells must be positive"));
    }
    Ok(())
}

/// Every (method, dim, samples, cells, trial) combination. Each trial draws
/// one Gaussian and one sample stream shared by all methods, and smaller
/// sample counts use prefixes of the same draws.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<BenchRow>> {
    check_sweep(cfg)?;
    let max_samples = *cfg.samples.iter().max().unwrap();
    let jobs: Vec<(usize, usize)> = cfg
        .dims
        .iter()
        .flat_map(|&d| (0..cfg.trials).map(move |t| (d, t)))
        .collect();
    let per_job: Vec<Vec<BenchRow>> = jobs
        .par_iter()
        .map(|&(dim, trial)| {
            let seeds = TrialSeeds::new(cfg.seed, dim, trial);
            let g = random_gaussian(dim, seeds.gaussian, cfg.condition_cap)?;
            let truth = closed_form_entropy(&g)?;
            let all = g.sample(max_samples, &mut ChaCha8Rng::seed_from_u64(seeds.samples))?;
            let mut rows = Vec::new();
            for &n in &cfg.samples {
                let y = all.select_rows(&(0..n).collect::<Vec<_>>())?;
                for &cells in &cfg.cells {
                    for &method in &cfg.methods {
                        let (estimate, status, standard_error) =
                            match run_method(method, &y, cells, cfg, &seeds) {
                                Ok(e) => (e.value, e.status, e.standard_error),
                                Err(e) => (f64::NAN, Status::Error(e.to_string()), None),
                            };
                        rows.push(BenchRow {
                            method,
                            dim,
                            samples: n,
                            cells,
                            trial,
                            estimate,
                            truth,
                            error: estimate - truth,
                            status,
                            standard_error,
                        });
                    }
                }
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    let mut rows: Vec<BenchRow> = per_job.into_iter().flatten().collect();
    rows.sort_by_key(|r| (r.method, r.dim, r.samples, r.cells, r.trial));
    Ok(rows)
}

pub const CSV_HEADER: [&str; 9] = [
    "method",
    "dim",
    "samples",
    "cells",
    "trial",
    "estimate_nats",
    "truth_nats",
    "error_nats",
    "status",
];

pub fn write_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::format("csv", e.to_string());
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.method.as_str().to_string(),
            r.dim.to_string(),
            r.samples.to_string(),
            r.cells.to_string(),
            r.trial.to_string(),
            r.estimate.to_string(),
            r.truth.to_string(),
            r.error.to_string(),
            r.status.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::format("csv", e.to_string()))?;
    Ok(())
}

/// Aggregate over the trials of one (method, dim, samples, cells) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub method: Method,
    pub dim: usize,
    pub samples: usize,
    pub cells: usize,
    /// Trials with a finite estimate.
    pub ok: usize,
    pub mean_error: f64,
    pub mean_abs_error: f64,
    /// Standard error of `mean_abs_error`.
    pub abs_error_se: f64,
    pub fraction_negative: f64,
    pub fraction_positive: f64,
    /// Mean Monte-Carlo volume error, when present.
    pub mean_volume_se: Option<f64>,
}

pub fn summarize(rows: &[BenchRow]) -> Vec<CellSummary> {
    let mut groups: std::collections::BTreeMap<(Method, usize, usize, usize), Vec<&BenchRow>> =
        Default::default();
    for r in rows {
        groups
            .entry((r.method, r.dim, r.samples, r.cells))
            .or_default()
            .push(r);
    }
    groups
        .into_iter()
        .map(|((method, dim, samples, cells), rs)| {
            let errs: Vec<f64> = rs.iter().map(|r| r.error).filter(|e| e.is_finite()).collect();
            let n = errs.len() as f64;
            let abs: Vec<f64> = errs.iter().map(|e| e.abs()).collect();
            let mean_abs = crate::numeric::mean(&abs);
            let var = if errs.len() > 1 {
                abs.iter().map(|a| (a - mean_abs).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            let ses: Vec<f64> = rs.iter().filter_map(|r| r.standard_error).collect();
            CellSummary {
                method,
                dim,
                samples,
                cells,
                ok: errs.len(),
                mean_error: crate::numeric::mean(&errs),
                mean_abs_error: mean_abs,
                abs_error_se: if n > 0.0 { (var / n).sqrt() } else { f64::NAN },
                fraction_negative: errs.iter().filter(|&&e| e < 0.0).count() as f64 / n,
                fraction_positive: errs.iter().filter(|&&e| e > 0.0).count() as f64 / n,
                mean_volume_se: (!ses.is_empty()).then(|| crate::numeric::mean(&ses)),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    fn half_log_2pi_e() -> f64 {
        0.5 * (2.0 * PI * E).ln()
    }

    #[test]
    fn closed_forms() {
        let one = GaussianSpec::new(vec![0.0], vec![1.0], 0).unwrap();
        assert!((closed_form_entropy(&one).unwrap() - 1.418939).abs() < 1e-6);
        let two = GaussianSpec::new(vec![0.0; 2], vec![1.0, 0.0, 0.0, 1.0], 0).unwrap();
        assert!((closed_form_entropy(&two).unwrap() - 2.837877).abs() < 1e-6);
        let four = GaussianSpec::new(vec![0.0], vec![4.0], 0).unwrap();
        assert!((closed_form_entropy(&four).unwrap() - 2.112086).abs() < 1e-6);
        assert!(GaussianSpec::new(vec![0.0; 2], vec![1.0, 2.0, 2.0, 1.0], 0).is_err());
        assert!(GaussianSpec::new(vec![0.0; 2], vec![1.0, 0.5, 0.4, 1.0], 0).is_err());
    }

    #[test]
    fn random_gaussians() {
        let a = random_gaussian(8, 3, 1e3).unwrap();
        assert_eq!(a, random_gaussian(8, 3, 1e3).unwrap());
        let one = random_gaussian(1, 9, 1e3).unwrap();
        assert!((one.covariance[0] - (1.0 + COVARIANCE_EPSILON)).abs() < 1e-12);
        let eig = SymmetricEigen::new(a.matrix()).eigenvalues;
        assert!(eig.min() > 0.0);
        assert!(eig.max() / eig.min() <= 1e3 + 1e-6);
    }

    #[test]
    fn scaling_covariance_shifts_truth() {
        let g = random_gaussian(5, 1, 1e3).unwrap();
        let h = closed_form_entropy(&g).unwrap();
        let h3 = closed_form_entropy(&g.scaled(3.0).unwrap()).unwrap();
        assert!((h3 - h - 2.5 * 3f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn sample_covariance_matches() {
        let g = random_gaussian(3, 4, 1e3).unwrap();
        let y = g.sample(50_000, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let c: f64 = y.rows().map(|r| r[i] * r[j]).sum::<f64>() / 50_000.0;
                assert!((c - g.covariance[i * 3 + j]).abs() < 0.05, "{i}{j} {c}");
            }
        }
    }

    #[test]
    fn uniform_cube_full_discretization() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ranges = [1.0, 2.0, 0.5];
        let rows: Vec<Vec<f64>> = (0..200_000)
            .map(|_| ranges.iter().map(|r| r * rng.random::<f64>()).collect())
            .collect();
        let y = RepresentationSet::from_rows(&rows).unwrap();
        let e = estimate_full_discretization(&y, 5).unwrap();
        let expected: f64 = ranges.iter().map(|r: &f64| r.ln()).sum();
        assert!((e.value - expected).abs() < 0.01, "{}", e.value);
    }

    #[test]
    fn repeated_sample_is_degenerate() {
        let y = RepresentationSet::from_rows(&[[1.0, 2.0]; 10]).unwrap();
        let e = estimate_full_discretization(&y, 10).unwrap();
        assert_eq!(e.discrete, 0.0);
        assert_eq!(e.value, f64::NEG_INFINITY);
        assert_eq!(e.status, Status::Degenerate);
    }

    #[test]
    fn kmeans_single_cluster_is_box_volume() {
        let y = crate::synthetic::standard_normal(100, 3, 2).unwrap();
        let e = estimate_kmeans(&y, 1, 0, 10, 1000, 0, 0.01).unwrap();
        let bbox = BoundingBox::attested(&y, 0.01);
        assert_eq!(e.discrete, 0.0);
        assert!((e.value - bbox.log_volume()).abs() < 1e-12);
        assert!(matches!(
            estimate_kmeans(&y, 101, 0, 10, 1000, 0, 0.01),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn kmeans_planted_blobs_discrete_part() {
        let (y, _) = crate::synthetic::planted_clusters(2, 400, 4, 50.0, 1.0, 3).unwrap();
        let e = estimate_kmeans(&y, 2, 1, 50, 10_000, 2, 0.01).unwrap();
        assert!((e.discrete - 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn soft_width_models_agree_on_uniform_cube() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let rows: Vec<[f64; 2]> = (0..5000)
            .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .collect();
        let y = RepresentationSet::from_rows(&rows).unwrap();
        let truth = 4f64.ln();
        for geometry in [Geometry::Angular, Geometry::Euclidean] {
            let p = |width_model| SoftBenchParams {
                anchors: 20,
                scale: 100.0,
                seed: 1,
                width_model,
                geometry,
                probes: 100_000,
                probe_seed: 2,
                expand: 0.01,
            };
            let eq = (estimate_soft(&y, &p(WidthModel::Equal)).unwrap().value - truth).abs();
            let vo = (estimate_soft(&y, &p(WidthModel::Voronoi)).unwrap().value - truth).abs();
            // Random anchors give unequal cells, so Voronoi widths are the
            // more accurate of the two; both stay close on flat data.
            assert!(
                eq < 0.15 && vo < 0.05 && vo <= eq,
                "{geometry:?} equal {eq} voronoi {vo}"
            );
        }
    }

    #[test]
    fn standard_normal_one_dim_histogram() {
        let g = GaussianSpec::new(vec![0.0], vec![1.0], 0).unwrap();
        let y = g.sample(100_000, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = crate::descriptors::binned_descriptor(&y, 20).unwrap();
        let w = b.grid.width(0).unwrap().ln();
        let h = to_differential_log(b.per_dim[0].dist.probs(), &[w; 20]).unwrap();
        assert!((h - half_log_2pi_e()).abs() < 0.05, "{h}");
    }

    fn trivial() -> SweepConfig {
        SweepConfig {
            dims: vec![16],
            samples: vec![100, 1000],
            cells: vec![10],
            trials: 3,
            probes: 2000,
            ..SweepConfig::default()
        }
    }

    #[test]
    fn trivial_sweep_counts_and_pairs() {
        let rows = run_sweep(&trivial()).unwrap();
        assert_eq!(rows.len(), 24);
        for t in 0..3 {
            let truths: Vec<f64> = rows.iter().filter(|r| r.trial == t).map(|r| r.truth).collect();
            assert!(truths.windows(2).all(|w| w[0] == w[1]));
        }
        assert!(rows.iter().all(|r| r.error == r.estimate - r.truth));
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_csv(&rows, &mut a).unwrap();
        write_csv(&run_sweep(&trivial()).unwrap(), &mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert!(
            text.starts_with("method,dim,samples,cells,trial,estimate_nats,truth_nats,error_nats,status\n")
        );
        assert_eq!(text.lines().count(), 25);
    }

    #[test]
    fn failures_become_rows() {
        let cfg = SweepConfig {
            samples: vec![5],
            cells: vec![10],
            methods: vec![Method::Kmeans],
            ..trivial()
        };
        let rows = run_sweep(&cfg).unwrap();
        assert!(rows.iter().all(|r| matches!(r.status, Status::Error(_))));
        assert!(run_sweep(&SweepConfig {
            dims: vec![],
            ..trivial()
        })
        .is_err());
    }

    #[test]
    fn method_lists() {
        assert_eq!(Method::parse_list("all").unwrap(), Method::ALL.to_vec());
        assert_eq!(
            Method::parse_list("soft_voronoi_euclidean,kmeans").unwrap(),
            vec![Method::Kmeans, Method::SoftVoronoiEuclidean]
        );
        assert!(Method::parse_list("histogram").is_err());
    }
}
