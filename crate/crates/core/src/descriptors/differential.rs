use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::RepresentationSet;
use crate::error::{Error, Result};
use crate::numeric::{max_dot_centers, nearest_centers, CompensatedSum};

/// Default number of uniform probes for Voronoi cell volumes.
pub const DEFAULT_PROBES: usize = 100_000;

/// Histogram estimate of differential entropy, `−Σ p·ln(p/w)` over cells
/// with non-zero probability.
pub fn to_differential(probs: &[f64], widths: &[f64]) -> Result<f64> {
    if let Some(i) = widths.iter().position(|&w| w.is_nan() || w <= 0.0) {
        return Err(Error::validation(format!(
            "cell {i} has non-positive width {}",
            widths[i]
        )));
    }
    let log_widths: Vec<f64> = widths.iter().map(|w| w.ln()).collect();
    to_differential_log(probs, &log_widths)
}

/// Same as [`to_differential`] with widths given as logarithms, which keeps
/// high-dimensional cell volumes from under- or overflowing.
pub fn to_differential_log(probs: &[f64], log_widths: &[f64]) -> Result<f64> {
    if probs.len() != log_widths.len() {
        return Err(Error::shape(format!(
            "{} probabilities but {} widths",
            probs.len(),
            log_widths.len()
        )));
    }
    if let Some(i) = log_widths.iter().position(|w| w.is_nan() || *w == f64::INFINITY) {
        return Err(Error::validation(format!("cell {i} has an invalid width")));
    }
    let mut acc = CompensatedSum::new();
    for (&p, &lw) in probs.iter().zip(log_widths) {
        if p > 0.0 {
            acc.add(-p * (p.ln() - lw));
        }
    }
    Ok(acc.total())
}

/// Axis-aligned box containing the attested samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoundingBox {
    /// Per-dimension `[min, max]` widened by `expand` times the range on each
    /// side.
    pub fn attested(y: &RepresentationSet, expand: f64) -> Self {
        let (lo, hi) = y
            .column_ranges()
            .into_iter()
            .map(|(a, b)| {
                let pad = (b - a) * expand;
                (a - pad, b + pad)
            })
            .unzip();
        Self { lo, hi }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// `−∞` when some dimension has zero width.
    pub fn log_volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| (b - a).ln()).sum()
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo.iter().zip(&self.hi).any(|(a, b)| b <= a)
    }

    /// Squared length of the box diagonal.
    pub fn diagonal_sq(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| (b - a) * (b - a)).sum()
    }

    pub fn sample<R: Rng>(&self, rng: &mut R, out: &mut [f64]) {
        for ((o, a), b) in out.iter_mut().zip(&self.lo).zip(&self.hi) {
            *o = a + (b - a) * rng.random::<f64>();
        }
    }
}

/// Every cell gets `1/n` of the box.
pub fn equal_log_widths(bbox: &BoundingBox, n: usize) -> Vec<f64> {
    vec![bbox.log_volume() - (n as f64).ln(); n]
}

/// How probes are assigned to cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    /// Largest dot product with a unit anchor, i.e. the angular cone.
    Angular,
    /// Nearest center in squared Euclidean distance.
    Euclidean,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoronoiWidths {
    pub log_widths: Vec<f64>,
    /// Smoothed fraction of the box belonging to each cell.
    pub fractions: Vec<f64>,
    pub probes: usize,
}

impl VoronoiWidths {
    /// Delta-method standard error, in nats, that probe sampling adds to a
    /// differential estimate with cell probabilities `probs`.
    pub fn standard_error(&self, probs: &[f64]) -> f64 {
        let s: f64 = probs.iter().zip(&self.fractions).map(|(p, f)| p * p / f).sum();
        ((s - 1.0).max(0.0) / self.probes as f64).sqrt()
    }
}

/// Monte-Carlo cell volumes: the share of uniform box probes that fall into
/// each center's cell, add-one smoothed so no cell has zero volume.
pub fn voronoi_log_widths(
    bbox: &BoundingBox,
    centers: &[f64],
    geometry: Geometry,
    probes: usize,
    seed: u64,
) -> Result<VoronoiWidths> {
    let dim = bbox.dim();
    if dim == 0 || centers.is_empty() || !centers.len().is_multiple_of(dim) {
        return Err(Error::shape("centers do not match the box dimension"));
    }
    if probes == 0 {
        return Err(Error::validation("probe count must be positive"));
    }
    const BLOCK: usize = 4096;
    let k = centers.len() / dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; k];
    let mut buf = vec![0.0; BLOCK * dim];
    let mut done = 0;
    while done < probes {
        let m = BLOCK.min(probes - done);
        let block = &mut buf[..m * dim];
        for row in block.chunks_exact_mut(dim) {
            bbox.sample(&mut rng, row);
        }
        let owners = match geometry {
            Geometry::Angular => max_dot_centers(block, centers, dim),
            Geometry::Euclidean => nearest_centers(block, centers, dim),
        };
        for c in owners {
            counts[c] += 1;
        }
        done += m;
    }
    let denom = (probes + k) as f64;
    let fractions: Vec<f64> = counts.iter().map(|&c| (c as f64 + 1.0) / denom).collect();
    let log_volume = bbox.log_volume();
    Ok(VoronoiWidths {
        log_widths: fractions.iter().map(|f| log_volume + f.ln()).collect(),
        fractions,
        probes,
    })
}
