use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    sample_anchors, AnchorSet, Backend, Descriptor, DescriptorParams, RepresentationSet, DEFAULT_ANCHORS,
    DEFAULT_SCALE,
};
use crate::error::{Error, Result};
use crate::info::{entropy, miller_madow, Categorical};
use crate::numeric::{matmul_transposed, mean, CompensatedSum};

/// Rows per block in the responsibility kernel. Fixed so that results do not
/// depend on the thread count.
const ROW_BLOCK: usize = 256;

/// Default column width for subspace entropy.
pub const DEFAULT_SUBSPACE_WIDTH: usize = 32;

/// Soft-estimator settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoftConfig {
    pub anchors: usize,
    pub scale: f64,
    pub seed: u64,
    /// Apply the Miller–Madow correction to entropies.
    pub miller_madow: bool,
}

impl Default for SoftConfig {
    fn default() -> Self {
        Self {
            anchors: DEFAULT_ANCHORS,
            scale: DEFAULT_SCALE,
            seed: 0,
            miller_madow: false,
        }
    }
}

/// Soft descriptor plus the per-row responsibilities it was summed from.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftDescriptor {
    pub descriptor: Descriptor,
    /// `count × n`, row-major. Rows listed in `excluded_rows` are all zero.
    responsibilities: Vec<f64>,
    excluded_rows: Vec<usize>,
    n: usize,
}

impl SoftDescriptor {
    pub fn responsibilities(&self) -> &[f64] {
        &self.responsibilities
    }

    pub fn responsibility_row(&self, row: usize) -> &[f64] {
        &self.responsibilities[row * self.n..(row + 1) * self.n]
    }

    /// Rows dropped because they have zero norm.
    pub fn excluded_rows(&self) -> &[usize] {
        &self.excluded_rows
    }

    /// Renormalized responsibility sum over a subset of rows. Returns `None`
    /// when none of the rows contributed.
    pub fn conditional(&self, rows: &[usize]) -> Option<Categorical> {
        let mut acc = vec![CompensatedSum::new(); self.n];
        for &r in rows {
            for (a, &v) in acc.iter_mut().zip(self.responsibility_row(r)) {
                a.add(v);
            }
        }
        let sums: Vec<f64> = acc.iter().map(|a| a.total()).collect();
        Categorical::from_weights(&sums).ok()
    }
}

/// Scaled-softmax responsibilities of each row over the anchors.
///
/// Rows are projected to the unit sphere, compared with every anchor by dot
/// product, scaled, and passed through a softmax. Zero-norm rows get an
/// all-zero row and are reported in the second return value.
pub(crate) fn responsibilities(y: &RepresentationSet, anchors: &AnchorSet) -> Result<(Vec<f64>, Vec<usize>)> {
    if y.dim() != anchors.dim() {
        return Err(Error::shape(format!(
            "representations have dimension {} but anchors have {}",
            y.dim(),
            anchors.dim()
        )));
    }
    let (dim, n) = (y.dim(), anchors.n());
    let mut out = vec![0.0; y.count() * n];
    let excluded: Vec<Vec<usize>> = out
        .par_chunks_mut(ROW_BLOCK * n)
        .zip(y.as_slice().par_chunks(ROW_BLOCK * dim))
        .enumerate()
        .map(|(block, (resp, rows))| {
            let m = rows.len() / dim;
            let mut unit = rows.to_vec();
            let mut excluded = Vec::new();
            for (i, row) in unit.chunks_exact_mut(dim).enumerate() {
                let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > 0.0 {
                    row.iter_mut().for_each(|v| *v /= norm);
                } else {
                    excluded.push(block * ROW_BLOCK + i);
                }
            }
            matmul_transposed(&unit, anchors.points(), m, dim, n, resp);
            let mut next_excluded = excluded.iter().peekable();
            for (i, row) in resp.chunks_exact_mut(n).enumerate() {
                if next_excluded.peek() == Some(&&(block * ROW_BLOCK + i)) {
                    next_excluded.next();
                    row.fill(0.0);
                    continue;
                }
                softmax_in_place(row, anchors.scale());
            }
            excluded
        })
        .collect();
    Ok((out, excluded.into_iter().flatten().collect()))
}

#[inline]
fn softmax_in_place(row: &mut [f64], scale: f64) {
    let max = row.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let mut total = 0.0;
    for v in row.iter_mut() {
        *v = (scale * (*v - max)).exp();
        total += *v;
    }
    row.iter_mut().for_each(|v| *v /= total);
}

/// Column sums of a responsibility matrix in row order.
pub(crate) fn column_sums(resp: &[f64], n: usize) -> Vec<f64> {
    let mut acc = vec![CompensatedSum::new(); n];
    for row in resp.chunks_exact(n) {
        for (a, &v) in acc.iter_mut().zip(row) {
            a.add(v);
        }
    }
    acc.iter().map(|a| a.total()).collect()
}

/// Distribution over anchors summarizing a representation set.
pub fn soft_descriptor(y: &RepresentationSet, anchors: &AnchorSet) -> Result<SoftDescriptor> {
    let (resp, excluded) = responsibilities(y, anchors)?;
    let n = anchors.n();
    let samples = y.count() - excluded.len();
    if samples == 0 {
        return Err(Error::validation(
            "every row has zero norm; no direction to describe",
        ));
    }
    let dist = Categorical::from_weights(&column_sums(&resp, n))?;
    let nonempty = soft_nonempty(&dist, samples);
    Ok(SoftDescriptor {
        descriptor: Descriptor {
            dist,
            backend: Backend::Soft,
            params: DescriptorParams {
                cells: n,
                scale: Some(anchors.scale()),
                seed: Some(anchors.seed()),
                subspace_width: None,
            },
            samples,
            nonempty,
        },
        responsibilities: resp,
        excluded_rows: excluded,
        n,
    })
}

/// Events above the `1/(10·n·samples)` floor; softmax never yields exact zeros.
fn soft_nonempty(dist: &Categorical, samples: usize) -> usize {
    let floor = 1.0 / (10.0 * dist.support_size() as f64 * samples as f64);
    dist.probs().iter().filter(|&&p| p > floor).count().max(1)
}

/// Entropy of a soft descriptor, optionally Miller–Madow corrected and
/// capped at `ln n`.
pub fn descriptor_entropy(d: &Descriptor, mm: bool) -> f64 {
    let h = entropy(&d.dist);
    if !mm {
        return h;
    }
    let cap = (d.dist.support_size() as f64).ln();
    miller_madow(h, d.nonempty.max(1), d.samples.max(1), cap).unwrap_or(h)
}

pub fn soft_entropy(y: &RepresentationSet, anchors: &AnchorSet, mm: bool) -> Result<f64> {
    Ok(descriptor_entropy(&soft_descriptor(y, anchors)?.descriptor, mm))
}

/// How anchor seeds are chosen for successive column chunks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChunkSeeds {
    /// Chunk `c` uses `seed + c`.
    #[default]
    Offset,
    /// Every chunk uses `seed`.
    Shared,
}

impl ChunkSeeds {
    pub fn seed_for(self, base: u64, chunk: usize) -> u64 {
        match self {
            ChunkSeeds::Offset => base.wrapping_add(chunk as u64),
            ChunkSeeds::Shared => base,
        }
    }
}

pub(crate) fn check_width(dim: usize, width: usize) -> Result<()> {
    if width == 0 || !dim.is_multiple_of(width) {
        return Err(Error::validation(format!(
            "dimension {dim} is not divisible by subspace width {width}; pad or choose a divisor"
        )));
    }
    Ok(())
}

/// One soft descriptor per `width`-column chunk.
pub fn subspace_descriptors(
    y: &RepresentationSet,
    width: usize,
    cfg: &SoftConfig,
    seeds: ChunkSeeds,
) -> Result<Vec<SoftDescriptor>> {
    check_width(y.dim(), width)?;
    (0..y.dim() / width)
        .map(|c| {
            let anchors = sample_anchors(width, cfg.anchors, seeds.seed_for(cfg.seed, c), cfg.scale)?;
            let mut d = soft_descriptor(&y.columns(c * width, width)?, &anchors)?;
            d.descriptor.params.subspace_width = Some(width);
            Ok(d)
        })
        .collect()
}

/// Mean chunk entropy over one or more layers.
pub fn subspace_entropy(layers: &[RepresentationSet], width: usize, cfg: &SoftConfig) -> Result<f64> {
    if layers.is_empty() {
        return Err(Error::validation("no layers supplied"));
    }
    let mut entropies = Vec::new();
    for layer in layers {
        for d in subspace_descriptors(layer, width, cfg, ChunkSeeds::Offset)? {
            entropies.push(descriptor_entropy(&d.descriptor, cfg.miller_madow));
        }
    }
    Ok(mean(&entropies))
}

/// Mean full-width soft entropy across layers, with one shared anchor set.
pub fn layer_entropy(layers: &[RepresentationSet], cfg: &SoftConfig) -> Result<f64> {
    let first = layers
        .first()
        .ok_or_else(|| Error::validation("no layers supplied"))?;
    if let Some(l) = layers.iter().find(|l| l.dim() != first.dim()) {
        return Err(Error::shape(format!(
            "layer dimensions differ: {} vs {}",
            first.dim(),
            l.dim()
        )));
    }
    let anchors = sample_anchors(first.dim(), cfg.anchors, cfg.seed, cfg.scale)?;
    let entropies = layers
        .iter()
        .map(|l| soft_entropy(l, &anchors, cfg.miller_madow))
        .collect::<Result<Vec<_>>>()?;
    Ok(mean(&entropies))
}
