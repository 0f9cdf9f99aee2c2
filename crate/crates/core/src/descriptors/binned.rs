use serde::{Deserialize, Serialize};

use super::{Backend, Descriptor, DescriptorParams, RepresentationSet};
use crate::error::{Error, Result};
use crate::info::{entropy, miller_madow, Categorical};
use crate::numeric::mean;

/// Equal-width bins over the attested range of each dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinGrid {
    /// `(min, max, bins)` per dimension. A zero-width dimension has one bin.
    pub dims: Vec<(f64, f64, usize)>,
}

impl BinGrid {
    pub fn fit(y: &RepresentationSet, bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::validation("bin count must be at least 1"));
        }
        let dims = y
            .column_ranges()
            .into_iter()
            .map(|(lo, hi)| (lo, hi, if hi > lo { bins } else { 1 }))
            .collect();
        Ok(Self { dims })
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    /// Bin of `value` in dimension `d`; the maximum lands in the top bin and
    /// values outside the range are clamped to the edge bins.
    pub fn bin(&self, d: usize, value: f64) -> usize {
        let (lo, hi, n) = self.dims[d];
        if n == 1 || value <= lo {
            return 0;
        }
        let b = ((value - lo) / (hi - lo) * n as f64).floor();
        (b as usize).min(n - 1)
    }

    /// Width of one bin in dimension `d`, or `None` for a zero-width dimension.
    pub fn width(&self, d: usize) -> Option<f64> {
        let (lo, hi, n) = self.dims[d];
        (hi > lo).then(|| (hi - lo) / n as f64)
    }

    /// Dimensions with non-zero width.
    pub fn active_dims(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.dims.len()).filter(|&d| self.dims[d].1 > self.dims[d].0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinnedDescriptor {
    pub grid: BinGrid,
    /// One descriptor per dimension.
    pub per_dim: Vec<Descriptor>,
    /// Miller–Madow corrected entropy per dimension.
    pub entropies: Vec<f64>,
    /// Mean of `entropies`.
    pub h_dw: f64,
    /// `count × dim` bin index of every value, row-major.
    bins: Vec<u32>,
}

impl BinnedDescriptor {
    pub fn bin_indices(&self) -> &[u32] {
        &self.bins
    }

    /// Bin indices of dimension `d` in row order.
    pub fn column_bins(&self, d: usize) -> impl Iterator<Item = usize> + '_ {
        self.bins
            .iter()
            .skip(d)
            .step_by(self.grid.dim())
            .map(|&b| b as usize)
    }
}

/// Dimension-wise binned descriptor with per-dimension Miller–Madow entropy.
pub fn binned_descriptor(y: &RepresentationSet, bins: usize) -> Result<BinnedDescriptor> {
    if bins > u32::MAX as usize {
        return Err(Error::validation("bin count too large"));
    }
    let grid = BinGrid::fit(y, bins)?;
    let dim = y.dim();
    let mut indices = Vec::with_capacity(y.count() * dim);
    let mut counts: Vec<Vec<u64>> = grid.dims.iter().map(|&(_, _, n)| vec![0; n]).collect();
    for row in y.rows() {
        for (d, &v) in row.iter().enumerate() {
            let b = grid.bin(d, v);
            counts[d][b] += 1;
            indices.push(b as u32);
        }
    }
    let mut per_dim = Vec::with_capacity(dim);
    let mut entropies = Vec::with_capacity(dim);
    for c in &counts {
        let dist = Categorical::from_counts(c)?;
        let nonempty = c.iter().filter(|&&x| x > 0).count();
        let h = miller_madow(entropy(&dist), nonempty, y.count(), (c.len() as f64).ln())?;
        entropies.push(h);
        per_dim.push(Descriptor {
            dist,
            backend: Backend::Binned,
            params: DescriptorParams {
                cells: c.len(),
                scale: None,
                seed: None,
                subspace_width: None,
            },
            samples: y.count(),
            nonempty,
        });
    }
    Ok(BinnedDescriptor {
        grid,
        per_dim,
        h_dw: mean(&entropies),
        entropies,
        bins: indices,
    })
}
