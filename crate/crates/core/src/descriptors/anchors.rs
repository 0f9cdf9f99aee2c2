use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of anchors on the sphere.
pub const DEFAULT_ANCHORS: usize = 50;
/// Default multiplier applied to cosine similarities before the softmax.
pub const DEFAULT_SCALE: f64 = 100.0;

/// Unit vectors that act as soft bins for the soft-entropy estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorSet {
    points: Vec<f64>,
    n: usize,
    dim: usize,
    seed: u64,
    scale: f64,
}

impl AnchorSet {
    /// Wraps explicit anchor points, normalizing each row.
    pub fn from_points(points: Vec<f64>, n: usize, dim: usize, scale: f64) -> Result<Self> {
        check_params(dim, n, scale)?;
        if points.len() != n * dim {
            return Err(Error::shape(format!(
                "{} values for {n}×{dim} anchors",
                points.len()
            )));
        }
        let mut points = points;
        for (i, row) in points.chunks_exact_mut(dim).enumerate() {
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(norm > 0.0 && norm.is_finite()) {
                return Err(Error::validation(format!("anchor {i} has no direction")));
            }
            row.iter_mut().for_each(|v| *v /= norm);
        }
        Ok(Self {
            points,
            n,
            dim,
            seed: 0,
            scale,
        })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

fn check_params(dim: usize, n: usize, scale: f64) -> Result<()> {
    if dim == 0 {
        return Err(Error::validation("anchor dimension must be at least 1"));
    }
    if n < 2 {
        return Err(Error::validation(format!(
            "at least 2 anchors are needed for a non-degenerate descriptor, got {n}"
        )));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::validation(format!("scale must be positive, got {scale}")));
    }
    Ok(())
}

/// Draws `n` points uniformly on the unit sphere in `dim` dimensions by
/// normalizing standard-normal vectors. Same arguments, same points.
pub fn sample_anchors(dim: usize, n: usize, seed: u64, scale: f64) -> Result<AnchorSet> {
    check_params(dim, n, scale)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n * dim);
    let mut row = vec![0.0; dim];
    while points.len() < n * dim {
        for v in row.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        // A zero draw has no direction; redraw.
        if norm == 0.0 {
            continue;
        }
        points.extend(row.iter().map(|v| v / norm));
    }
    Ok(AnchorSet {
        points,
        n,
        dim,
        seed,
        scale,
    })
}
