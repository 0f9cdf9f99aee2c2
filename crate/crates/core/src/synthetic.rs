//! Seeded synthetic data with known structure.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::descriptors::RepresentationSet;
use crate::error::{Error, Result};
use crate::io::LabelTable;

fn random_centers<R: Rng>(rng: &mut R, clusters: usize, dim: usize, separation: f64) -> Vec<Vec<f64>> {
    (0..clusters)
        .map(|_| {
            let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter().map(|x| x / norm * separation).collect()
        })
        .collect()
}

/// Gaussian blobs around random directions.
///
/// Each center is a random unit direction times `separation`; rows add
/// isotropic noise whose expected norm is about `spread`. Rows cycle through
/// the clusters, so row `i` belongs to cluster `i % clusters`.
pub fn planted_clusters(
    clusters: usize,
    rows: usize,
    dim: usize,
    separation: f64,
    spread: f64,
    seed: u64,
) -> Result<(RepresentationSet, Vec<usize>)> {
    if clusters == 0 || rows == 0 || dim == 0 {
        return Err(Error::validation("clusters, rows and dim must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = random_centers(&mut rng, clusters, dim, separation);
    let noise = spread / (dim as f64).sqrt();
    let mut data = Vec::with_capacity(rows * dim);
    let mut labels = Vec::with_capacity(rows);
    for i in 0..rows {
        let c = i % clusters;
        labels.push(c);
        for &x in &centers[c] {
            data.push(x + noise * rng.sample::<f64, _>(StandardNormal));
        }
    }
    Ok((RepresentationSet::new(data, rows, dim)?, labels))
}

/// i.i.d. standard-normal rows.
pub fn standard_normal(rows: usize, dim: usize, seed: u64) -> Result<RepresentationSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..rows * dim).map(|_| rng.sample(StandardNormal)).collect();
    RepresentationSet::new(data, rows, dim)
}

/// Settings of the bundled planted-cluster archive.
pub const PLANTED_CORPUS: PlantedCorpus = PlantedCorpus {
    tokens: 3,
    rows: 600,
    dim: 64,
    separation: 1.0,
    spread: 0.25,
    seed: 3,
};

/// A toy corpus whose token identity is planted in the vectors.
///
/// Sentences of 3 to 8 tokens are drawn uniformly from `tokens` word types
/// (`a`, `b`, ...). Each vector is its token's cluster center plus noise, so
/// the token labels are recoverable while the next word, and hence any
/// bigram split of a token, is independent of the vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantedCorpus {
    pub tokens: usize,
    pub rows: usize,
    pub dim: usize,
    pub separation: f64,
    pub spread: f64,
    pub seed: u64,
}

impl PlantedCorpus {
    /// Row-major f32 vectors and their label table with a `token` column.
    pub fn generate(&self) -> Result<(Vec<f32>, LabelTable)> {
        if self.tokens == 0 || self.tokens > 26 || self.rows == 0 || self.dim == 0 {
            return Err(Error::validation(
                "planted corpus needs 1..=26 tokens and a non-empty shape",
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let centers = random_centers(&mut rng, self.tokens, self.dim, self.separation);
        let noise = self.spread / (self.dim as f64).sqrt();
        let mut vectors = Vec::with_capacity(self.rows * self.dim);
        let mut table = LabelTable::default();
        let mut tokens = Vec::with_capacity(self.rows);
        let mut sentence = 0;
        while tokens.len() < self.rows {
            let len = rng.random_range(3..=8).min(self.rows - tokens.len());
            for p in 0..len {
                let t = rng.random_range(0..self.tokens);
                tokens.push(char::from(b'a' + t as u8).to_string());
                table.sentence_id.push(sentence);
                table.position.push(p as u64);
                for &c in &centers[t] {
                    vectors.push((c + noise * rng.sample::<f64, _>(StandardNormal)) as f32);
                }
            }
            sentence += 1;
        }
        table.columns.push(("token".to_string(), tokens));
        Ok((vectors, table))
    }
}
