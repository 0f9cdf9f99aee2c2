use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Backend, Descriptor, DescriptorParams, RepresentationSet};
use crate::error::{Error, Result};
use crate::info::Categorical;
use crate::numeric::{nearest_centers, CompensatedSum};

pub const DEFAULT_MAX_ITERS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct KmeansDescriptor {
    pub descriptor: Descriptor,
    /// `k × dim`, row-major.
    pub centers: Vec<f64>,
    pub assignments: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++ seeding: first center uniform, then proportional to squared
/// distance from the nearest chosen center.
fn plus_plus(y: &RepresentationSet, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = y.count();
    let mut centers = Vec::with_capacity(k * y.dim());
    centers.extend_from_slice(y.row(rng.random_range(0..n)));
    let mut d2: Vec<f64> = y
        .rows()
        .map(|r| squared_distance(r, &centers[..y.dim()]))
        .collect();
    while centers.len() < k * y.dim() {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if acc > target && w > 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let start = centers.len();
        centers.extend_from_slice(y.row(pick));
        for (d, r) in d2.iter_mut().zip(y.rows()) {
            *d = d.min(squared_distance(r, &centers[start..]));
        }
    }
    centers
}

/// Cluster-occupancy descriptor from seeded k-means.
pub fn kmeans_descriptor(
    y: &RepresentationSet,
    k: usize,
    seed: u64,
    max_iters: usize,
) -> Result<KmeansDescriptor> {
    if k == 0 || k > y.count() {
        return Err(Error::validation(format!(
            "k = {k} must be between 1 and the row count {}",
            y.count()
        )));
    }
    let dim = y.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = plus_plus(y, k, &mut rng);
    let mut assignments = nearest_centers(y.as_slice(), &centers, dim);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iters {
        iterations += 1;
        let mut sums = vec![CompensatedSum::new(); k * dim];
        let mut sizes = vec![0usize; k];
        for (row, &c) in y.rows().zip(&assignments) {
            sizes[c] += 1;
            for (s, &v) in sums[c * dim..(c + 1) * dim].iter_mut().zip(row) {
                s.add(v);
            }
        }
        for c in 0..k {
            // An empty cluster keeps its previous center.
            if sizes[c] > 0 {
                for j in 0..dim {
                    centers[c * dim + j] = sums[c * dim + j].total() / sizes[c] as f64;
                }
            }
        }
        let next = nearest_centers(y.as_slice(), &centers, dim);
        if next == assignments {
            converged = true;
            break;
        }
        assignments = next;
    }
    let mut counts = vec![0u64; k];
    for &c in &assignments {
        counts[c] += 1;
    }
    let dist = Categorical::from_counts(&counts)?;
    let nonempty = dist.nonempty();
    Ok(KmeansDescriptor {
        descriptor: Descriptor {
            dist,
            backend: Backend::Kmeans,
            params: DescriptorParams {
                cells: k,
                scale: None,
                seed: Some(seed),
                subspace_width: None,
            },
            samples: y.count(),
            nonempty,
        },
        centers,
        assignments,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::entropy;
    use rand_distr::StandardNormal;

    #[test]
    fn one_cluster_per_distinct_row() {
        let rows: Vec<[f64; 2]> = (0..12).map(|i| [i as f64, (i * i) as f64 * 0.1]).collect();
        let y = RepresentationSet::from_rows(&rows).unwrap();
        let d = kmeans_descriptor(&y, 12, 3, 50).unwrap();
        assert!((entropy(&d.descriptor.dist) - 12f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn planted_blobs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rows: Vec<[f64; 3]> = (0..400)
            .map(|i| {
                let c = if i % 2 == 0 { 100.0 } else { -100.0 };
                [
                    c + rng.sample::<f64, _>(StandardNormal),
                    rng.sample(StandardNormal),
                    rng.sample(StandardNormal),
                ]
            })
            .collect();
        let y = RepresentationSet::from_rows(&rows).unwrap();
        let d = kmeans_descriptor(&y, 2, 9, 100).unwrap();
        assert!(d.converged);
        assert!((entropy(&d.descriptor.dist) - 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn single_cluster_and_bounds() {
        let y = RepresentationSet::from_rows(&[[0.0], [1.0], [5.0]]).unwrap();
        let d = kmeans_descriptor(&y, 1, 0, 10).unwrap();
        assert_eq!(entropy(&d.descriptor.dist), 0.0);
        assert_eq!(d.centers, vec![2.0]);
        assert!(kmeans_descriptor(&y, 4, 0, 10).is_err());
        assert!(kmeans_descriptor(&y, 0, 0, 10).is_err());
    }

    #[test]
    fn seeded() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rows: Vec<[f64; 2]> = (0..200).map(|_| [rng.random(), rng.random()]).collect();
        let y = RepresentationSet::from_rows(&rows).unwrap();
        assert_eq!(
            kmeans_descriptor(&y, 7, 2, 30).unwrap(),
            kmeans_descriptor(&y, 7, 2, 30).unwrap()
        );
    }
}
