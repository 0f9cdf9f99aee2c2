use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::MeaningSignalDataset;
use crate::error::{Error, Result};
use crate::info::{pearson, spearman, Correlation};

/// Correlation used between meaning and signal distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationMethod {
    #[default]
    Spearman,
    Pearson,
}

impl std::str::FromStr for CorrelationMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spearman" => Ok(Self::Spearman),
            "pearson" => Ok(Self::Pearson),
            other => Err(Error::validation(format!("unknown correlation `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topsim {
    pub correlation: Correlation,
    pub method: CorrelationMethod,
    /// Number of meaning pairs compared.
    pub pairs: usize,
    /// Whether `pairs` is a seeded subsample of all pairs.
    pub subsampled: bool,
    pub meaning_distance: String,
    pub signal_distance: String,
}

/// Character-level edit distance.
pub fn levenshtein(a: &[usize], b: &[usize]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn hamming(a: &[usize], b: &[usize]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// Correlation between pairwise meaning (Hamming) and signal (Levenshtein)
/// distances. When the number of distinct pairs exceeds `max_pairs`, that
/// many pairs are drawn with the seeded generator.
pub fn topographic_similarity(
    data: &MeaningSignalDataset,
    max_pairs: usize,
    seed: u64,
    method: CorrelationMethod,
) -> Result<Topsim> {
    let n = data.len();
    if n < 3 {
        return Err(Error::validation(format!(
            "topographic similarity needs at least 3 rows, got {n}"
        )));
    }
    if max_pairs < 3 {
        return Err(Error::validation("max_pairs must be at least 3"));
    }
    let all_pairs = n * (n - 1) / 2;
    let pairs: Vec<(usize, usize)> = if all_pairs <= max_pairs {
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..max_pairs)
            .map(|_| {
                let i = rng.random_range(0..n);
                let mut j = rng.random_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                (i.min(j), i.max(j))
            })
            .collect()
    };
    let (meaning_d, signal_d): (Vec<f64>, Vec<f64>) = pairs
        .iter()
        .map(|&(i, j)| {
            (
                hamming(&data.meanings()[i], &data.meanings()[j]) as f64,
                levenshtein(&data.signals()[i], &data.signals()[j]) as f64,
            )
        })
        .unzip();
    let correlation = match method {
        CorrelationMethod::Spearman => spearman(&meaning_d, &signal_d)?,
        CorrelationMethod::Pearson => pearson(&meaning_d, &signal_d)?,
    };
    Ok(Topsim {
        correlation,
        method,
        pairs: pairs.len(),
        subsampled: all_pairs > max_pairs,
        meaning_distance: "hamming".into(),
        signal_distance: "levenshtein".into(),
    })
}
