//! Discrete information-theory primitives.
//!
//! All quantities are in nats and use maximum-likelihood probabilities with
//! `0·ln 0 = 0`. Everything else in the crate reduces to these functions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, CompensatedSum};

/// Tolerance on `Σp = 1` accepted by [`Categorical::new`].
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// A finite probability distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Categorical {
    probs: Vec<f64>,
}

impl Categorical {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::validation("categorical distribution has empty support"));
        }
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(Error::validation(format!(
                "probability {i} is {p}; expected a finite non-negative value"
            )));
        }
        let total = compensated_sum(probs.iter().copied());
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::validation(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self { probs })
    }

    /// Normalizes non-negative weights into a distribution.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::validation(format!(
                "weight {w} is not finite and non-negative"
            )));
        }
        let total = compensated_sum(weights.iter().copied());
        if total <= 0.0 {
            return Err(Error::validation("weights sum to zero"));
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::validation("all counts are zero"));
        }
        Self::new(counts.iter().map(|&c| c as f64 / total as f64).collect())
    }

    pub fn uniform(support_size: usize) -> Self {
        assert!(support_size > 0, "uniform distribution needs a non-empty support");
        Self {
            probs: vec![1.0 / support_size as f64; support_size],
        }
    }

    pub fn one_hot(support_size: usize, event: usize) -> Self {
        assert!(event < support_size);
        let mut probs = vec![0.0; support_size];
        probs[event] = 1.0;
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn support_size(&self) -> usize {
        self.probs.len()
    }

    /// Number of events with strictly positive probability.
    pub fn nonempty(&self) -> usize {
        self.probs.iter().filter(|&&p| p > 0.0).count()
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.probs
    }
}

impl TryFrom<Vec<f64>> for Categorical {
    type Error = Error;

    fn try_from(probs: Vec<f64>) -> Result<Self> {
        Self::new(probs)
    }
}

impl From<Categorical> for Vec<f64> {
    fn from(c: Categorical) -> Self {
        c.probs
    }
}

/// `−Σ p ln p` over raw probabilities, without validation.
pub fn entropy_of(probs: &[f64]) -> f64 {
    let mut acc = CompensatedSum::new();
    for &p in probs {
        if p > 0.0 {
            acc.add(-p * p.ln());
        }
    }
    let h = acc.total().max(0.0);
    if probs.len() > 1 {
        h.min((probs.len() as f64).ln())
    } else {
        0.0
    }
}

pub fn entropy(dist: &Categorical) -> f64 {
    entropy_of(dist.probs())
}

/// Entropy normalized by `ln(support_size)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Efficiency {
    pub value: f64,
    /// Set when the support has a single event, where the normalizer is zero
    /// and the value is defined as 0.
    pub degenerate_support: bool,
}

pub fn efficiency(dist: &Categorical) -> Efficiency {
    efficiency_of(entropy(dist), dist.support_size())
}

pub fn efficiency_of(entropy_nats: f64, support_size: usize) -> Efficiency {
    if support_size < 2 {
        return Efficiency {
            value: 0.0,
            degenerate_support: true,
        };
    }
    Efficiency {
        value: (entropy_nats / (support_size as f64).ln()).clamp(0.0, 1.0),
        degenerate_support: false,
    }
}

/// How per-label conditional entropies are combined over a label set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    /// Unweighted mean over labels.
    #[default]
    Uniform,
    /// Mean weighted by each label's share of observations.
    Frequency,
}

impl std::str::FromStr for Weighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Weighting::Uniform),
            "frequency" => Ok(Weighting::Frequency),
            other => Err(Error::validation(format!(
                "unknown weighting `{other}` (expected uniform or frequency)"
            ))),
        }
    }
}

/// Event counts per label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledCounts<L: Ord, E: Ord> {
    counts: BTreeMap<L, BTreeMap<E, u64>>,
    total: u64,
}

impl<L: Ord + Clone + std::fmt::Debug, E: Ord + Clone> LabeledCounts<L, E> {
    /// Builds counts from a nested table, dropping zero entries. Rejects
    /// labels whose row sums to zero.
    pub fn from_table(table: BTreeMap<L, BTreeMap<E, u64>>) -> Result<Self> {
        let mut counts = BTreeMap::new();
        let mut total = 0;
        for (label, row) in table {
            let row: BTreeMap<E, u64> = row.into_iter().filter(|(_, c)| *c > 0).collect();
            let row_total: u64 = row.values().sum();
            if row_total == 0 {
                return Err(Error::validation(format!("label {label:?} has no observations")));
            }
            total += row_total;
            counts.insert(label, row);
        }
        if total == 0 {
            return Err(Error::validation("no observations"));
        }
        Ok(Self { counts, total })
    }

    pub fn from_observations<I: IntoIterator<Item = (L, E)>>(observations: I) -> Result<Self> {
        let mut table: BTreeMap<L, BTreeMap<E, u64>> = BTreeMap::new();
        for (label, event) in observations {
            *table.entry(label).or_default().entry(event).or_insert(0) += 1;
        }
        Self::from_table(table)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn labels(&self) -> impl Iterator<Item = &L> {
        self.counts.keys()
    }

    fn row(&self, label: &L) -> Result<&BTreeMap<E, u64>> {
        self.counts
            .get(label)
            .ok_or_else(|| Error::UnknownLabel(format!("{label:?}")))
    }

    fn label_total(&self, label: &L) -> Result<u64> {
        Ok(self.row(label)?.values().sum())
    }

    /// Marginal event distribution over the rows of the given labels.
    pub fn marginal(&self, set: &[L]) -> Result<Categorical> {
        let mut merged: BTreeMap<&E, u64> = BTreeMap::new();
        for label in set {
            for (event, c) in self.row(label)? {
                *merged.entry(event).or_insert(0) += c;
            }
        }
        Categorical::from_counts(&merged.into_values().collect::<Vec<_>>())
    }

    /// Marginal over every label.
    pub fn overall(&self) -> Categorical {
        let set: Vec<L> = self.counts.keys().cloned().collect();
        self.marginal(&set).expect("counts are non-empty by construction")
    }
}

pub fn conditional_entropy<L, E>(data: &LabeledCounts<L, E>, label: &L) -> Result<f64>
where
    L: Ord + Clone + std::fmt::Debug,
    E: Ord + Clone,
{
    let row: Vec<u64> = data.row(label)?.values().copied().collect();
    Ok(entropy(&Categorical::from_counts(&row)?))
}

/// Aggregated conditional entropy `h(X | set)`.
pub fn set_conditional_entropy<L, E>(
    data: &LabeledCounts<L, E>,
    set: &[L],
    weighting: Weighting,
) -> Result<f64>
where
    L: Ord + Clone + std::fmt::Debug,
    E: Ord + Clone,
{
    if set.is_empty() {
        return Err(Error::validation("label set is empty"));
    }
    let entropies = set
        .iter()
        .map(|l| conditional_entropy(data, l))
        .collect::<Result<Vec<_>>>()?;
    match weighting {
        Weighting::Uniform => Ok(compensated_sum(entropies.iter().copied()) / set.len() as f64),
        Weighting::Frequency => {
            let totals = set
                .iter()
                .map(|l| data.label_total(l))
                .collect::<Result<Vec<_>>>()?;
            let n: u64 = totals.iter().sum();
            Ok(compensated_sum(
                entropies
                    .iter()
                    .zip(&totals)
                    .map(|(h, &c)| h * c as f64 / n as f64),
            ))
        }
    }
}

/// `H(X) − h(X | set)`, with `H(X)` taken over the rows of the set.
pub fn mutual_information<L, E>(data: &LabeledCounts<L, E>, set: &[L], weighting: Weighting) -> Result<f64>
where
    L: Ord + Clone + std::fmt::Debug,
    E: Ord + Clone,
{
    let conditional = set_conditional_entropy(data, set, weighting)?;
    Ok(entropy(&data.marginal(set)?) - conditional)
}

/// Raw and normalized (multivariate) Jensen–Shannon divergence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JsDivergence {
    /// `H(M) − Σ wᵢ H(Pᵢ)` in nats.
    pub raw: f64,
    /// `raw / H(w)`, or 0 when the weights have zero entropy.
    pub normalized: f64,
}

pub fn js_divergence(components: &[Categorical], weights: &Categorical) -> Result<JsDivergence> {
    let probs: Vec<&[f64]> = components.iter().map(|c| c.probs()).collect();
    js_divergence_of(&probs, weights.probs())
}

/// Unchecked-support variant over raw probability slices.
pub(crate) fn js_divergence_of(components: &[&[f64]], weights: &[f64]) -> Result<JsDivergence> {
    let Some(first) = components.first() else {
        return Err(Error::validation("no components"));
    };
    if weights.len() != components.len() {
        return Err(Error::shape(format!(
            "{} weights for {} components",
            weights.len(),
            components.len()
        )));
    }
    let support = first.len();
    if let Some(c) = components.iter().find(|c| c.len() != support) {
        return Err(Error::shape(format!(
            "component support {} differs from {support}",
            c.len()
        )));
    }
    let mut mixture = vec![CompensatedSum::new(); support];
    let mut within = CompensatedSum::new();
    for (component, &w) in components.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        for (m, &p) in mixture.iter_mut().zip(component.iter()) {
            m.add(w * p);
        }
        within.add(w * entropy_of(component));
    }
    let mixture: Vec<f64> = mixture.iter().map(|m| m.total()).collect();
    Ok(jsd_from_entropies(
        entropy_of(&mixture),
        within.total(),
        entropy_of(weights),
    ))
}

/// JSD from the mixture entropy, the weighted mean component entropy and
/// the weight entropy.
pub(crate) fn jsd_from_entropies(mixture: f64, within: f64, weight_entropy: f64) -> JsDivergence {
    let raw = (mixture - within).clamp(0.0, weight_entropy.max(0.0));
    let normalized = if weight_entropy > 0.0 {
        (raw / weight_entropy).clamp(0.0, 1.0)
    } else {
        0.0
    };
    JsDivergence { raw, normalized }
}

/// Miller–Madow bias correction `h + (m − 1)/(2N)`, capped at `cap`.
pub fn miller_madow(h_mle: f64, nonempty_bins: usize, samples: usize, cap: f64) -> Result<f64> {
    if samples == 0 {
        return Err(Error::validation(
            "Miller-Madow correction needs at least one sample",
        ));
    }
    if nonempty_bins == 0 {
        return Err(Error::validation("Miller-Madow correction needs a non-empty bin"));
    }
    let correction = (nonempty_bins - 1) as f64 / (2.0 * samples as f64);
    Ok((h_mle + correction).min(cap.max(h_mle)))
}

/// Outcome of a correlation between two samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Correlation {
    Rho {
        rho: f64,
        n: usize,
    },
    /// One of the inputs is constant, so the coefficient is undefined.
    NoVariance {
        n: usize,
    },
}

impl Correlation {
    pub fn rho(&self) -> Option<f64> {
        match self {
            Correlation::Rho { rho, .. } => Some(*rho),
            Correlation::NoVariance { .. } => None,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Correlation::Rho { n, .. } | Correlation::NoVariance { n } => *n,
        }
    }
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::shape(format!(
            "correlation inputs have lengths {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(Error::validation(format!(
            "correlation needs at least 3 pairs, got {}",
            x.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::validation("correlation inputs must be finite"));
    }
    Ok(())
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<Correlation> {
    check_pair(x, y)?;
    let n = x.len();
    let mx = compensated_sum(x.iter().copied()) / n as f64;
    let my = compensated_sum(y.iter().copied()) / n as f64;
    let mut sxy = CompensatedSum::new();
    let mut sxx = CompensatedSum::new();
    let mut syy = CompensatedSum::new();
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy.add(dx * dy);
        sxx.add(dx * dx);
        syy.add(dy * dy);
    }
    let denom = (sxx.total() * syy.total()).sqrt();
    if denom == 0.0 || !denom.is_finite() {
        return Ok(Correlation::NoVariance { n });
    }
    Ok(Correlation::Rho {
        rho: (sxy.total() / denom).clamp(-1.0, 1.0),
        n,
    })
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Correlation> {
    check_pair(x, y)?;
    pearson(&average_ranks(x), &average_ranks(y))
}
