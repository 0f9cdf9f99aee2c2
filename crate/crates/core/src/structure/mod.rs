//! Variation, regularity, disentanglement and information proportions of a
//! vector space with respect to label sets.

mod labels;

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use labels::{chains, validate_label_sets, LabelColumn};

use crate::descriptors::{
    binned_descriptor, check_width, column_sums, kmeans_descriptor, responsibilities, sample_anchors,
    Backend, RepresentationSet, DEFAULT_ANCHORS, DEFAULT_MAX_ITERS, DEFAULT_SCALE, DEFAULT_SUBSPACE_WIDTH,
};
use crate::error::{Error, Result};
use crate::info::{entropy_of, js_divergence_of, jsd_from_entropies, Weighting};
use crate::numeric::CompensatedSum;

/// Recorded in every report next to the residual.
pub const RESIDUAL_NOTE: &str = "residual = (H(Y) - max frequency-weighted regularity in nats) / H(Y), \
following the prose definition (entropy left after subtracting the best-aligned label set); the \
alternative printed form regularity(smallest set) / H(Y) is not used";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub backend: Backend,
    /// Soft backend: anchors per subspace.
    pub anchors: usize,
    pub scale: f64,
    /// Soft backend: column chunk width, `None` for the full width.
    pub subspace: Option<usize>,
    pub seed: u64,
    /// Binned backend: bins per dimension.
    pub bins: usize,
    /// k-means backend: cluster count.
    pub clusters: usize,
    pub max_iters: usize,
    /// Aggregation used for the headline `variation` and `regularity`.
    pub weighting: Weighting,
    /// Labels with fewer rows are left out of the conditionals.
    pub min_count: usize,
    /// Keep a per-label table in the report.
    pub detail: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            backend: Backend::Soft,
            anchors: DEFAULT_ANCHORS,
            scale: DEFAULT_SCALE,
            subspace: Some(DEFAULT_SUBSPACE_WIDTH),
            seed: 0,
            bins: 100,
            clusters: 100,
            max_iters: DEFAULT_MAX_ITERS,
            weighting: Weighting::Uniform,
            min_count: 1,
            detail: false,
        }
    }
}

impl AnalysisConfig {
    /// Number of events in each descriptor, whose log normalizes the measures.
    pub fn cells(&self) -> usize {
        match self.backend {
            Backend::Soft => self.anchors,
            Backend::Binned => self.bins,
            Backend::Kmeans => self.clusters,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetMeasures {
    pub superset: Option<String>,
    pub labels_attested: usize,
    /// Vocabulary entries with no rows or below the minimum count.
    pub labels_excluded: usize,
    /// Per the configured weighting.
    pub variation: f64,
    pub regularity: f64,
    pub weighting: Weighting,
    pub variation_uniform: f64,
    pub variation_frequency: f64,
    pub regularity_uniform: f64,
    pub regularity_frequency: f64,
    /// Frequency-weighted mutual information in nats.
    pub regularity_nats: f64,
    /// Multivariate Jensen–Shannon divergence over label conditionals.
    pub disentanglement: f64,
    pub disentanglement_one_vs_rest: f64,
    /// Share of the overall entropy explained beyond the superset.
    pub proportion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainProportions {
    /// Coarse to fine.
    pub sets: Vec<String>,
    pub proportions: Vec<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelDetail {
    pub label: String,
    pub rows: usize,
    /// Conditional entropy in nats, averaged over factors.
    pub entropy: f64,
    pub disentanglement_one_vs_rest: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub config: AnalysisConfig,
    pub rows: usize,
    pub dim: usize,
    pub layers: usize,
    /// Descriptors averaged over: chunks × layers, dimensions, or layers.
    pub factors: usize,
    pub overall_entropy: f64,
    pub overall_efficiency: f64,
    /// Zero-norm rows left out by the soft backend.
    pub excluded_rows: usize,
    pub per_set: BTreeMap<String, SetMeasures>,
    pub chains: Vec<ChainProportions>,
    /// Entropy share left after the best-aligned label set.
    pub residual: f64,
    pub note: String,
    pub detail: Option<BTreeMap<String, Vec<LabelDetail>>>,
}

/// Per-row distributions over cells for one descriptor.
enum Factor {
    /// `rows × n` responsibilities; inactive rows do not count.
    Dense {
        resp: Vec<f64>,
        n: usize,
        active: Vec<bool>,
    },
    /// One cell index per row.
    Cells { idx: Vec<u32>, n: usize },
}

impl Factor {
    fn n(&self) -> usize {
        match self {
            Factor::Dense { n, .. } | Factor::Cells { n, .. } => *n,
        }
    }

    /// Adds the rows into `acc` and returns how many contributed.
    fn accumulate(&self, rows: &[usize], acc: &mut [f64]) -> usize {
        match self {
            Factor::Dense { resp, n, active } => {
                let mut used = 0;
                for &r in rows {
                    if active[r] {
                        used += 1;
                        for (a, &v) in acc.iter_mut().zip(&resp[r * n..(r + 1) * n]) {
                            *a += v;
                        }
                    }
                }
                used
            }
            Factor::Cells { idx, .. } => {
                for &r in rows {
                    acc[idx[r] as usize] += 1.0;
                }
                rows.len()
            }
        }
    }

    fn totals(&self) -> Vec<f64> {
        match self {
            Factor::Dense { resp, n, .. } => column_sums(resp, *n),
            Factor::Cells { idx, n } => {
                let mut t = vec![0.0; *n];
                for &i in idx {
                    t[i as usize] += 1.0;
                }
                t
            }
        }
    }
}

fn normalized(v: &[f64]) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    v.iter().map(|x| x / total).collect()
}

/// One label set's quantities on one factor, in nats.
#[derive(Default, Clone)]
struct FactorSet {
    h: f64,
    mean_h: f64,
    weighted_h: f64,
    jsd: f64,
    ovr: f64,
    /// `(rows, entropy, one-vs-rest)` per vocabulary entry, `None` if excluded.
    labels: Vec<Option<(usize, f64, f64)>>,
}

fn factor_set(factor: &Factor, groups: &[Vec<usize>], keep: &[bool], global: &[f64]) -> FactorSet {
    let n = factor.n();
    let mut overall = global.to_vec();
    for (g, _) in groups.iter().zip(keep).filter(|(_, &k)| !k) {
        let mut acc = vec![0.0; n];
        factor.accumulate(g, &mut acc);
        overall
            .iter_mut()
            .zip(&acc)
            .for_each(|(o, a)| *o = (*o - a).max(0.0));
    }
    let stats: Vec<Option<(usize, Vec<f64>)>> = groups
        .par_iter()
        .zip(keep)
        .map(|(rows, &k)| {
            if !k {
                return None;
            }
            let mut acc = vec![0.0; n];
            let used = factor.accumulate(rows, &mut acc);
            (used > 0).then_some((used, acc))
        })
        .collect();
    let total: usize = stats.iter().flatten().map(|(m, _)| m).sum();
    if total == 0 {
        return FactorSet {
            labels: vec![None; groups.len()],
            ..Default::default()
        };
    }
    let w_total = total as f64;
    let overall_p = normalized(&overall);
    let h = entropy_of(&overall_p);
    let labels: Vec<Option<(usize, f64, f64)>> = stats
        .par_iter()
        .map(|s| {
            let (mass, acc) = s.as_ref()?;
            let cond = normalized(acc);
            let h_l = entropy_of(&cond);
            let rest_mass = w_total - *mass as f64;
            let ovr = if rest_mass > 0.0 {
                let rest: Vec<f64> = overall.iter().zip(acc).map(|(o, a)| (o - a).max(0.0)).collect();
                let rest = normalized(&rest);
                let p = *mass as f64 / w_total;
                js_divergence_of(&[&cond, &rest], &[p, 1.0 - p])
                    .map(|j| j.normalized)
                    .unwrap_or(0.0)
            } else {
                0.0
            };
            Some((*mass, h_l, ovr))
        })
        .collect();
    let kept: Vec<&(usize, f64, f64)> = labels.iter().flatten().collect();
    let mut weighted = CompensatedSum::new();
    let mut plain = CompensatedSum::new();
    let mut ovr = CompensatedSum::new();
    let weights: Vec<f64> = kept.iter().map(|(m, _, _)| *m as f64 / w_total).collect();
    for ((_, h_l, o), w) in kept.iter().zip(&weights) {
        weighted.add(w * h_l);
        plain.add(*h_l);
        ovr.add(*o);
    }
    let k = kept.len() as f64;
    FactorSet {
        h,
        mean_h: plain.total() / k,
        weighted_h: weighted.total(),
        jsd: jsd_from_entropies(h, weighted.total(), entropy_of(&weights)).normalized,
        ovr: if kept.len() > 1 { ovr.total() / k } else { 0.0 },
        labels,
    }
}

fn check_inputs(layers: &[RepresentationSet], cfg: &AnalysisConfig) -> Result<()> {
    let first = layers
        .first()
        .ok_or_else(|| Error::validation("no representations supplied"))?;
    if let Some(l) = layers
        .iter()
        .find(|l| l.dim() != first.dim() || l.count() != first.count())
    {
        return Err(Error::shape(format!(
            "layers disagree in shape: {}×{} vs {}×{}",
            first.count(),
            first.dim(),
            l.count(),
            l.dim()
        )));
    }
    if cfg.cells() < 2 {
        return Err(Error::validation(format!(
            "{:?} backend needs at least 2 cells, got {}",
            cfg.backend,
            cfg.cells()
        )));
    }
    if cfg.backend == Backend::Soft {
        check_width(first.dim(), cfg.subspace.unwrap_or(first.dim()))?;
    }
    Ok(())
}

/// Feeds each factor to `f` in a fixed order and returns the number of
/// factors and the distinct zero-norm rows.
fn for_each_factor(
    layers: &[RepresentationSet],
    cfg: &AnalysisConfig,
    mut f: impl FnMut(&Factor),
) -> Result<(usize, usize)> {
    let mut count = 0;
    let mut excluded = BTreeSet::new();
    match cfg.backend {
        Backend::Soft => {
            let dim = layers[0].dim();
            let width = cfg.subspace.unwrap_or(dim);
            let anchors = (0..dim / width)
                .map(|c| sample_anchors(width, cfg.anchors, cfg.seed.wrapping_add(c as u64), cfg.scale))
                .collect::<Result<Vec<_>>>()?;
            for layer in layers {
                for (c, a) in anchors.iter().enumerate() {
                    let chunk;
                    let y = if width == dim {
                        layer
                    } else {
                        chunk = layer.columns(c * width, width)?;
                        &chunk
                    };
                    let (resp, zero) = responsibilities(y, a)?;
                    let mut active = vec![true; y.count()];
                    for &r in &zero {
                        active[r] = false;
                        excluded.insert(r);
                    }
                    if zero.len() == y.count() {
                        return Err(Error::validation("every row has zero norm in some subspace"));
                    }
                    f(&Factor::Dense {
                        resp,
                        n: cfg.anchors,
                        active,
                    });
                    count += 1;
                }
            }
        }
        Backend::Binned => {
            for layer in layers {
                let b = binned_descriptor(layer, cfg.bins)?;
                for d in 0..layer.dim() {
                    let idx = b.column_bins(d).map(|x| x as u32).collect();
                    f(&Factor::Cells {
                        idx,
                        n: b.grid.dims[d].2,
                    });
                    count += 1;
                }
            }
        }
        Backend::Kmeans => {
            for layer in layers {
                let k = kmeans_descriptor(layer, cfg.clusters, cfg.seed, cfg.max_iters)?;
                let idx = k.assignments.iter().map(|&a| a as u32).collect();
                f(&Factor::Cells { idx, n: cfg.clusters });
                count += 1;
            }
        }
    }
    Ok((count, excluded.len()))
}

struct Measured {
    factors: usize,
    excluded_rows: usize,
    overall_h: f64,
    /// Per set, factor-averaged quantities.
    sets: Vec<FactorSet>,
    kept: Vec<Vec<bool>>,
}

fn measure(layers: &[RepresentationSet], sets: &[LabelColumn], cfg: &AnalysisConfig) -> Result<Measured> {
    check_inputs(layers, cfg)?;
    validate_label_sets(sets, layers[0].count())?;
    let groups: Vec<Vec<Vec<usize>>> = sets.iter().map(|s| s.groups()).collect();
    let kept: Vec<Vec<bool>> = groups
        .iter()
        .map(|g| {
            g.iter()
                .map(|rows| !rows.is_empty() && rows.len() >= cfg.min_count)
                .collect()
        })
        .collect();
    let mut sums: Vec<FactorSet> = sets
        .iter()
        .map(|s| FactorSet {
            labels: vec![None; s.vocabulary().len()],
            ..Default::default()
        })
        .collect();
    let mut overall = CompensatedSum::new();
    let mut first_error = None;
    let (factors, excluded_rows) = for_each_factor(layers, cfg, |factor| {
        let global = factor.totals();
        overall.add(entropy_of(&normalized(&global)));
        for ((acc, g), k) in sums.iter_mut().zip(&groups).zip(&kept) {
            let fs = factor_set(factor, g, k, &global);
            if fs.labels.iter().all(Option::is_none) && first_error.is_none() {
                first_error = Some(Error::validation("a label set has no usable rows"));
            }
            acc.h += fs.h;
            acc.mean_h += fs.mean_h;
            acc.weighted_h += fs.weighted_h;
            acc.jsd += fs.jsd;
            acc.ovr += fs.ovr;
            for (a, l) in acc.labels.iter_mut().zip(fs.labels) {
                if let Some((m, h, o)) = l {
                    let e = a.get_or_insert((0, 0.0, 0.0));
                    *e = (e.0.max(m), e.1 + h, e.2 + o);
                }
            }
        }
    })?;
    if let Some(e) = first_error {
        return Err(e);
    }
    let f = factors as f64;
    for s in &mut sums {
        s.h /= f;
        s.mean_h /= f;
        s.weighted_h /= f;
        s.jsd /= f;
        s.ovr /= f;
        for l in s.labels.iter_mut().flatten() {
            l.1 /= f;
            l.2 /= f;
        }
    }
    Ok(Measured {
        factors,
        excluded_rows,
        overall_h: overall.total() / f,
        sets: sums,
        kept,
    })
}

fn strip_superset(labels: &LabelColumn) -> LabelColumn {
    LabelColumn::new(
        labels.name(),
        labels.values().to_vec(),
        labels.vocabulary().to_vec(),
    )
    .expect("already validated")
}

fn single(y: &RepresentationSet, labels: &LabelColumn, cfg: &AnalysisConfig) -> Result<(Measured, f64)> {
    let m = measure(std::slice::from_ref(y), &[strip_superset(labels)], cfg)?;
    let norm = (cfg.cells() as f64).ln();
    Ok((m, norm))
}

/// Aggregated conditional entropy given the label, over `ln(cells)`.
pub fn variation(y: &RepresentationSet, labels: &LabelColumn, cfg: &AnalysisConfig) -> Result<f64> {
    let (m, norm) = single(y, labels, cfg)?;
    let s = &m.sets[0];
    Ok(match cfg.weighting {
        Weighting::Uniform => s.mean_h,
        Weighting::Frequency => s.weighted_h,
    } / norm)
}

/// Overall entropy minus aggregated conditional entropy, over `ln(cells)`.
pub fn regularity(y: &RepresentationSet, labels: &LabelColumn, cfg: &AnalysisConfig) -> Result<f64> {
    let (m, norm) = single(y, labels, cfg)?;
    let s = &m.sets[0];
    Ok(match cfg.weighting {
        Weighting::Uniform => s.h - s.mean_h,
        Weighting::Frequency => s.h - s.weighted_h,
    } / norm)
}

pub fn disentanglement_multivariate(
    y: &RepresentationSet,
    labels: &LabelColumn,
    cfg: &AnalysisConfig,
) -> Result<f64> {
    Ok(single(y, labels, cfg)?.0.sets[0].jsd)
}

pub fn disentanglement_one_vs_rest(
    y: &RepresentationSet,
    labels: &LabelColumn,
    cfg: &AnalysisConfig,
) -> Result<f64> {
    Ok(single(y, labels, cfg)?.0.sets[0].ovr)
}

fn proportions_from(h: f64, reg_w: &[f64]) -> (Vec<f64>, f64) {
    if h <= 0.0 {
        return (vec![0.0; reg_w.len()], 1.0);
    }
    let mut prev = 0.0;
    let props = reg_w
        .iter()
        .map(|&r| {
            let p = (r - prev) / h;
            prev = r;
            p
        })
        .collect();
    (props, (h - prev) / h)
}

/// Information proportions along a chain ordered coarse to fine, where each
/// set names the previous one as its superset.
pub fn information_proportions(
    layers: &[RepresentationSet],
    chain: &[LabelColumn],
    cfg: &AnalysisConfig,
) -> Result<ChainProportions> {
    for (i, s) in chain.iter().enumerate() {
        let expected = i.checked_sub(1).map(|j| chain[j].name());
        if s.superset() != expected {
            return Err(Error::validation(format!(
                "label set `{}` must have superset {:?} to follow the chain",
                s.name(),
                expected
            )));
        }
    }
    let m = measure(layers, chain, cfg)?;
    let reg_w: Vec<f64> = m.sets.iter().map(|s| s.h - s.weighted_h).collect();
    let (proportions, residual) = proportions_from(m.overall_h, &reg_w);
    Ok(ChainProportions {
        sets: chain.iter().map(|s| s.name().to_string()).collect(),
        proportions,
        residual,
    })
}

/// All measures for every label set, with one anchor set per subspace shared
/// by all sets and layers.
pub fn analyze(
    layers: &[RepresentationSet],
    sets: &[LabelColumn],
    cfg: &AnalysisConfig,
) -> Result<StructureReport> {
    if sets.is_empty() {
        return Err(Error::validation("no label sets supplied"));
    }
    let m = measure(layers, sets, cfg)?;
    let norm = (cfg.cells() as f64).ln();
    let h = m.overall_h;
    let reg_w: BTreeMap<&str, f64> = sets
        .iter()
        .zip(&m.sets)
        .map(|(c, s)| (c.name(), s.h - s.weighted_h))
        .collect();
    let mut per_set = BTreeMap::new();
    let mut detail = BTreeMap::new();
    for ((col, s), kept) in sets.iter().zip(&m.sets).zip(&m.kept) {
        let below = col.superset().map_or(0.0, |sup| reg_w[sup]);
        let proportion = if h > 0.0 {
            (reg_w[col.name()] - below) / h
        } else {
            0.0
        };
        let attested = kept.iter().filter(|&&k| k).count();
        let (variation, regularity) = match cfg.weighting {
            Weighting::Uniform => (s.mean_h, s.h - s.mean_h),
            Weighting::Frequency => (s.weighted_h, s.h - s.weighted_h),
        };
        per_set.insert(
            col.name().to_string(),
            SetMeasures {
                superset: col.superset().map(str::to_string),
                labels_attested: attested,
                labels_excluded: kept.len() - attested,
                variation: variation / norm,
                regularity: regularity / norm,
                weighting: cfg.weighting,
                variation_uniform: s.mean_h / norm,
                variation_frequency: s.weighted_h / norm,
                regularity_uniform: (s.h - s.mean_h) / norm,
                regularity_frequency: (s.h - s.weighted_h) / norm,
                regularity_nats: s.h - s.weighted_h,
                disentanglement: s.jsd,
                disentanglement_one_vs_rest: s.ovr,
                proportion,
            },
        );
        if cfg.detail {
            let rows = col
                .vocabulary()
                .iter()
                .zip(&s.labels)
                .filter_map(|(name, l)| {
                    l.map(|(rows, entropy, ovr)| LabelDetail {
                        label: name.clone(),
                        rows,
                        entropy,
                        disentanglement_one_vs_rest: ovr,
                    })
                })
                .collect();
            detail.insert(col.name().to_string(), rows);
        }
    }
    let chain_reports = chains(sets)
        .into_iter()
        .map(|names| {
            let r: Vec<f64> = names.iter().map(|n| reg_w[n.as_str()]).collect();
            let (proportions, residual) = proportions_from(h, &r);
            ChainProportions {
                sets: names,
                proportions,
                residual,
            }
        })
        .collect();
    let best = reg_w.values().copied().fold(f64::NEG_INFINITY, f64::max);
    let residual = if h > 0.0 { (h - best) / h } else { 1.0 };
    Ok(StructureReport {
        config: *cfg,
        rows: layers[0].count(),
        dim: layers[0].dim(),
        layers: layers.len(),
        factors: m.factors,
        overall_entropy: h,
        overall_efficiency: (h / norm).clamp(0.0, 1.0),
        excluded_rows: m.excluded_rows,
        per_set,
        chains: chain_reports,
        residual,
        note: RESIDUAL_NOTE.to_string(),
        detail: cfg.detail.then_some(detail),
    })
}

#[cfg(test)]
mod tests;
