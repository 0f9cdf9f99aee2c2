use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::descriptors::{soft_descriptor, SoftConfig};
use crate::info::{entropy, js_divergence, Categorical};
use crate::synthetic::{planted_clusters, standard_normal};

fn full_width() -> AnalysisConfig {
    AnalysisConfig {
        subspace: None,
        ..AnalysisConfig::default()
    }
}

fn ids(name: &str, values: &[usize]) -> LabelColumn {
    let vocab = values.iter().max().map_or(0, |m| m + 1);
    LabelColumn::new(
        name,
        values.iter().map(|&v| v as u32).collect(),
        (0..vocab).map(|i| format!("{name}{i}")).collect(),
    )
    .unwrap()
}

fn random_labels(rows: usize, vocab: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..rows).map(|_| rng.random_range(0..vocab)).collect()
}

fn overall_efficiency(y: &RepresentationSet, cfg: &AnalysisConfig) -> f64 {
    let one = ids("all", &vec![0; y.count()]);
    analyze(std::slice::from_ref(y), &[one], cfg)
        .unwrap()
        .overall_efficiency
}

#[test]
fn repeated_vector_per_label_has_no_variation() {
    // Vectors pointing at anchors; an arbitrary vector can sit between two
    // anchors and spread its softmax mass.
    let cfg = full_width();
    let anchors = sample_anchors(64, cfg.anchors, cfg.seed, cfg.scale).unwrap();
    let rows: Vec<Vec<f64>> = (0..30)
        .map(|i| anchors.point(i % 3).iter().map(|v| 3.0 * v).collect())
        .collect();
    let y = RepresentationSet::from_rows(&rows).unwrap();
    let labels = ids("token", &(0..30).map(|i| i % 3).collect::<Vec<_>>());
    let v = variation(&y, &labels, &full_width()).unwrap();
    assert!(v < 0.05, "{v}");
}

#[test]
fn single_label_matches_overall() {
    let y = standard_normal(500, 8, 1).unwrap();
    let cfg = full_width();
    let one = ids("all", &vec![0; 500]);
    let eff = overall_efficiency(&y, &cfg);
    assert!((variation(&y, &one, &cfg).unwrap() - eff).abs() < 1e-12);
    assert!(regularity(&y, &one, &cfg).unwrap().abs() < 1e-12);
    assert_eq!(disentanglement_multivariate(&y, &one, &cfg).unwrap(), 0.0);
}

#[test]
fn planted_clusters_reduce_variation() {
    let (y, labels) = planted_clusters(3, 900, 32, 10.0, 1.0, 4).unwrap();
    // Three equal labels can lower entropy by at most ln 3, which is only
    // 0.281 of ln 50; ten anchors leave room for a 0.3 gap.
    let cfg = AnalysisConfig {
        anchors: 10,
        ..full_width()
    };
    let labels = ids("token", &labels);
    let v = variation(&y, &labels, &cfg).unwrap();
    let eff = overall_efficiency(&y, &cfg);
    assert!(v <= eff - 0.3, "variation {v} overall {eff}");
}

#[test]
fn random_labels_have_no_regularity() {
    let y = standard_normal(10_000, 16, 2).unwrap();
    let labels = ids("token", &random_labels(10_000, 10, 3));
    for weighting in [Weighting::Uniform, Weighting::Frequency] {
        let cfg = AnalysisConfig {
            weighting,
            ..full_width()
        };
        let r = regularity(&y, &labels, &cfg).unwrap();
        assert!(r.abs() <= 0.02, "{weighting:?} {r}");
    }
    assert!(disentanglement_multivariate(&y, &labels, &full_width()).unwrap() <= 0.05);
}

#[test]
fn one_point_per_label_is_fully_regular() {
    let y = standard_normal(40, 8, 5).unwrap();
    let labels = ids("token", &(0..40).collect::<Vec<_>>());
    let cfg = full_width();
    let r = regularity(&y, &labels, &cfg).unwrap();
    let eff = overall_efficiency(&y, &cfg);
    assert!((r - eff).abs() < 0.05, "{r} vs {eff}");
}

#[test]
fn separated_pair_is_disentangled() {
    let (y, labels) = planted_clusters(2, 400, 16, 10.0, 1.0, 8).unwrap();
    let labels = ids("token", &labels);
    let d = disentanglement_multivariate(&y, &labels, &full_width()).unwrap();
    assert!(d >= 0.95, "{d}");
}

#[test]
fn identical_conditionals_are_entangled() {
    let base = standard_normal(50, 6, 9).unwrap();
    let y = base.concat(&base).unwrap();
    let labels = ids("token", &(0..100).map(|i| i / 50).collect::<Vec<_>>());
    let cfg = full_width();
    assert!(disentanglement_multivariate(&y, &labels, &cfg).unwrap() < 1e-12);
    assert!(disentanglement_one_vs_rest(&y, &labels, &cfg).unwrap() < 1e-12);
}

#[test]
fn disjoint_bins_are_fully_disentangled() {
    let rows: Vec<[f64; 1]> = (0..20)
        .map(|i| {
            [if i < 10 {
                i as f64 * 0.01
            } else {
                10.0 + i as f64 * 0.01
            }]
        })
        .collect();
    let y = RepresentationSet::from_rows(&rows).unwrap();
    let labels = ids("side", &(0..20).map(|i| i / 10).collect::<Vec<_>>());
    let cfg = AnalysisConfig {
        backend: Backend::Binned,
        bins: 10,
        ..AnalysisConfig::default()
    };
    assert!((disentanglement_one_vs_rest(&y, &labels, &cfg).unwrap() - 1.0).abs() < 1e-12);
    assert!((disentanglement_multivariate(&y, &labels, &cfg).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn one_vs_rest_tracks_multivariate_on_clusters() {
    let (y, labels) = planted_clusters(3, 900, 32, 10.0, 1.0, 6).unwrap();
    let labels = ids("token", &labels);
    let cfg = full_width();
    let m = disentanglement_multivariate(&y, &labels, &cfg).unwrap();
    let o = disentanglement_one_vs_rest(&y, &labels, &cfg).unwrap();
    assert!((m - o).abs() <= 0.15, "{m} vs {o}");
}

#[test]
fn multivariate_equals_core_jsd_of_conditionals() {
    let y = standard_normal(300, 8, 10).unwrap();
    let raw = random_labels(300, 4, 11);
    let labels = ids("token", &raw);
    let cfg = full_width();
    let anchors = sample_anchors(8, cfg.anchors, cfg.seed, cfg.scale).unwrap();
    let soft = soft_descriptor(&y, &anchors).unwrap();
    let groups = labels.groups();
    let conds: Vec<Categorical> = groups.iter().map(|g| soft.conditional(g).unwrap()).collect();
    let weights =
        Categorical::from_weights(&groups.iter().map(|g| g.len() as f64).collect::<Vec<_>>()).unwrap();
    let expected = js_divergence(&conds, &weights).unwrap().normalized;
    let got = disentanglement_multivariate(&y, &labels, &cfg).unwrap();
    assert!((expected - got).abs() < 1e-12, "{expected} vs {got}");
    let overall = entropy(&soft.descriptor.dist);
    let report = analyze(std::slice::from_ref(&y), &[labels], &cfg).unwrap();
    assert!((report.overall_entropy - overall).abs() < 1e-12);
}

#[test]
fn proportions_for_determining_and_independent_labels() {
    let y = standard_normal(60, 8, 12).unwrap();
    let cfg = full_width();
    let token = ids("token", &(0..60).collect::<Vec<_>>());
    let p = information_proportions(std::slice::from_ref(&y), &[token], &cfg).unwrap();
    assert!(p.proportions[0] > 0.9 && p.residual < 0.1, "{p:?}");

    let y = standard_normal(10_000, 8, 13).unwrap();
    let token = ids("token", &random_labels(10_000, 5, 14));
    let p = information_proportions(std::slice::from_ref(&y), &[token], &cfg).unwrap();
    assert!(p.proportions[0] < 0.02 && p.residual > 0.98, "{p:?}");
}

#[test]
fn chain_must_follow_links() {
    let y = standard_normal(10, 4, 1).unwrap();
    let token = ids("token", &[0, 1, 0, 1, 0, 1, 0, 1, 0, 1]);
    let bigram = ids("bigram", &[0, 1, 2, 3, 0, 1, 2, 3, 0, 1]);
    let cfg = full_width();
    assert!(
        information_proportions(std::slice::from_ref(&y), &[token.clone(), bigram.clone()], &cfg).is_err()
    );
    let linked = bigram.with_superset("token");
    assert!(
        information_proportions(std::slice::from_ref(&y), &[token.clone(), linked.clone()], &cfg).is_ok()
    );
    let crossing = ids("bigram", &[0, 0, 1, 1, 0, 0, 1, 1, 0, 0]).with_superset("token");
    assert!(information_proportions(std::slice::from_ref(&y), &[token, crossing], &cfg).is_err());
}

fn nested_sets(rows: usize, seed: u64) -> (LabelColumn, LabelColumn, LabelColumn) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let token: Vec<usize> = (0..rows).map(|_| rng.random_range(0..4)).collect();
    let bigram: Vec<usize> = token.iter().map(|t| t * 3 + rng.random_range(0..3)).collect();
    let trigram: Vec<usize> = bigram.iter().map(|b| b * 2 + rng.random_range(0..2)).collect();
    (
        ids("token", &token),
        ids("bigram", &bigram).with_superset("token"),
        ids("trigram", &trigram).with_superset("bigram"),
    )
}

#[test]
fn analyze_planted_fixture() {
    let (y, clusters) = planted_clusters(3, 600, 32, 10.0, 1.0, 21).unwrap();
    let token = ids("token", &clusters);
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let bigram_ids: Vec<usize> = clusters.iter().map(|c| c * 4 + rng.random_range(0..4)).collect();
    let bigram = ids("bigram", &bigram_ids).with_superset("token");
    let cfg = AnalysisConfig {
        detail: true,
        ..AnalysisConfig::default()
    };
    let report = analyze(std::slice::from_ref(&y), &[token, bigram], &cfg).unwrap();
    let t = &report.per_set["token"];
    let b = &report.per_set["bigram"];
    assert!(t.disentanglement >= 0.9, "{t:?}");
    assert!(t.disentanglement > b.disentanglement);
    assert!(b.proportion.abs() < 0.05, "{b:?}");
    assert_eq!(report.factors, 1);
    assert_eq!(report.chains.len(), 1);
    let c = &report.chains[0];
    assert!((c.proportions.iter().sum::<f64>() + c.residual - 1.0).abs() < 1e-9);
    assert_eq!(report.detail.as_ref().unwrap()["token"].len(), 3);
    let again = analyze(
        std::slice::from_ref(&y),
        &[
            ids("token", &clusters),
            ids("bigram", &bigram_ids).with_superset("token"),
        ],
        &cfg,
    )
    .unwrap();
    assert_eq!(report, again);
}

#[test]
fn empty_or_misaligned_labels_name_the_set() {
    let y = standard_normal(10, 4, 1).unwrap();
    let short = ids("bigram", &[0, 1, 2]);
    let err = analyze(std::slice::from_ref(&y), &[short], &full_width()).unwrap_err();
    assert!(err.to_string().contains("bigram"), "{err}");
    assert!(analyze(std::slice::from_ref(&y), &[], &full_width()).is_err());
}

#[test]
fn subspaces_and_layers_average() {
    let a = standard_normal(200, 64, 1).unwrap();
    let b = standard_normal(200, 64, 2).unwrap().with_layer_index(1);
    let token = ids("token", &random_labels(200, 5, 3));
    let cfg = AnalysisConfig {
        subspace: Some(32),
        ..AnalysisConfig::default()
    };
    let r = analyze(&[a, b], std::slice::from_ref(&token), &cfg).unwrap();
    assert_eq!(r.factors, 4);
    assert_eq!(r.layers, 2);
    let odd = standard_normal(200, 40, 1).unwrap();
    assert!(analyze(&[odd], &[token], &cfg).is_err());
}

#[test]
fn soft_measures_ignore_row_rescaling() {
    let (y, clusters) = planted_clusters(3, 300, 8, 5.0, 2.0, 30).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let scaled: Vec<Vec<f64>> = y
        .rows()
        .map(|r| {
            let c: f64 = rng.random_range(0.1..10.0);
            r.iter().map(|v| v * c).collect()
        })
        .collect();
    let z = RepresentationSet::from_rows(&scaled).unwrap();
    let token = ids("token", &clusters);
    let cfg = full_width();
    let a = analyze(std::slice::from_ref(&y), std::slice::from_ref(&token), &cfg).unwrap();
    let b = analyze(std::slice::from_ref(&z), std::slice::from_ref(&token), &cfg).unwrap();
    let (sa, sb) = (&a.per_set["token"], &b.per_set["token"]);
    assert!((sa.disentanglement - sb.disentanglement).abs() < 1e-6);
    assert!((sa.regularity - sb.regularity).abs() < 1e-6);
    assert!((a.overall_entropy - b.overall_entropy).abs() < 1e-6);
}

#[test]
fn binned_and_kmeans_backends_run() {
    let (y, clusters) = planted_clusters(3, 300, 4, 10.0, 1.0, 40).unwrap();
    let token = ids("token", &clusters);
    for backend in [Backend::Binned, Backend::Kmeans] {
        let cfg = AnalysisConfig {
            backend,
            bins: 20,
            clusters: 6,
            ..AnalysisConfig::default()
        };
        let r = analyze(std::slice::from_ref(&y), std::slice::from_ref(&token), &cfg).unwrap();
        // Single dimensions only partly separate randomly oriented clusters.
        let floor = if backend == Backend::Binned { 0.7 } else { 0.9 };
        assert!(r.per_set["token"].disentanglement > floor, "{backend:?} {r:?}");
    }
}

#[test]
fn min_count_drops_rare_labels() {
    let y = standard_normal(12, 4, 3).unwrap();
    let token = ids("token", &[0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 2, 3]);
    let cfg = AnalysisConfig {
        min_count: 2,
        ..full_width()
    };
    let r = analyze(std::slice::from_ref(&y), &[token], &cfg).unwrap();
    assert_eq!(r.per_set["token"].labels_attested, 2);
    assert_eq!(r.per_set["token"].labels_excluded, 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn regularity_grows_along_chains(seed in 0u64..10_000, binned in any::<bool>()) {
        let y = standard_normal(150, 8, seed).unwrap();
        let (token, bigram, trigram) = nested_sets(150, seed + 1);
        let cfg = if binned {
            AnalysisConfig { backend: Backend::Binned, bins: 10, ..AnalysisConfig::default() }
        } else {
            full_width()
        };
        let r = analyze(std::slice::from_ref(&y), &[token, bigram, trigram], &cfg).unwrap();
        let reg: Vec<f64> = ["token", "bigram", "trigram"].iter().map(|s| r.per_set[*s].regularity_nats).collect();
        prop_assert!(reg[1] >= reg[0] - 1e-9 && reg[2] >= reg[1] - 1e-9, "{reg:?}");
        for s in r.per_set.values() {
            prop_assert!(s.proportion >= -1e-9);
            prop_assert!(s.regularity_frequency >= -1e-9);
            for v in [s.variation_uniform, s.variation_frequency, s.regularity_frequency, s.disentanglement, s.disentanglement_one_vs_rest] {
                prop_assert!((-1e-9..=1.0 + 1e-9).contains(&v));
            }
        }
        let c = &r.chains[0];
        prop_assert!((c.proportions.iter().sum::<f64>() + c.residual - 1.0).abs() < 1e-9);
        prop_assert!((r.residual - c.residual).abs() < 1e-12);
    }
}

#[test]
fn soft_config_defaults_match_analysis() {
    let s = SoftConfig::default();
    let a = AnalysisConfig::default();
    assert_eq!((s.anchors, s.scale), (a.anchors, a.scale));
}
