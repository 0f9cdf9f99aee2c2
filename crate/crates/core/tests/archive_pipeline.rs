use std::path::PathBuf;

use infostruct::io::{
    analyze_archives, analyze_loaded, read_archive, write_archive, ReportDocument, REPORT_SCHEMA_VERSION,
};
use infostruct::structure::AnalysisConfig;
use infostruct::synthetic::PLANTED_CORPUS;
use infostruct::Error;

fn bundled() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/planted3")
}

#[test]
fn bundled_fixture_matches_its_generator() {
    let archive = read_archive(bundled()).unwrap();
    let (vectors, labels) = PLANTED_CORPUS.generate().unwrap();
    assert_eq!(archive.dim(), PLANTED_CORPUS.dim);
    let bits = |v: &[f32]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&archive.vectors), bits(&vectors));
    assert_eq!(archive.labels, labels);
}

#[test]
fn fixture_report_separates_tokens_from_refinements() {
    let labels = ["token", "bigram", "trigram"];
    let doc = analyze_archives(&[bundled()], &labels, &AnalysisConfig::default()).unwrap();
    let set = |n: &str| &doc.report.per_set[n];
    assert!(
        set("token").disentanglement >= 0.9,
        "{}",
        set("token").disentanglement
    );
    assert!(set("token").disentanglement > set("bigram").disentanglement);
    assert_eq!(set("bigram").superset.as_deref(), Some("token"));
    assert_eq!(set("trigram").superset.as_deref(), Some("bigram"));
    let chain = &doc.report.chains[0];
    let total: f64 = chain.proportions.iter().sum::<f64>() + chain.residual;
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn report_round_trips_through_canonical_json() {
    let archive = read_archive(bundled()).unwrap();
    let cfg = AnalysisConfig {
        detail: true,
        ..AnalysisConfig::default()
    };
    let doc = analyze_loaded(std::slice::from_ref(&archive), &["token", "bigram"], &cfg).unwrap();
    assert_eq!(doc.schema_version, REPORT_SCHEMA_VERSION);
    assert_eq!(doc.provenance.archives[0].sha256, archive.digest);
    let text = doc.to_canonical_json();
    let back = ReportDocument::from_json(&text).unwrap();
    assert_eq!(back, doc);
    assert_eq!(back.to_canonical_json(), text);
    assert_eq!(
        doc.metric("per_set.token.disentanglement").unwrap(),
        doc.report.per_set["token"].disentanglement
    );
    assert_eq!(doc.metric("config.n").unwrap(), 50.0);
    assert!(doc.metric("per_set.token.nothing").is_err());

    let wrong = text.replacen("\"schema_version\": 1", "\"schema_version\": 9", 1);
    assert!(
        matches!(ReportDocument::from_json(&wrong), Err(Error::Format { field, .. }) if field == "schema_version")
    );
}

#[test]
fn layers_must_share_labels() {
    let dir = tempfile::tempdir().unwrap();
    let (vectors, mut labels) = PLANTED_CORPUS.generate().unwrap();
    write_archive(&vectors, PLANTED_CORPUS.dim, &labels, dir.path().join("l0")).unwrap();
    write_archive(&vectors, PLANTED_CORPUS.dim, &labels, dir.path().join("l1")).unwrap();
    let two = analyze_archives(
        &[dir.path().join("l0"), dir.path().join("l1")],
        &["token"],
        &AnalysisConfig::default(),
    )
    .unwrap();
    assert_eq!(two.report.layers, 2);
    labels.columns[0].1.swap(0, 1);
    write_archive(&vectors, PLANTED_CORPUS.dim, &labels, dir.path().join("l2")).unwrap();
    let mixed = analyze_archives(
        &[dir.path().join("l0"), dir.path().join("l2")],
        &["token"],
        &AnalysisConfig::default(),
    );
    assert!(mixed.is_err());
}
