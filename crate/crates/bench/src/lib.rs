//! Fixtures shared by the criterion benchmarks.

use infostruct::descriptors::RepresentationSet;
use infostruct::structure::LabelColumn;
use infostruct::synthetic::{planted_clusters, standard_normal};

/// `rows × dim` standard-normal representations.
pub fn gaussian(rows: usize, dim: usize) -> RepresentationSet {
    standard_normal(rows, dim, 17).expect("valid shape")
}

/// Planted clusters with their labels as a label column.
pub fn clustered(clusters: usize, rows: usize, dim: usize) -> (RepresentationSet, LabelColumn) {
    let (y, labels) = planted_clusters(clusters, rows, dim, 1.0, 0.3, 5).expect("valid shape");
    let names: Vec<String> = labels.iter().map(|l| format!("c{l}")).collect();
    (
        y,
        LabelColumn::from_strings("cluster", &names).expect("non-empty labels"),
    )
}
