//! Turning sets of vectors into categorical descriptors.

mod anchors;
mod binned;
mod differential;
mod kmeans;
mod representation;
mod soft;

use serde::{Deserialize, Serialize};

pub use anchors::{sample_anchors, AnchorSet, DEFAULT_ANCHORS, DEFAULT_SCALE};
pub use binned::{binned_descriptor, BinGrid, BinnedDescriptor};
pub use differential::{
    equal_log_widths, to_differential, to_differential_log, voronoi_log_widths, BoundingBox, Geometry,
    VoronoiWidths, DEFAULT_PROBES,
};
pub use kmeans::{kmeans_descriptor, KmeansDescriptor, DEFAULT_MAX_ITERS};
pub use representation::RepresentationSet;
pub use soft::{
    descriptor_entropy, layer_entropy, soft_descriptor, soft_entropy, subspace_descriptors, subspace_entropy,
    ChunkSeeds, SoftConfig, SoftDescriptor, DEFAULT_SUBSPACE_WIDTH,
};

pub(crate) use soft::{check_width, column_sums, responsibilities};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Soft,
    Binned,
    Kmeans,
}

impl std::str::FromStr for Backend {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "soft" => Ok(Self::Soft),
            "binned" => Ok(Self::Binned),
            "kmeans" => Ok(Self::Kmeans),
            other => Err(crate::Error::validation(format!(
                "unknown backend `{other}` (expected soft, binned or kmeans)"
            ))),
        }
    }
}

/// Estimator settings that produced a descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescriptorParams {
    /// Anchors, bins or clusters.
    pub cells: usize,
    pub scale: Option<f64>,
    pub seed: Option<u64>,
    pub subspace_width: Option<usize>,
}

/// A categorical summary of a vector set, tagged with how it was made.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Descriptor {
    pub dist: crate::Categorical,
    pub backend: Backend,
    pub params: DescriptorParams,
    /// Rows that contributed.
    pub samples: usize,
    /// Events counted as observed for Miller–Madow.
    pub nonempty: usize,
}
