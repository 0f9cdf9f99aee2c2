//! Embedding archives, n-gram labels and report documents.

mod archive;
mod ngram;
mod report;

pub use archive::{
    payload_bytes, read_archive, sha256_hex, write_archive, ArchiveMeta, EmbeddingArchive, LabelTable,
    ARCHIVE_SCHEMA, LABELS_FILE, META_FILE, PAYLOAD_FILE,
};
pub use ngram::{check_boundaries, derive_ngram_labels, ngram_name, Direction, SENTINEL, SENTINEL_TEXT};
pub use report::{
    analyze_archives, analyze_loaded, canonical_json, format_f64, long_format, source_date_epoch, ArchiveRef,
    ConfigEcho, Provenance, ReportDocument, REPORT_SCHEMA_VERSION,
};
