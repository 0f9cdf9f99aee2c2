use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ngram::{derive_ngram_labels, ngram_name, Direction};
use crate::descriptors::RepresentationSet;
use crate::error::{Error, Result};
use crate::structure::LabelColumn;

pub const ARCHIVE_SCHEMA: u32 = 1;
pub const META_FILE: &str = "meta.json";
pub const PAYLOAD_FILE: &str = "vectors.f32";
pub const LABELS_FILE: &str = "labels.tsv";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchiveMeta {
    pub count: u64,
    pub dim: u32,
    pub dtype: String,
    pub layout: String,
    pub endianness: String,
    pub schema: u32,
}

impl ArchiveMeta {
    pub fn new(count: usize, dim: usize) -> Self {
        Self {
            count: count as u64,
            dim: dim as u32,
            dtype: "f32".into(),
            layout: "row-major".into(),
            endianness: "little".into(),
            schema: ARCHIVE_SCHEMA,
        }
    }

    fn check(&self) -> Result<()> {
        if self.schema != ARCHIVE_SCHEMA {
            return Err(Error::format(
                "schema",
                format!(
                    "unknown archive schema version {}, expected {ARCHIVE_SCHEMA}",
                    self.schema
                ),
            ));
        }
        let expect = [
            ("dtype", &self.dtype, "f32"),
            ("layout", &self.layout, "row-major"),
            ("endianness", &self.endianness, "little"),
        ];
        for (field, got, want) in expect {
            if got != want {
                return Err(Error::format(
                    field,
                    format!("unsupported value `{got}`, expected `{want}`"),
                ));
            }
        }
        if self.count == 0 || self.dim == 0 {
            return Err(Error::format(
                "count",
                "archive must hold at least one non-empty vector",
            ));
        }
        Ok(())
    }
}

/// Per-vector label rows: sentence id, position within the sentence, and
/// named string columns.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelTable {
    pub sentence_id: Vec<u64>,
    pub position: Vec<u64>,
    pub columns: Vec<(String, Vec<String>)>,
}

impl LabelTable {
    pub fn len(&self) -> usize {
        self.sentence_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentence_id.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<&[String]> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|(n, _)| n.as_str())
    }

    fn check(&self) -> Result<()> {
        if self.position.len() != self.len() {
            return Err(Error::shape("sentence_id and position columns differ in length"));
        }
        for (name, values) in &self.columns {
            if name == "sentence_id" || name == "position" || name.is_empty() {
                return Err(Error::validation(format!(
                    "label column name `{name}` is reserved or empty"
                )));
            }
            if values.len() != self.len() {
                return Err(Error::shape(format!(
                    "label column `{name}` has {} rows, expected {}",
                    values.len(),
                    self.len()
                )));
            }
        }
        Ok(())
    }

    /// Label columns for `names`, in that order.
    ///
    /// Names present in the table are used as they are. `bigram`, `trigram`
    /// (and their `_backward` forms) are otherwise derived from the `token`
    /// column. Each n-gram set is linked to the nearest coarser n-gram set
    /// of the same direction that is also requested.
    pub fn label_sets<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<LabelColumn>> {
        let names: Vec<&str> = names.iter().map(|n| n.as_ref()).collect();
        let mut out = Vec::with_capacity(names.len());
        for &name in &names {
            let ngram = ngram_of(name);
            let mut col = match (self.column(name), ngram) {
                (Some(values), _) => LabelColumn::from_strings(name, values)?,
                (None, Some((order, dir))) => {
                    let tokens = self.column("token").ok_or_else(|| {
                        Error::UnknownLabel(format!("{name} (derived n-grams need a `token` column)"))
                    })?;
                    derive_ngram_labels(tokens, &self.sentence_id, &self.position, order, dir)?
                }
                (None, None) => return Err(Error::UnknownLabel(name.to_string())),
            };
            if let Some((order, dir)) = ngram {
                let coarser = (1..order)
                    .rev()
                    .map(|o| ngram_name(o, dir))
                    .find(|n| names.contains(&n.as_str()));
                if let Some(sup) = coarser {
                    col = col.with_superset(sup);
                }
            }
            out.push(col);
        }
        Ok(out)
    }
}

fn ngram_of(name: &str) -> Option<(usize, Direction)> {
    [1, 2, 3]
        .into_iter()
        .flat_map(|o| [(o, Direction::Forward), (o, Direction::Backward)])
        .find(|&(o, d)| ngram_name(o, d) == name)
}

/// An archive as read from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingArchive {
    pub path: PathBuf,
    pub meta: ArchiveMeta,
    pub vectors: Vec<f32>,
    pub labels: LabelTable,
    /// SHA-256 of the payload bytes, lowercase hex.
    pub digest: String,
}

impl EmbeddingArchive {
    pub fn count(&self) -> usize {
        self.meta.count as usize
    }

    pub fn dim(&self) -> usize {
        self.meta.dim as usize
    }

    /// The vectors widened to f64.
    pub fn representations(&self) -> Result<RepresentationSet> {
        RepresentationSet::new(
            self.vectors.iter().map(|&x| x as f64).collect(),
            self.count(),
            self.dim(),
        )
    }
}

pub fn payload_bytes(vectors: &[f32]) -> Vec<u8> {
    vectors.iter().flat_map(|x| x.to_le_bytes()).collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn write_archive(vectors: &[f32], dim: usize, labels: &LabelTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if dim == 0 || vectors.is_empty() || !vectors.len().is_multiple_of(dim) {
        return Err(Error::shape(format!(
            "{} values do not form rows of width {dim}",
            vectors.len()
        )));
    }
    let count = vectors.len() / dim;
    if let Some(i) = vectors.iter().position(|x| !x.is_finite()) {
        return Err(Error::validation(format!(
            "vector {} has a non-finite value at column {}",
            i / dim,
            i % dim
        )));
    }
    labels.check()?;
    if labels.len() != count {
        return Err(Error::shape(format!(
            "{count} vectors but {} label rows",
            labels.len()
        )));
    }
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))?;

    let meta = serde_json::to_string_pretty(&ArchiveMeta::new(count, dim)).expect("meta serializes");
    write(&path.join(META_FILE), format!("{meta}\n").as_bytes())?;
    write(&path.join(PAYLOAD_FILE), &payload_bytes(vectors))?;

    let mut w = csv::WriterBuilder::new().delimiter(b'\t').from_writer(Vec::new());
    let mut header = vec!["sentence_id".to_string(), "position".to_string()];
    header.extend(labels.names().map(str::to_string));
    w.write_record(&header).map_err(|e| csv_error(e, LABELS_FILE))?;
    for row in 0..count {
        let mut rec = vec![
            labels.sentence_id[row].to_string(),
            labels.position[row].to_string(),
        ];
        rec.extend(labels.columns.iter().map(|(_, v)| v[row].clone()));
        w.write_record(&rec).map_err(|e| csv_error(e, LABELS_FILE))?;
    }
    let table = w
        .into_inner()
        .map_err(|e| Error::format(LABELS_FILE, e.to_string()))?;
    write(&path.join(LABELS_FILE), &table)
}

pub fn read_archive(path: impl AsRef<Path>) -> Result<EmbeddingArchive> {
    let path = path.as_ref();
    let meta_path = path.join(META_FILE);
    let meta_text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: ArchiveMeta =
        serde_json::from_str(&meta_text).map_err(|e| Error::format(META_FILE, e.to_string()))?;
    meta.check()?;
    let count = meta.count as usize;
    let dim = meta.dim as usize;

    let payload_path = path.join(PAYLOAD_FILE);
    let bytes = fs::read(&payload_path).map_err(|e| Error::io(&payload_path, e))?;
    let expected = count * dim * 4;
    if bytes.len() != expected {
        return Err(Error::format(
            PAYLOAD_FILE,
            format!(
                "payload length mismatch: {count}×{dim} f32 needs {expected} bytes, found {}",
                bytes.len()
            ),
        ));
    }
    let vectors: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    if let Some(i) = vectors.iter().position(|x| !x.is_finite()) {
        return Err(Error::format(
            PAYLOAD_FILE,
            format!("non-finite value in row {} column {}", i / dim, i % dim),
        ));
    }

    let labels_path = path.join(LABELS_FILE);
    let file = fs::File::open(&labels_path).map_err(|e| Error::io(&labels_path, e))?;
    let labels = read_labels(file, count)?;
    Ok(EmbeddingArchive {
        path: path.to_path_buf(),
        meta,
        vectors,
        labels,
        digest: sha256_hex(&bytes),
    })
}

fn read_labels<R: std::io::Read>(reader: R, count: usize) -> Result<LabelTable> {
    let mut r = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header = r.headers().map_err(|e| csv_error(e, LABELS_FILE))?.clone();
    if header.get(0) != Some("sentence_id") || header.get(1) != Some("position") {
        return Err(Error::format(
            "labels.tsv header",
            "first two columns must be `sentence_id` and `position`",
        ));
    }
    let names: Vec<String> = header.iter().skip(2).map(str::to_string).collect();
    let mut table = LabelTable {
        sentence_id: Vec::with_capacity(count),
        position: Vec::with_capacity(count),
        columns: names
            .iter()
            .map(|n| (n.clone(), Vec::with_capacity(count)))
            .collect(),
    };
    for (row, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(e, LABELS_FILE))?;
        if row >= count {
            return Err(Error::format(
                "labels.tsv",
                format!("alignment error: row {row} has no matching vector (archive holds {count})"),
            ));
        }
        if rec.len() != header.len() {
            return Err(Error::format(
                "labels.tsv",
                format!("row {row} has {} fields, header has {}", rec.len(), header.len()),
            ));
        }
        let int = |i: usize, field: &str| {
            rec[i].parse::<u64>().map_err(|_| {
                Error::format(
                    field,
                    format!("row {row}: `{}` is not a non-negative integer", &rec[i]),
                )
            })
        };
        table.sentence_id.push(int(0, "sentence_id")?);
        table.position.push(int(1, "position")?);
        for (j, (_, col)) in table.columns.iter_mut().enumerate() {
            col.push(rec[j + 2].to_string());
        }
    }
    if table.len() != count {
        return Err(Error::format(
            "labels.tsv",
            format!(
                "alignment error: vector row {} has no label row (table has {} rows for {count} vectors)",
                table.len(),
                table.len()
            ),
        ));
    }
    Ok(table)
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn csv_error(e: csv::Error, field: &str) -> Error {
    Error::format(field, e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> (Vec<f32>, LabelTable) {
        let vectors = vec![
            0.0,
            1.5,
            -2.25,
            f32::MIN_POSITIVE,
            1e-38,
            -0.0,
            3.4e38,
            0.1,
            7.0,
            8.0,
            9.0,
            -1.0,
        ];
        let labels = LabelTable {
            sentence_id: vec![0, 0, 1],
            position: vec![0, 1, 0],
            columns: vec![("token".into(), vec!["a".into(), "b c".into(), "⟂x".into()])],
        };
        (vectors, labels)
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let (v, l) = fixture();
        write_archive(&v, 4, &l, dir.path()).unwrap();
        let a = read_archive(dir.path()).unwrap();
        assert_eq!(a.count(), 3);
        assert_eq!(a.dim(), 4);
        let bits = |x: &[f32]| x.iter().map(|f| f.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.vectors), bits(&v));
        assert_eq!(a.labels, l);
        assert_eq!(
            a.digest,
            sha256_hex(&fs::read(dir.path().join(PAYLOAD_FILE)).unwrap())
        );
    }

    #[test]
    fn truncated_payload_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let (v, l) = fixture();
        write_archive(&v, 4, &l, dir.path()).unwrap();
        let p = dir.path().join(PAYLOAD_FILE);
        let mut bytes = fs::read(&p).unwrap();
        bytes.pop();
        fs::write(&p, bytes).unwrap();
        let err = read_archive(dir.path()).unwrap_err().to_string();
        assert!(err.contains("payload length mismatch"), "{err}");
    }

    #[test]
    fn missing_label_row_reports_index() {
        let dir = tempfile::tempdir().unwrap();
        let (v, l) = fixture();
        write_archive(&v, 4, &l, dir.path()).unwrap();
        let p = dir.path().join(LABELS_FILE);
        let text = fs::read_to_string(&p).unwrap();
        let kept: Vec<&str> = text.lines().take(3).collect();
        fs::write(&p, kept.join("\n") + "\n").unwrap();
        let err = read_archive(dir.path()).unwrap_err().to_string();
        assert!(err.contains("alignment") && err.contains("row 2"), "{err}");
    }

    #[test]
    fn unknown_schema_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let (v, l) = fixture();
        write_archive(&v, 4, &l, dir.path()).unwrap();
        let p = dir.path().join(META_FILE);
        let text = fs::read_to_string(&p)
            .unwrap()
            .replace("\"schema\": 1", "\"schema\": 2");
        fs::write(&p, text).unwrap();
        let err = read_archive(dir.path()).unwrap_err();
        assert!(
            matches!(&err, Error::Format { field, .. } if field == "schema"),
            "{err}"
        );
    }

    #[test]
    fn writer_validates() {
        let dir = tempfile::tempdir().unwrap();
        let (mut v, l) = fixture();
        assert!(write_archive(&v[..8], 4, &l, dir.path()).is_err());
        v[3] = f32::NAN;
        assert!(write_archive(&v, 4, &l, dir.path()).is_err());
        let missing = read_archive(dir.path().join("nope")).unwrap_err();
        assert!(missing.is_io());
    }

    #[test]
    fn label_sets_derive_and_link() {
        let table = LabelTable {
            sentence_id: vec![0, 0, 0, 1, 1],
            position: vec![0, 1, 2, 0, 1],
            columns: vec![(
                "token".into(),
                ["a", "b", "c", "a", "b"].map(String::from).to_vec(),
            )],
        };
        let sets = table.label_sets(&["token", "bigram", "trigram"]).unwrap();
        assert_eq!(sets[1].superset(), Some("token"));
        assert_eq!(sets[2].superset(), Some("bigram"));
        let skip = table.label_sets(&["token", "trigram"]).unwrap();
        assert_eq!(skip[1].superset(), Some("token"));
        assert!(matches!(table.label_sets(&["pos"]), Err(Error::UnknownLabel(_))));
    }
}
