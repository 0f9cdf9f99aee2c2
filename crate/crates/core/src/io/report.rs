use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::archive::{read_archive, EmbeddingArchive};
use crate::descriptors::Backend;
use crate::error::{Error, Result};
use crate::info::Weighting;
use crate::structure::{analyze, AnalysisConfig, StructureReport};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Headline estimator settings, repeated at the top of a report so two
/// reports can be compared at a glance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub backend: Backend,
    /// Events per descriptor: anchors, bins or clusters.
    pub n: usize,
    pub scale: f64,
    pub subspace: Option<usize>,
    pub seed: u64,
    pub weighting: Weighting,
}

impl From<&AnalysisConfig> for ConfigEcho {
    fn from(c: &AnalysisConfig) -> Self {
        Self {
            backend: c.backend,
            n: c.cells(),
            scale: c.scale,
            subspace: c.subspace,
            seed: c.seed,
            weighting: c.weighting,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchiveRef {
    pub path: String,
    /// SHA-256 of `vectors.f32`.
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    /// One entry per layer, in layer order.
    pub archives: Vec<ArchiveRef>,
    /// Seconds since the Unix epoch, taken from `SOURCE_DATE_EPOCH` when set.
    pub timestamp: Option<u64>,
}

impl Provenance {
    pub fn from_archives<'a>(archives: impl IntoIterator<Item = &'a EmbeddingArchive>) -> Result<Self> {
        Ok(Self {
            archives: archives
                .into_iter()
                .map(|a| ArchiveRef {
                    path: a.path.display().to_string(),
                    sha256: a.digest.clone(),
                })
                .collect(),
            timestamp: source_date_epoch()?,
        })
    }
}

/// `SOURCE_DATE_EPOCH` if set, so reports stay byte-reproducible by default.
pub fn source_date_epoch() -> Result<Option<u64>> {
    match std::env::var("SOURCE_DATE_EPOCH") {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::format("SOURCE_DATE_EPOCH", format!("`{s}` is not an integer"))),
        Err(_) => Ok(None),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub config: ConfigEcho,
    pub report: StructureReport,
    pub provenance: Provenance,
}

impl ReportDocument {
    pub fn new(report: StructureReport, provenance: Provenance) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            config: ConfigEcho::from(&report.config),
            report,
            provenance,
        }
    }

    pub fn to_canonical_json(&self) -> String {
        canonical_json(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::format("report", e.to_string()))?;
        match value.get("schema_version").and_then(Value::as_u64) {
            Some(v) if v == REPORT_SCHEMA_VERSION as u64 => {}
            Some(v) => {
                return Err(Error::format(
                    "schema_version",
                    format!("unsupported report schema {v}, expected {REPORT_SCHEMA_VERSION}"),
                ))
            }
            None => return Err(Error::format("schema_version", "missing")),
        }
        from_value(value)
    }

    /// The numeric value at a dotted path such as
    /// `per_set.token.disentanglement`. Paths are tried against the
    /// structure report first, then the whole document.
    pub fn metric(&self, path: &str) -> Result<f64> {
        let doc = serde_json::to_value(self).expect("report serializes");
        lookup(&doc["report"], path)
            .or_else(|| lookup(&doc, path))
            .ok_or_else(|| Error::format("metric", format!("no numeric value at `{path}`")))
    }
}

/// Reads one archive per layer and analyzes the requested label sets. Every
/// archive must carry the same label table; labels come from the first.
pub fn analyze_archives<P: AsRef<Path>, S: AsRef<str>>(
    paths: &[P],
    label_names: &[S],
    cfg: &AnalysisConfig,
) -> Result<ReportDocument> {
    let archives = paths.iter().map(read_archive).collect::<Result<Vec<_>>>()?;
    analyze_loaded(&archives, label_names, cfg)
}

/// [`analyze_archives`] on archives already in memory.
pub fn analyze_loaded<S: AsRef<str>>(
    archives: &[EmbeddingArchive],
    label_names: &[S],
    cfg: &AnalysisConfig,
) -> Result<ReportDocument> {
    let first = archives
        .first()
        .ok_or_else(|| Error::validation("no archives supplied"))?;
    if label_names.is_empty() {
        return Err(Error::validation("no label sets requested"));
    }
    for a in &archives[1..] {
        if a.labels != first.labels {
            return Err(Error::validation(format!(
                "archive {} has a different label table from {}",
                a.path.display(),
                first.path.display()
            )));
        }
    }
    let layers = archives
        .iter()
        .map(|a| a.representations())
        .collect::<Result<Vec<_>>>()?;
    let sets = first.labels.label_sets(label_names)?;
    let report = analyze(&layers, &sets, cfg)?;
    Ok(ReportDocument::new(report, Provenance::from_archives(archives)?))
}

fn from_value<T: DeserializeOwned>(value: Value) -> Result<T> {
    serde_json::from_value(value).map_err(|e| Error::format("report", e.to_string()))
}

fn lookup(mut v: &Value, path: &str) -> Option<f64> {
    for key in path.split('.') {
        v = match v {
            Value::Object(m) => m.get(key)?,
            Value::Array(a) => a.get(key.parse::<usize>().ok()?)?,
            _ => return None,
        };
    }
    v.as_f64()
}

/// JSON with sorted keys, two-space indentation, integers as integers and
/// every other number written with 17 significant digits. Non-finite floats
/// become `null`.
pub fn canonical_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::format("json", e.to_string()))?;
    let mut out = String::new();
    write_value(&v, 0, &mut out);
    out.push('\n');
    Ok(out)
}

fn write_value(v: &Value, depth: usize, out: &mut String) {
    let pad = |out: &mut String, d: usize| out.extend(std::iter::repeat_n("  ", d));
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_u64() {
                out.push_str(&i.to_string());
            } else if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else {
                out.push_str(&format_f64(n.as_f64().unwrap_or(f64::NAN)));
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                pad(out, depth + 1);
                write_value(item, depth + 1, out);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                pad(out, depth + 1);
                out.push_str(&Value::String((*k).clone()).to_string());
                out.push_str(": ");
                write_value(&map[*k], depth + 1, out);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push('}');
        }
    }
}

/// 17 significant digits in scientific notation, e.g. `6.9314718055994529e-1`.
pub fn format_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_string()
    }
}

/// Long-format rows `(measure, set, value)` for one report: overall
/// measures with an empty set name, then every per-set measure.
pub fn long_format(report: &StructureReport) -> Vec<(String, String, f64)> {
    let mut rows = vec![
        (
            "overall_entropy".to_string(),
            String::new(),
            report.overall_entropy,
        ),
        (
            "overall_efficiency".to_string(),
            String::new(),
            report.overall_efficiency,
        ),
        ("residual".to_string(), String::new(), report.residual),
    ];
    for (set, m) in &report.per_set {
        let measures = [
            ("variation", m.variation),
            ("regularity", m.regularity),
            ("variation_uniform", m.variation_uniform),
            ("variation_frequency", m.variation_frequency),
            ("regularity_uniform", m.regularity_uniform),
            ("regularity_frequency", m.regularity_frequency),
            ("regularity_nats", m.regularity_nats),
            ("disentanglement", m.disentanglement),
            ("disentanglement_one_vs_rest", m.disentanglement_one_vs_rest),
            ("proportion", m.proportion),
        ];
        rows.extend(measures.into_iter().map(|(k, v)| (k.to_string(), set.clone(), v)));
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_form_sorts_and_pins_digits() {
        let v = serde_json::json!({"b": 0.1, "a": [1, -2, 1.0], "c": {"z": null, "y": "⟂\"q"}});
        let text = canonical_json(&v).unwrap();
        let expected = "{\n  \"a\": [\n    1,\n    -2,\n    1.0000000000000000e0\n  ],\n  \"b\": 1.0000000000000001e-1,\n  \"c\": {\n    \"y\": \"⟂\\\"q\",\n    \"z\": null\n  }\n}\n";
        assert_eq!(text, expected);
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(canonical_json(&back).unwrap(), text);
    }

    #[test]
    fn floats_round_trip_exactly() {
        for x in [std::f64::consts::LN_2, 1e-300, -123.456e200, 5e-324, 0.1 + 0.2] {
            let parsed: f64 = serde_json::from_str(&format_f64(x)).unwrap();
            assert_eq!(parsed.to_bits(), x.to_bits());
        }
    }

    #[test]
    fn lookup_walks_objects_and_arrays() {
        let v = serde_json::json!({"per_set": {"token": {"d": 0.5}}, "chains": [{"r": 0.25}]});
        assert_eq!(lookup(&v, "per_set.token.d"), Some(0.5));
        assert_eq!(lookup(&v, "chains.0.r"), Some(0.25));
        assert_eq!(lookup(&v, "per_set.nope"), None);
    }
}
