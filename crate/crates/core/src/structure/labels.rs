use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One label per row, drawn from a vocabulary, optionally nested in a
/// coarser set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelColumn {
    name: String,
    values: Vec<u32>,
    vocabulary: Vec<String>,
    superset: Option<String>,
}

impl LabelColumn {
    pub fn new(name: impl Into<String>, values: Vec<u32>, vocabulary: Vec<String>) -> Result<Self> {
        let name = name.into();
        if values.is_empty() {
            return Err(Error::validation(format!("label set `{name}` is empty")));
        }
        if let Some(i) = values.iter().position(|&v| v as usize >= vocabulary.len()) {
            return Err(Error::validation(format!(
                "label set `{name}` row {i} uses id {} outside a vocabulary of {}",
                values[i],
                vocabulary.len()
            )));
        }
        Ok(Self {
            name,
            values,
            vocabulary,
            superset: None,
        })
    }

    /// Builds the vocabulary from the distinct strings, in sorted order.
    pub fn from_strings<S: AsRef<str>>(name: impl Into<String>, labels: &[S]) -> Result<Self> {
        let mut ids: BTreeMap<&str, u32> = labels.iter().map(|l| (l.as_ref(), 0)).collect();
        for (i, id) in ids.values_mut().enumerate() {
            *id = i as u32;
        }
        let values = labels.iter().map(|l| ids[l.as_ref()]).collect();
        let vocabulary = ids.keys().map(|s| s.to_string()).collect();
        Self::new(name, values, vocabulary)
    }

    pub fn with_superset(mut self, superset: impl Into<String>) -> Self {
        self.superset = Some(superset.into());
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn superset(&self) -> Option<&str> {
        self.superset.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Row indices grouped by label id, rows in ascending order.
    pub(crate) fn groups(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.vocabulary.len()];
        for (row, &v) in self.values.iter().enumerate() {
            groups[v as usize].push(row);
        }
        groups
    }

    /// Checks that each label of `self` sits inside exactly one label of
    /// `coarse`.
    pub fn check_nested_in(&self, coarse: &LabelColumn) -> Result<()> {
        if coarse.len() != self.len() {
            return Err(Error::validation(format!(
                "label sets `{}` and `{}` have different row counts",
                self.name, coarse.name
            )));
        }
        let mut parent: HashMap<u32, u32> = HashMap::new();
        for (row, (&f, &c)) in self.values.iter().zip(&coarse.values).enumerate() {
            match parent.insert(f, c) {
                Some(prev) if prev != c => {
                    return Err(Error::validation(format!(
                        "label `{}` of set `{}` falls under both `{}` and `{}` of `{}` (row {row})",
                        self.vocabulary[f as usize],
                        self.name,
                        coarse.vocabulary[prev as usize],
                        coarse.vocabulary[c as usize],
                        coarse.name
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Validates a collection of label sets: unique names, equal row counts,
/// existing and acyclic superset links, and nesting along every link.
pub fn validate_label_sets(sets: &[LabelColumn], rows: usize) -> Result<()> {
    let mut by_name: HashMap<&str, &LabelColumn> = HashMap::new();
    for s in sets {
        if s.is_empty() {
            return Err(Error::validation(format!("label set `{}` is empty", s.name)));
        }
        if s.len() != rows {
            return Err(Error::validation(format!(
                "label set `{}` has {} rows but there are {rows} representations",
                s.name,
                s.len()
            )));
        }
        if by_name.insert(&s.name, s).is_some() {
            return Err(Error::validation(format!("label set `{}` appears twice", s.name)));
        }
    }
    for s in sets {
        let mut seen = vec![s.name.as_str()];
        let mut cur = s;
        while let Some(sup) = cur.superset() {
            let parent = by_name.get(sup).ok_or_else(|| {
                Error::UnknownLabel(format!("superset `{sup}` of label set `{}`", cur.name))
            })?;
            if seen.contains(&sup) {
                return Err(Error::validation(format!(
                    "superset links form a cycle through `{sup}`"
                )));
            }
            seen.push(sup);
            cur = parent;
        }
        if let Some(sup) = s.superset() {
            s.check_nested_in(by_name[sup])?;
        }
    }
    Ok(())
}

/// Superset chains from a root set down to each set that is nobody's
/// superset, in input order.
pub fn chains(sets: &[LabelColumn]) -> Vec<Vec<String>> {
    let by_name: HashMap<&str, &LabelColumn> = sets.iter().map(|s| (s.name(), s)).collect();
    sets.iter()
        .filter(|s| !sets.iter().any(|o| o.superset() == Some(s.name())))
        .map(|leaf| {
            let mut chain = vec![leaf.name.clone()];
            let mut cur = leaf;
            while let Some(sup) = cur.superset() {
                chain.push(sup.to_string());
                cur = by_name[sup];
            }
            chain.reverse();
            chain
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(name: &str, labels: &[&str]) -> LabelColumn {
        LabelColumn::from_strings(name, labels).unwrap()
    }

    #[test]
    fn vocabulary_and_groups() {
        let c = col("token", &["b", "a", "b"]);
        assert_eq!(c.vocabulary(), &["a", "b"]);
        assert_eq!(c.values(), &[1, 0, 1]);
        assert_eq!(c.groups(), vec![vec![1], vec![0, 2]]);
        assert!(LabelColumn::new("x", vec![], vec![]).is_err());
        assert!(LabelColumn::new("x", vec![2], vec!["a".into()]).is_err());
    }

    #[test]
    fn nesting_and_links() {
        let token = col("token", &["a", "a", "b", "b"]);
        let bigram = col("bigram", &["ab", "ac", "ba", "ba"]).with_superset("token");
        assert!(validate_label_sets(&[token.clone(), bigram.clone()], 4).is_ok());
        assert_eq!(
            chains(&[token.clone(), bigram.clone()]),
            vec![vec!["token", "bigram"]]
        );

        let crossing = col("bigram", &["ab", "ab", "ba", "ba"]);
        let flat = col("token", &["a", "b", "b", "b"]);
        let err = validate_label_sets(&[flat, crossing.with_superset("token")], 4).unwrap_err();
        assert!(err.to_string().contains("falls under both"), "{err}");

        let missing = bigram.clone().with_superset("nope");
        assert!(matches!(
            validate_label_sets(&[token.clone(), missing], 4),
            Err(Error::UnknownLabel(_))
        ));

        let cyc_a = col("a", &["x", "y", "x", "y"]).with_superset("b");
        let cyc_b = col("b", &["x", "y", "x", "y"]).with_superset("a");
        assert!(validate_label_sets(&[cyc_a, cyc_b], 4).is_err());
        assert!(validate_label_sets(&[token], 5).is_err());
    }
}
