use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::structure::LabelColumn;

/// Token id standing for "past the sentence boundary".
pub const SENTINEL: i64 = -1;
/// How the sentinel is written in vocabularies.
pub const SENTINEL_TEXT: &str = "⟂";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// The token and the ones after it.
    #[default]
    Forward,
    /// The ones before the token, then the token.
    Backward,
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forward" => Ok(Direction::Forward),
            "backward" => Ok(Direction::Backward),
            other => Err(Error::validation(format!("unknown n-gram direction `{other}`"))),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        })
    }
}

/// `token`, `bigram`, `trigram`, with a `_backward` suffix for backward
/// n-grams of order 2 and 3.
pub fn ngram_name(order: usize, direction: Direction) -> String {
    let base = match order {
        1 => return "token".to_string(),
        2 => "bigram",
        3 => "trigram",
        _ => "ngram",
    };
    match direction {
        Direction::Forward => base.to_string(),
        Direction::Backward => format!("{base}_backward"),
    }
}

/// Checks that every sentence occupies one contiguous run of rows with
/// positions 0, 1, 2, ...
pub fn check_boundaries(sentence_id: &[u64], position: &[u64]) -> Result<()> {
    if sentence_id.len() != position.len() {
        return Err(Error::shape("sentence_id and position columns differ in length"));
    }
    let mut finished = HashSet::new();
    for i in 0..sentence_id.len() {
        let continues = i > 0 && sentence_id[i] == sentence_id[i - 1];
        let expected = if continues { position[i - 1] + 1 } else { 0 };
        if position[i] != expected {
            return Err(Error::validation(format!(
                "missing sentence boundary at row {i}: sentence {} has position {}, expected {expected}",
                sentence_id[i], position[i]
            )));
        }
        if !continues {
            if i > 0 {
                finished.insert(sentence_id[i - 1]);
            }
            if finished.contains(&sentence_id[i]) {
                return Err(Error::validation(format!(
                    "missing sentence boundary at row {i}: sentence {} resumes after another sentence",
                    sentence_id[i]
                )));
            }
        }
    }
    Ok(())
}

/// Labels each row with the n-gram starting (forward) or ending (backward)
/// at its token. Positions past either end of the sentence read as the
/// sentinel. The column is named by [`ngram_name`]; superset links are left
/// to the caller.
pub fn derive_ngram_labels<S: AsRef<str>>(
    tokens: &[S],
    sentence_id: &[u64],
    position: &[u64],
    order: usize,
    direction: Direction,
) -> Result<LabelColumn> {
    if !(1..=3).contains(&order) {
        return Err(Error::validation(format!(
            "n-gram order must be 1, 2 or 3, got {order}"
        )));
    }
    if tokens.len() != sentence_id.len() {
        return Err(Error::shape(format!(
            "{} tokens but {} sentence ids",
            tokens.len(),
            sentence_id.len()
        )));
    }
    check_boundaries(sentence_id, position)?;

    let mut token_ids: BTreeMap<&str, i64> = tokens.iter().map(|t| (t.as_ref(), 0)).collect();
    for (i, id) in token_ids.values_mut().enumerate() {
        *id = i as i64;
    }
    let texts: Vec<&str> = token_ids.keys().copied().collect();
    let ids: Vec<i64> = tokens.iter().map(|t| token_ids[t.as_ref()]).collect();

    let n = ids.len();
    let at = |row: usize, offset: isize| -> i64 {
        let j = row as isize + offset;
        if j < 0 || j as usize >= n || sentence_id[j as usize] != sentence_id[row] {
            SENTINEL
        } else {
            ids[j as usize]
        }
    };
    let keys: Vec<Vec<i64>> = (0..n)
        .map(|row| {
            let offsets: Vec<isize> = match direction {
                Direction::Forward => (0..order as isize).collect(),
                Direction::Backward => (1 - order as isize..=0).collect(),
            };
            offsets.into_iter().map(|o| at(row, o)).collect()
        })
        .collect();

    let mut label_ids: BTreeMap<&[i64], u32> = keys.iter().map(|k| (k.as_slice(), 0)).collect();
    for (i, id) in label_ids.values_mut().enumerate() {
        *id = i as u32;
    }
    let render = |key: &[i64]| {
        key.iter()
            .map(|&t| {
                if t == SENTINEL {
                    SENTINEL_TEXT
                } else {
                    texts[t as usize]
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    };
    let vocabulary = label_ids.keys().map(|k| render(k)).collect();
    let values = keys.iter().map(|k| label_ids[k.as_slice()]).collect();
    LabelColumn::new(ngram_name(order, direction), values, vocabulary)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn labels_of(c: &LabelColumn) -> Vec<&str> {
        c.values()
            .iter()
            .map(|&v| c.vocabulary()[v as usize].as_str())
            .collect()
    }

    #[test]
    fn forward_bigrams_of_a_sentence() {
        let c = derive_ngram_labels(&["a", "b", "c"], &[0, 0, 0], &[0, 1, 2], 2, Direction::Forward).unwrap();
        assert_eq!(c.name(), "bigram");
        assert_eq!(labels_of(&c), ["a b", "b c", "c ⟂"]);
        let back =
            derive_ngram_labels(&["a", "b", "c"], &[0, 0, 0], &[0, 1, 2], 2, Direction::Backward).unwrap();
        assert_eq!(labels_of(&back), ["⟂ a", "a b", "b c"]);
        let tri = derive_ngram_labels(
            &["a", "b", "c", "d"],
            &[0, 0, 0, 1],
            &[0, 1, 2, 0],
            3,
            Direction::Forward,
        )
        .unwrap();
        assert_eq!(labels_of(&tri), ["a b c", "b c ⟂", "c ⟂ ⟂", "d ⟂ ⟂"]);
    }

    #[test]
    fn unigrams_are_the_distinct_tokens() {
        let c = derive_ngram_labels(
            &["x", "y", "x", "z"],
            &[0, 0, 1, 1],
            &[0, 1, 0, 1],
            1,
            Direction::Forward,
        )
        .unwrap();
        assert_eq!(c.name(), "token");
        assert_eq!(c.vocabulary(), &["x", "y", "z"]);
    }

    #[test]
    fn boundaries_are_required() {
        let restart = derive_ngram_labels(&["a", "b"], &[0, 0], &[0, 0], 2, Direction::Forward).unwrap_err();
        assert!(restart.to_string().contains("row 1"), "{restart}");
        let resumed = check_boundaries(&[0, 1, 0], &[0, 0, 0]).unwrap_err();
        assert!(resumed.to_string().contains("resumes"), "{resumed}");
        assert!(derive_ngram_labels(&["a"], &[0], &[0], 4, Direction::Forward).is_err());
    }

    #[test]
    fn trigrams_nest_in_bigrams_nest_in_tokens() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (mut tokens, mut sid, mut pos) = (Vec::new(), Vec::new(), Vec::new());
        let mut s = 0;
        while tokens.len() < 10_000 {
            let len = rng.random_range(1..15);
            for p in 0..len {
                tokens.push(format!("w{}", rng.random_range(0..40)));
                sid.push(s);
                pos.push(p);
            }
            s += 1;
        }
        for dir in [Direction::Forward, Direction::Backward] {
            let uni = derive_ngram_labels(&tokens, &sid, &pos, 1, dir).unwrap();
            let bi = derive_ngram_labels(&tokens, &sid, &pos, 2, dir).unwrap();
            let tri = derive_ngram_labels(&tokens, &sid, &pos, 3, dir).unwrap();
            tri.check_nested_in(&bi).unwrap();
            bi.check_nested_in(&uni).unwrap();
        }
    }
}
