//! Variation measures over discrete meaning→signal mappings.
//!
//! A dataset pairs structured meanings (one atom per role) with character
//! signals. [`MappingTensor`] holds `P(char at position | atom in role)`, and
//! the four measures ([`synonymy`], [`homonymy`], [`word_order_freedom`],
//! [`entanglement`]) read it. [`topographic_similarity`] works on the raw
//! pairs instead.

mod language;
mod tensor;
mod topsim;

use std::collections::BTreeSet;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use language::{generate_language, GeneratedLanguage, IdealCode, LanguageKind};
pub use tensor::{
    entanglement, estimate_mapping_tensor, homonymy, role_position_profile, synonymy, word_order_freedom,
    MappingTensor, RolePositionProfile,
};
pub use topsim::{levenshtein, topographic_similarity, CorrelationMethod, Topsim};

/// Meanings (role → atom id) paired with signals (character ids).
#[derive(Debug, Clone, PartialEq)]
pub struct MeaningSignalDataset {
    roles: usize,
    atoms_per_role: usize,
    alphabet_size: usize,
    signal_length: usize,
    meanings: Vec<Vec<usize>>,
    signals: Vec<Vec<usize>>,
    alphabet: Vec<char>,
}

/// Default display alphabet: `A..Z`, then `a..z`, then digits.
fn default_alphabet(size: usize) -> Vec<char> {
    ('A'..='Z')
        .chain('a'..='z')
        .chain('0'..='9')
        .chain((0x100u32..).filter_map(char::from_u32))
        .take(size)
        .collect()
}

impl MeaningSignalDataset {
    pub fn new(
        roles: usize,
        atoms_per_role: usize,
        alphabet_size: usize,
        signal_length: usize,
        meanings: Vec<Vec<usize>>,
        signals: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if roles == 0 || atoms_per_role == 0 || alphabet_size == 0 || signal_length == 0 {
            return Err(Error::validation(
                "roles, atoms, alphabet size and signal length must all be positive",
            ));
        }
        if meanings.len() != signals.len() {
            return Err(Error::shape(format!(
                "{} meanings but {} signals",
                meanings.len(),
                signals.len()
            )));
        }
        for (i, m) in meanings.iter().enumerate() {
            if m.len() != roles {
                return Err(Error::validation(format!(
                    "meaning {i} has {} role slots, expected {roles}",
                    m.len()
                )));
            }
            if let Some(a) = m.iter().find(|&&a| a >= atoms_per_role) {
                return Err(Error::validation(format!(
                    "meaning {i} uses atom {a} but only {atoms_per_role} atoms per role exist"
                )));
            }
        }
        for (i, s) in signals.iter().enumerate() {
            if s.len() > signal_length {
                return Err(Error::validation(format!(
                    "signal {i} has length {} > {signal_length}",
                    s.len()
                )));
            }
            if let Some(c) = s.iter().find(|&&c| c >= alphabet_size) {
                return Err(Error::validation(format!(
                    "signal {i} uses char {c} outside the alphabet of {alphabet_size}"
                )));
            }
        }
        Ok(Self {
            roles,
            atoms_per_role,
            alphabet_size,
            signal_length,
            meanings,
            signals,
            alphabet: default_alphabet(alphabet_size),
        })
    }

    /// Parses tab-separated pairs: `"0:3 1:7 2:1<TAB>signal"` per line.
    ///
    /// Roles and atoms are taken from the ids in the first column; the
    /// alphabet is the sorted set of characters seen in the signals. Blank
    /// lines are skipped.
    pub fn from_tsv<R: BufRead>(reader: R) -> Result<Self> {
        let mut raw = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::format("pairs", format!("line {}: {e}", lineno + 1)))?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let (meaning, signal) = line.split_once('\t').ok_or_else(|| {
                Error::format(
                    "pairs",
                    format!("line {}: expected two tab-separated columns", lineno + 1),
                )
            })?;
            let mut slots = Vec::new();
            for token in meaning.split_whitespace() {
                let (r, a) = token.split_once(':').ok_or_else(|| {
                    Error::format(
                        "meaning",
                        format!("line {}: `{token}` is not role:atom", lineno + 1),
                    )
                })?;
                let parse = |s: &str, what: &str| {
                    s.parse::<usize>().map_err(|_| {
                        Error::format("meaning", format!("line {}: bad {what} id `{s}`", lineno + 1))
                    })
                };
                slots.push((parse(r, "role")?, parse(a, "atom")?));
            }
            raw.push((lineno + 1, slots, signal.chars().collect::<Vec<char>>()));
        }
        if raw.is_empty() {
            return Err(Error::validation("pairs file contains no rows"));
        }
        let roles = raw
            .iter()
            .flat_map(|(_, s, _)| s.iter().map(|(r, _)| r + 1))
            .max()
            .unwrap_or(0);
        let atoms = raw
            .iter()
            .flat_map(|(_, s, _)| s.iter().map(|(_, a)| a + 1))
            .max()
            .unwrap_or(0);
        let alphabet: Vec<char> = raw
            .iter()
            .flat_map(|(_, _, s)| s.iter().copied())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let signal_length = raw.iter().map(|(_, _, s)| s.len()).max().unwrap_or(0);
        let mut meanings = Vec::with_capacity(raw.len());
        let mut signals = Vec::with_capacity(raw.len());
        for (lineno, slots, signal) in raw {
            let mut meaning = vec![usize::MAX; roles];
            for (r, a) in slots {
                if meaning[r] != usize::MAX {
                    return Err(Error::format(
                        "meaning",
                        format!("line {lineno}: role {r} given twice"),
                    ));
                }
                meaning[r] = a;
            }
            if let Some(r) = meaning.iter().position(|&a| a == usize::MAX) {
                return Err(Error::format(
                    "meaning",
                    format!("line {lineno}: role {r} missing"),
                ));
            }
            meanings.push(meaning);
            signals.push(
                signal
                    .iter()
                    .map(|c| alphabet.binary_search(c).expect("alphabet built from signals"))
                    .collect(),
            );
        }
        let mut ds = Self::new(
            roles,
            atoms,
            alphabet.len().max(1),
            signal_length.max(1),
            meanings,
            signals,
        )?;
        if !alphabet.is_empty() {
            ds.alphabet = alphabet;
        }
        Ok(ds)
    }

    pub fn roles(&self) -> usize {
        self.roles
    }

    pub fn atoms_per_role(&self) -> usize {
        self.atoms_per_role
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn signal_length(&self) -> usize {
        self.signal_length
    }

    pub fn len(&self) -> usize {
        self.meanings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.meanings.is_empty()
    }

    pub fn meanings(&self) -> &[Vec<usize>] {
        &self.meanings
    }

    pub fn signals(&self) -> &[Vec<usize>] {
        &self.signals
    }

    /// Renders a signal with the dataset's display alphabet.
    pub fn signal_string(&self, row: usize) -> String {
        self.signals[row].iter().map(|&c| self.alphabet[c]).collect()
    }

    /// Serializes back to the tab-separated pairs format.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for row in 0..self.len() {
            let meaning: Vec<String> = self.meanings[row]
                .iter()
                .enumerate()
                .map(|(r, a)| format!("{r}:{a}"))
                .collect();
            out.push_str(&meaning.join(" "));
            out.push('\t');
            out.push_str(&self.signal_string(row));
            out.push('\n');
        }
        out
    }
}

/// All four tensor measures plus topographic similarity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalReport {
    pub rows: usize,
    pub roles: usize,
    pub atoms_per_role: usize,
    pub alphabet_size: usize,
    pub signal_length: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synonymy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub homonymy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub freedom: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entanglement: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub topsim: Option<Topsim>,
}

/// Pairs drawn for topographic similarity when the dataset has more.
pub const DEFAULT_MAX_PAIRS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalMeasure {
    Synonymy,
    Homonymy,
    Freedom,
    Entanglement,
    Topsim,
}

impl SignalMeasure {
    pub const ALL: [SignalMeasure; 5] = [
        SignalMeasure::Synonymy,
        SignalMeasure::Homonymy,
        SignalMeasure::Freedom,
        SignalMeasure::Entanglement,
        SignalMeasure::Topsim,
    ];

    /// Comma-separated names; `all` selects every measure.
    pub fn parse_list(s: &str) -> Result<Vec<SignalMeasure>> {
        let mut out = BTreeSet::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "all" => out.extend(Self::ALL),
                "synonymy" => drop(out.insert(SignalMeasure::Synonymy)),
                "homonymy" => drop(out.insert(SignalMeasure::Homonymy)),
                "freedom" => drop(out.insert(SignalMeasure::Freedom)),
                "entanglement" => drop(out.insert(SignalMeasure::Entanglement)),
                "topsim" => drop(out.insert(SignalMeasure::Topsim)),
                other => return Err(Error::validation(format!("unknown signal measure `{other}`"))),
            }
        }
        if out.is_empty() {
            return Err(Error::validation("no signal measures selected"));
        }
        Ok(out.into_iter().collect())
    }
}

/// Computes the selected measures. Topographic similarity uses
/// `max_pairs`, `seed` and `method`.
pub fn signal_report(
    data: &MeaningSignalDataset,
    measures: &[SignalMeasure],
    max_pairs: usize,
    seed: u64,
    method: CorrelationMethod,
) -> Result<SignalReport> {
    let wants = |m| measures.contains(&m);
    let tensor_needed = measures.iter().any(|&m| m != SignalMeasure::Topsim);
    let t = if tensor_needed {
        Some(estimate_mapping_tensor(data)?)
    } else {
        None
    };
    let on = |m, f: &dyn Fn(&MappingTensor) -> f64| if wants(m) { t.as_ref().map(f) } else { None };
    Ok(SignalReport {
        rows: data.len(),
        roles: data.roles(),
        atoms_per_role: data.atoms_per_role(),
        alphabet_size: data.alphabet_size(),
        signal_length: data.signal_length(),
        synonymy: on(SignalMeasure::Synonymy, &synonymy),
        homonymy: on(SignalMeasure::Homonymy, &homonymy),
        freedom: on(SignalMeasure::Freedom, &word_order_freedom),
        entanglement: match (&t, wants(SignalMeasure::Entanglement)) {
            (Some(t), true) => Some(entanglement(t)?),
            _ => None,
        },
        topsim: if wants(SignalMeasure::Topsim) {
            Some(topographic_similarity(data, max_pairs, seed, method)?)
        } else {
            None
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tsv_round_trip() {
        let text = "0:0 1:1\tAB\n0:1 1:0\tBA\n\n0:1 1:1\tB\n";
        let ds = MeaningSignalDataset::from_tsv(text.as_bytes()).unwrap();
        assert_eq!(ds.roles(), 2);
        assert_eq!(ds.atoms_per_role(), 2);
        assert_eq!(ds.alphabet_size(), 2);
        assert_eq!(ds.signal_length(), 2);
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.signal_string(2), "B");
        let again = MeaningSignalDataset::from_tsv(ds.to_tsv().as_bytes()).unwrap();
        assert_eq!(again, ds);
    }

    #[test]
    fn tsv_errors_name_the_problem() {
        let missing_tab = MeaningSignalDataset::from_tsv("0:1 AB\n".as_bytes()).unwrap_err();
        assert!(missing_tab.to_string().contains("tab-separated"));
        let missing_role = MeaningSignalDataset::from_tsv("0:1 1:0\tA\n1:1\tB\n".as_bytes()).unwrap_err();
        assert!(missing_role.to_string().contains("role 0 missing"));
        assert!(MeaningSignalDataset::from_tsv("".as_bytes()).is_err());
    }

    #[test]
    fn report_selects_measures() {
        let lang = generate_language(LanguageKind::Ideal, 2, 3, 6, 2, 1).unwrap();
        let only = signal_report(
            &lang.dataset,
            &[SignalMeasure::Synonymy],
            100,
            0,
            CorrelationMethod::Spearman,
        )
        .unwrap();
        assert!(only.synonymy.unwrap() < 1e-9);
        assert!(only.homonymy.is_none() && only.topsim.is_none());
        let all = SignalMeasure::parse_list("all").unwrap();
        let full = signal_report(&lang.dataset, &all, 100, 0, CorrelationMethod::Spearman).unwrap();
        assert!(full.entanglement.is_some() && full.topsim.is_some());
        assert_eq!(
            SignalMeasure::parse_list("topsim, synonymy").unwrap(),
            vec![SignalMeasure::Synonymy, SignalMeasure::Topsim]
        );
        assert!(SignalMeasure::parse_list("nope").is_err());
    }

    #[test]
    fn dataset_validation() {
        assert!(MeaningSignalDataset::new(1, 2, 2, 1, vec![vec![2]], vec![vec![0]]).is_err());
        assert!(MeaningSignalDataset::new(1, 2, 2, 1, vec![vec![1]], vec![vec![2]]).is_err());
        assert!(MeaningSignalDataset::new(1, 2, 2, 1, vec![vec![1]], vec![]).is_err());
        assert!(MeaningSignalDataset::new(2, 2, 2, 1, vec![vec![1]], vec![vec![0]]).is_err());
    }
}
