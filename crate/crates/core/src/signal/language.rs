use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::MeaningSignalDataset;
use crate::error::{Error, Result};

/// Calibration languages: maximally regular or maximally irregular.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LanguageKind {
    /// Fixed role→position blocks and a fixed atom→char code per role.
    Ideal,
    /// Each meaning gets an independent uniformly random signal.
    Random,
}

/// Lookup tables of an ideal language, used to decode its signals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdealCode {
    /// Role written at each signal position.
    pub position_role: Vec<usize>,
    /// `atom_chars[role][atom]` is the char that spells the atom.
    pub atom_chars: Vec<Vec<usize>>,
}

impl IdealCode {
    pub fn encode(&self, meaning: &[usize]) -> Vec<usize> {
        self.position_role
            .iter()
            .map(|&r| self.atom_chars[r][meaning[r]])
            .collect()
    }

    /// Inverts [`IdealCode::encode`] from the first position of each role.
    pub fn decode(&self, signal: &[usize]) -> Option<Vec<usize>> {
        let roles = self.atom_chars.len();
        let mut meaning = vec![None; roles];
        for (p, &r) in self.position_role.iter().enumerate() {
            if meaning[r].is_none() {
                let c = *signal.get(p)?;
                meaning[r] = Some(self.atom_chars[r].iter().position(|&x| x == c)?);
            }
        }
        meaning.into_iter().collect()
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedLanguage {
    pub dataset: MeaningSignalDataset,
    /// Present for [`LanguageKind::Ideal`].
    pub code: Option<IdealCode>,
}

/// Largest meaning space the generator will enumerate.
const MAX_MEANINGS: usize = 10_000_000;

/// Enumerates the full `A^R` meaning space and attaches signals.
pub fn generate_language(
    kind: LanguageKind,
    roles: usize,
    atoms: usize,
    alphabet: usize,
    length: usize,
    seed: u64,
) -> Result<GeneratedLanguage> {
    if roles == 0 || atoms == 0 || alphabet == 0 {
        return Err(Error::validation("roles, atoms and alphabet must be positive"));
    }
    if length < roles {
        return Err(Error::validation(format!(
            "signal length {length} cannot hold {roles} roles"
        )));
    }
    if kind == LanguageKind::Ideal && alphabet < atoms {
        return Err(Error::Capacity(format!(
            "alphabet of {alphabet} chars cannot encode {atoms} atoms one-to-one"
        )));
    }
    let total = (0..roles).try_fold(1usize, |acc, _| acc.checked_mul(atoms));
    let total = match total {
        Some(t) if t <= MAX_MEANINGS => t,
        _ => {
            return Err(Error::validation(format!(
                "meaning space {atoms}^{roles} exceeds {MAX_MEANINGS} rows"
            )))
        }
    };

    let meanings: Vec<Vec<usize>> = (0..total)
        .map(|mut idx| {
            let mut m = vec![0; roles];
            for slot in m.iter_mut().rev() {
                *slot = idx % atoms;
                idx /= atoms;
            }
            m
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (signals, code) = match kind {
        LanguageKind::Ideal => {
            let mut block_role: Vec<usize> = (0..roles).collect();
            block_role.shuffle(&mut rng);
            let position_role = (0..length).map(|p| block_role[p * roles / length]).collect();
            let atom_chars = (0..roles)
                .map(|_| {
                    let mut chars: Vec<usize> = (0..alphabet).collect();
                    chars.shuffle(&mut rng);
                    chars.truncate(atoms);
                    chars
                })
                .collect();
            let code = IdealCode {
                position_role,
                atom_chars,
            };
            (meanings.iter().map(|m| code.encode(m)).collect(), Some(code))
        }
        LanguageKind::Random => (
            meanings
                .iter()
                .map(|_| (0..length).map(|_| rng.random_range(0..alphabet)).collect())
                .collect(),
            None,
        ),
    };
    Ok(GeneratedLanguage {
        dataset: MeaningSignalDataset::new(roles, atoms, alphabet, length, meanings, signals)?,
        code,
    })
}
