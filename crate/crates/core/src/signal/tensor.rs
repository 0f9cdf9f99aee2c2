use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::MeaningSignalDataset;
use crate::error::{Error, Result};
use crate::info::entropy_of;
use crate::numeric::mean;

/// `P(char at position | atom in role)` as a dense R×A×P×C array.
///
/// When any signal is shorter than the configured length, the char axis gets
/// one extra pad symbol (the last index) that is counted like any other
/// character, and normalizers use `ln` of that enlarged alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingTensor {
    roles: usize,
    atoms: usize,
    positions: usize,
    chars: usize,
    padded: bool,
    probs: Vec<f64>,
    attested: Vec<bool>,
}

impl MappingTensor {
    #[inline]
    fn idx(&self, r: usize, a: usize, p: usize, j: usize) -> usize {
        ((r * self.atoms + a) * self.positions + p) * self.chars + j
    }

    pub fn roles(&self) -> usize {
        self.roles
    }

    pub fn atoms(&self) -> usize {
        self.atoms
    }

    pub fn positions(&self) -> usize {
        self.positions
    }

    /// Size of the char axis, including the pad symbol when present.
    pub fn chars(&self) -> usize {
        self.chars
    }

    pub fn padded(&self) -> bool {
        self.padded
    }

    pub fn prob(&self, role: usize, atom: usize, position: usize, char: usize) -> f64 {
        self.probs[self.idx(role, atom, position, char)]
    }

    /// The distribution over chars at one position for one (role, atom).
    pub fn row(&self, role: usize, atom: usize, position: usize) -> &[f64] {
        let start = self.idx(role, atom, position, 0);
        &self.probs[start..start + self.chars]
    }

    pub fn attested(&self, role: usize, atom: usize) -> bool {
        self.attested[role * self.atoms + atom]
    }

    fn attested_atoms(&self, role: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.atoms).filter(move |&a| self.attested(role, a))
    }

    /// `H(char_p | atom)` for every attested (role, atom, position), in nats.
    fn column_entropy(&self, role: usize, atom: usize, position: usize) -> f64 {
        entropy_of(self.row(role, atom, position))
    }
}

/// Maximum-likelihood estimate of the mapping tensor from counts.
pub fn estimate_mapping_tensor(data: &MeaningSignalDataset) -> Result<MappingTensor> {
    if data.is_empty() {
        return Err(Error::validation(
            "cannot estimate a mapping tensor from an empty dataset",
        ));
    }
    let (roles, atoms, positions) = (data.roles(), data.atoms_per_role(), data.signal_length());
    let padded = data.signals().iter().any(|s| s.len() < positions);
    let chars = data.alphabet_size() + usize::from(padded);
    let pad = chars - 1;
    let cells = roles * atoms * positions * chars;

    // Integer counts merge exactly, so the parallel reduction is deterministic.
    let counts = data
        .meanings()
        .par_iter()
        .zip(data.signals().par_iter())
        .with_min_len(1024)
        .fold(
            || vec![0u32; cells],
            |mut acc, (meaning, signal)| {
                for (r, &a) in meaning.iter().enumerate() {
                    let base = (r * atoms + a) * positions;
                    for p in 0..positions {
                        let c = signal.get(p).copied().unwrap_or(pad);
                        acc[(base + p) * chars + c] += 1;
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![0u32; cells],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );

    let mut atom_counts = vec![0u64; roles * atoms];
    for meaning in data.meanings() {
        for (r, &a) in meaning.iter().enumerate() {
            atom_counts[r * atoms + a] += 1;
        }
    }
    let mut probs = vec![0.0; cells];
    let block = positions * chars;
    for ((p, c), &n) in probs
        .chunks_mut(block)
        .zip(counts.chunks(block))
        .zip(&atom_counts)
    {
        if n > 0 {
            for (p, &c) in p.iter_mut().zip(c) {
                *p = c as f64 / n as f64;
            }
        }
    }
    Ok(MappingTensor {
        roles,
        atoms,
        positions,
        chars,
        padded,
        probs,
        attested: atom_counts.iter().map(|&n| n > 0).collect(),
    })
}

fn normalized(h: f64, support: usize) -> f64 {
    if support < 2 {
        0.0
    } else {
        (h / (support as f64).ln()).clamp(0.0, 1.0)
    }
}

/// Mean over roles of the mean over attested atoms of
/// `min_p H(char_p | atom) / ln C`.
pub fn synonymy(t: &MappingTensor) -> f64 {
    let per_role: Vec<f64> = (0..t.roles)
        .map(|r| {
            let per_atom: Vec<f64> = t
                .attested_atoms(r)
                .map(|a| {
                    let h = (0..t.positions)
                        .map(|p| t.column_entropy(r, a, p))
                        .fold(f64::INFINITY, f64::min);
                    normalized(h, t.chars)
                })
                .collect();
            mean(&per_atom)
        })
        .collect();
    mean(&per_role)
}

/// Mean over roles of the mean over chars of `min_p H(atom | char_p) / ln A`,
/// with `P(atom | char_p)` obtained by renormalizing the tensor along the
/// atom axis. Chars never seen at any position of a role are skipped.
pub fn homonymy(t: &MappingTensor) -> f64 {
    let mut per_role = Vec::with_capacity(t.roles);
    let mut column = Vec::with_capacity(t.atoms);
    for r in 0..t.roles {
        let mut per_char = Vec::new();
        for j in 0..t.chars {
            let mut best: Option<f64> = None;
            for p in 0..t.positions {
                column.clear();
                column.extend(t.attested_atoms(r).map(|a| t.prob(r, a, p, j)));
                let total: f64 = column.iter().sum();
                if total <= 0.0 {
                    continue;
                }
                column.iter_mut().for_each(|v| *v /= total);
                let h = entropy_of(&column);
                best = Some(best.map_or(h, |b: f64| b.min(h)));
            }
            if let Some(h) = best {
                per_char.push(normalized(h, t.atoms));
            }
        }
        per_role.push(mean(&per_char));
    }
    mean(&per_role)
}

/// Per-role, per-position mean conditional entropy over that role's atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolePositionProfile {
    /// `mean_entropy[role][position]` in nats.
    pub mean_entropy: Vec<Vec<f64>>,
}

pub fn role_position_profile(t: &MappingTensor) -> RolePositionProfile {
    let mean_entropy = (0..t.roles)
        .map(|r| {
            (0..t.positions)
                .map(|p| {
                    let hs: Vec<f64> = t.attested_atoms(r).map(|a| t.column_entropy(r, a, p)).collect();
                    mean(&hs)
                })
                .collect()
        })
        .collect();
    RolePositionProfile { mean_entropy }
}

/// Mean over roles of `min_p F(role)[p] / ln C`.
pub fn word_order_freedom(t: &MappingTensor) -> f64 {
    let profile = role_position_profile(t);
    let per_role: Vec<f64> = profile
        .mean_entropy
        .iter()
        .map(|f| normalized(f.iter().copied().fold(f64::INFINITY, f64::min), t.chars))
        .collect();
    mean(&per_role)
}

/// `1 − mean over role pairs of max_p |Fᵢ − Fⱼ| / max_p max(Fᵢ, Fⱼ)`.
pub fn entanglement(t: &MappingTensor) -> Result<f64> {
    if t.roles < 2 {
        return Err(Error::validation(format!(
            "entanglement needs at least 2 roles, got {}",
            t.roles
        )));
    }
    let profile = role_position_profile(t);
    let f = &profile.mean_entropy;
    let mut ratios = Vec::new();
    for i in 0..t.roles {
        for j in i + 1..t.roles {
            let diff = f[i]
                .iter()
                .zip(&f[j])
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let top = f[i].iter().zip(&f[j]).map(|(a, b)| a.max(*b)).fold(0.0, f64::max);
            ratios.push(if top > 0.0 {
                (diff / top).clamp(0.0, 1.0)
            } else {
                0.0
            });
        }
    }
    Ok((1.0 - mean(&ratios)).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(
        roles: usize,
        atoms: usize,
        chars: usize,
        len: usize,
        rows: &[(&[usize], &[usize])],
    ) -> MeaningSignalDataset {
        MeaningSignalDataset::new(
            roles,
            atoms,
            chars,
            len,
            rows.iter().map(|(m, _)| m.to_vec()).collect(),
            rows.iter().map(|(_, s)| s.to_vec()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn toy_counts() {
        // (S:0) → "AB", (S:0) → "AC"
        let d = ds(1, 1, 3, 2, &[(&[0], &[0, 1]), (&[0], &[0, 2])]);
        let t = estimate_mapping_tensor(&d).unwrap();
        assert_eq!(t.prob(0, 0, 0, 0), 1.0);
        assert_eq!(t.prob(0, 0, 1, 1), 0.5);
        assert_eq!(t.prob(0, 0, 1, 2), 0.5);
        assert!(!t.padded());
    }

    #[test]
    fn one_to_one_rows_are_one_hot() {
        // Atom k of role r always maps to char k at position r.
        let mut rows = Vec::new();
        for a in 0..3 {
            for b in 0..3 {
                rows.push((vec![a, b], vec![a, b]));
            }
        }
        let refs: Vec<(&[usize], &[usize])> =
            rows.iter().map(|(m, s)| (m.as_slice(), s.as_slice())).collect();
        let t = estimate_mapping_tensor(&ds(2, 3, 3, 2, &refs)).unwrap();
        for r in 0..2 {
            for a in 0..3 {
                assert_eq!(t.row(r, a, r), one_hot(3, a).as_slice());
            }
        }
        assert_eq!(synonymy(&t), 0.0);
        assert_eq!(word_order_freedom(&t), 0.0);
        assert_eq!(homonymy(&t), 0.0);
        assert!(entanglement(&t).unwrap() < 1e-12);
    }

    fn one_hot(n: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v
    }

    #[test]
    fn padding_adds_an_outcome() {
        let d = ds(1, 2, 2, 2, &[(&[0], &[0]), (&[1], &[1, 1])]);
        let t = estimate_mapping_tensor(&d).unwrap();
        assert!(t.padded());
        assert_eq!(t.chars(), 3);
        assert_eq!(t.prob(0, 0, 1, 2), 1.0);
    }

    #[test]
    fn empty_dataset_rejected() {
        let d = MeaningSignalDataset::new(1, 1, 1, 1, vec![], vec![]).unwrap();
        assert!(estimate_mapping_tensor(&d).is_err());
    }

    #[test]
    fn homonymy_brute_force_toy() {
        // 4 atoms, one position. Atoms 0 and 1 share char 0; atoms 2, 3 use chars 1, 2.
        let rows: Vec<(Vec<usize>, Vec<usize>)> = vec![
            (vec![0], vec![0]),
            (vec![1], vec![0]),
            (vec![2], vec![1]),
            (vec![3], vec![2]),
        ];
        let refs: Vec<(&[usize], &[usize])> =
            rows.iter().map(|(m, s)| (m.as_slice(), s.as_slice())).collect();
        let t = estimate_mapping_tensor(&ds(1, 4, 3, 1, &refs)).unwrap();
        // Oracle: P(atom | char) by direct counting.
        let mut per_char = Vec::new();
        for c in 0..3 {
            let atoms: Vec<usize> = rows
                .iter()
                .filter(|(_, s)| s[0] == c)
                .map(|(m, _)| m[0])
                .collect();
            let n = atoms.len() as f64;
            let mut h = 0.0;
            for a in 0..4 {
                let k = atoms.iter().filter(|&&x| x == a).count() as f64;
                if k > 0.0 {
                    h -= k / n * (k / n).ln();
                }
            }
            per_char.push(h / 4f64.ln());
        }
        let want = per_char.iter().sum::<f64>() / 3.0;
        assert!((homonymy(&t) - want).abs() < 1e-12);
        assert!((want - 0.5 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn identical_role_profiles_fully_entangled() {
        // Both roles always written at both positions together.
        let mut rows = Vec::new();
        for a in 0..2 {
            for b in 0..2 {
                rows.push((vec![a, b], vec![2 * a + b, 2 * a + b]));
            }
        }
        let refs: Vec<(&[usize], &[usize])> =
            rows.iter().map(|(m, s)| (m.as_slice(), s.as_slice())).collect();
        let t = estimate_mapping_tensor(&ds(2, 2, 4, 2, &refs)).unwrap();
        assert!((entanglement(&t).unwrap() - 1.0).abs() < 1e-12);
        let single = estimate_mapping_tensor(&ds(1, 1, 1, 1, &[(&[0], &[0])])).unwrap();
        assert!(entanglement(&single).is_err());
    }
}
