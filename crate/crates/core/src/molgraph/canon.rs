//! Canonical atom ranking and canonical SMILES.
//!
//! Ranks start from a per-atom invariant tuple and are refined by sorted
//! neighbour ranks until the partition stops splitting. Remaining ties are
//! resolved by individualizing each member of the first tied class in turn
//! and keeping the lexicographically smallest string over all leaves.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::parse::{parse, ParseError};
use super::write::write_smiles;
use super::Molecule;

/// Upper bound on tie-break leaves explored per molecule. Only reached by
/// highly symmetric graphs far outside drug-like chemistry.
const MAX_LEAVES: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CanonicalForm {
    pub text: String,
}

impl CanonicalForm {
    pub fn as_str(&self) -> &str {
        &self.text
    }
}

impl fmt::Display for CanonicalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl From<CanonicalForm> for String {
    fn from(c: CanonicalForm) -> String {
        c.text
    }
}

/// Parse then canonicalize.
pub fn canonicalize(text: &str) -> Result<CanonicalForm, ParseError> {
    parse(text).map(|m| canonical_smiles(&m))
}

/// Canonical SMILES of a molecular graph. Stereo markers are not encoded.
pub fn canonical_smiles(mol: &Molecule) -> CanonicalForm {
    let ranks = refine(mol, initial_ranks(mol));
    let mut search = Search {
        mol,
        best: None,
        leaves: 0,
    };
    search.descend(ranks);
    CanonicalForm {
        text: search.best.expect("at least one leaf"),
    }
}

/// Rank vector where each atom's rank is the number of atoms with a strictly
/// smaller key.
fn ranks_from_keys<K: Ord>(keys: &[K]) -> Vec<u32> {
    let mut idx: Vec<usize> = (0..keys.len()).collect();
    idx.sort_by(|&a, &b| keys[a].cmp(&keys[b]));
    let mut ranks = vec![0u32; keys.len()];
    for pos in 1..idx.len() {
        let (prev, cur) = (idx[pos - 1], idx[pos]);
        ranks[cur] = if keys[cur] == keys[prev] {
            ranks[prev]
        } else {
            pos as u32
        };
    }
    ranks
}

fn initial_ranks(mol: &Molecule) -> Vec<u32> {
    let in_ring = mol.ring_atoms();
    let keys: Vec<_> = mol
        .atoms()
        .iter()
        .enumerate()
        .map(|(i, a)| {
            (
                a.atomic_number,
                mol.degree(i),
                a.formal_charge,
                mol.hydrogen_count(i),
                a.aromatic,
                in_ring[i],
                a.isotope,
            )
        })
        .collect();
    ranks_from_keys(&keys)
}

fn class_count(ranks: &[u32]) -> usize {
    let mut seen = vec![false; ranks.len()];
    ranks.iter().filter(|&&r| !std::mem::replace(&mut seen[r as usize], true)).count()
}

fn refine(mol: &Molecule, mut ranks: Vec<u32>) -> Vec<u32> {
    let mut classes = class_count(&ranks);
    loop {
        if classes == ranks.len() {
            return ranks;
        }
        let keys: Vec<(u32, Vec<(u8, u32)>)> = (0..ranks.len())
            .map(|i| {
                let mut nbrs: Vec<(u8, u32)> = mol
                    .neighbors(i)
                    .iter()
                    .map(|&(j, k)| (mol.bonds()[k].order.code(), ranks[j]))
                    .collect();
                nbrs.sort_unstable();
                (ranks[i], nbrs)
            })
            .collect();
        let next = ranks_from_keys(&keys);
        let next_classes = class_count(&next);
        if next_classes == classes {
            return ranks;
        }
        ranks = next;
        classes = next_classes;
    }
}

struct Search<'a> {
    mol: &'a Molecule,
    best: Option<String>,
    leaves: usize,
}

impl Search<'_> {
    fn descend(&mut self, ranks: Vec<u32>) {
        let n = ranks.len();
        // first (lowest-ranked) class with more than one member
        let mut sizes = vec![0u32; n];
        for &r in &ranks {
            sizes[r as usize] += 1;
        }
        let Some(target) = (0..n).find(|&r| sizes[r] > 1) else {
            let text = write_smiles(self.mol, &ranks, false);
            self.leaves += 1;
            if self.best.as_ref().is_none_or(|b| text < *b) {
                self.best = Some(text);
            }
            return;
        };
        let members: Vec<usize> = (0..n).filter(|&i| ranks[i] as usize == target).collect();
        for &chosen in &members {
            if self.leaves >= MAX_LEAVES && self.best.is_some() {
                return;
            }
            let mut split = ranks.clone();
            for &m in &members {
                if m != chosen {
                    split[m] += 1;
                }
            }
            let refined = refine(self.mol, split);
            self.descend(refined);
        }
    }
}
