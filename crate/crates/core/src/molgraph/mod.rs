//! Molecular graphs: SMILES parsing, valence validation and canonical SMILES.

mod canon;
pub mod element;
mod parse;
mod validate;
mod write;

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use canon::{canonical_smiles, canonicalize, CanonicalForm};
pub use parse::{parse, ParseError, ParseErrorKind};
pub use validate::{validate, ValidityVerdict, ValenceViolation};

/// Bond multiplicity as written in SMILES.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Contribution to the bond-order sum of an atom. Aromatic bonds count 1;
    /// the ring pi system is accounted for per atom.
    pub fn valence_contribution(self) -> u32 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Atom {
    pub atomic_number: u8,
    pub aromatic: bool,
    pub formal_charge: i8,
    /// Hydrogen count written inside brackets; `None` for organic-subset atoms.
    pub explicit_h: Option<u8>,
    pub isotope: Option<u16>,
    pub bracket: bool,
    /// Raw chirality token (`@`, `@@`, `@TH1`, ...). Not part of canonical output.
    pub chirality: Option<String>,
    pub atom_class: Option<u32>,
}

impl Atom {
    /// An unbracketed organic-subset atom.
    pub fn organic(atomic_number: u8, aromatic: bool) -> Self {
        Atom {
            atomic_number,
            aromatic,
            formal_charge: 0,
            explicit_h: None,
            isotope: None,
            bracket: false,
            chirality: None,
            atom_class: None,
        }
    }

    pub fn symbol(&self) -> &'static str {
        element::symbol(self.atomic_number).unwrap_or("*")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
    /// `/` or `\` when the input carried a directional single bond, else empty.
    pub stereo_mark: String,
}

impl Bond {
    pub fn new(a: usize, b: usize, order: BondOrder) -> Self {
        Bond {
            a,
            b,
            order,
            stereo_mark: String::new(),
        }
    }

    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("atomic number {0} is not a known element")]
    UnknownElement(u8),
    #[error("atom {0} carries an explicit hydrogen count but is not a bracket atom")]
    ExplicitHydrogenOutsideBracket(usize),
    #[error("bond {0} joins atom {1} to itself")]
    SelfBond(usize, usize),
    #[error("bond {0} references atom {1}, out of range")]
    AtomOutOfRange(usize, usize),
    #[error("atoms {0} and {1} are joined by more than one bond")]
    DuplicateBond(usize, usize),
    #[error("molecule has no atoms")]
    Empty,
}

/// A parsed molecular graph.
#[derive(Debug, Clone)]
pub struct Molecule {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    source_text: String,
    adjacency: Vec<Vec<(usize, usize)>>,
    hydrogens: Vec<u8>,
}

impl Molecule {
    /// Assemble a molecule from parts, checking the graph invariants.
    pub fn new(
        atoms: Vec<Atom>,
        bonds: Vec<Bond>,
        source_text: impl Into<String>,
    ) -> Result<Self, GraphError> {
        if atoms.is_empty() {
            return Err(GraphError::Empty);
        }
        for (i, atom) in atoms.iter().enumerate() {
            if element::symbol(atom.atomic_number).is_none() {
                return Err(GraphError::UnknownElement(atom.atomic_number));
            }
            if atom.explicit_h.is_some() && !atom.bracket {
                return Err(GraphError::ExplicitHydrogenOutsideBracket(i));
            }
        }
        let mut seen = HashSet::new();
        let mut adjacency = vec![Vec::new(); atoms.len()];
        for (k, bond) in bonds.iter().enumerate() {
            if bond.a == bond.b {
                return Err(GraphError::SelfBond(k, bond.a));
            }
            for end in [bond.a, bond.b] {
                if end >= atoms.len() {
                    return Err(GraphError::AtomOutOfRange(k, end));
                }
            }
            if !seen.insert((bond.a.min(bond.b), bond.a.max(bond.b))) {
                return Err(GraphError::DuplicateBond(bond.a, bond.b));
            }
            adjacency[bond.a].push((bond.b, k));
            adjacency[bond.b].push((bond.a, k));
        }
        let hydrogens = (0..atoms.len())
            .map(|i| {
                let sum = adjacency[i]
                    .iter()
                    .map(|&(_, k)| bonds[k].order.valence_contribution())
                    .sum();
                hydrogen_count(&atoms[i], sum)
            })
            .collect();
        Ok(Molecule {
            atoms,
            bonds,
            source_text: source_text.into(),
            adjacency,
            hydrogens,
        })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn source_text(&self) -> &str {
        &self.source_text
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    /// `(neighbour, bond index)` pairs for an atom.
    pub fn neighbors(&self, atom: usize) -> &[(usize, usize)] {
        &self.adjacency[atom]
    }

    pub fn degree(&self, atom: usize) -> usize {
        self.adjacency[atom].len()
    }

    /// Attached hydrogen count: explicit for bracket atoms, implicit otherwise.
    pub fn hydrogen_count(&self, atom: usize) -> u8 {
        self.hydrogens[atom]
    }

    /// Sum of bond valence contributions at an atom (excluding hydrogens).
    pub fn bond_order_sum(&self, atom: usize) -> u32 {
        self.adjacency[atom]
            .iter()
            .map(|&(_, k)| self.bonds[k].order.valence_contribution())
            .sum()
    }

    /// Atoms that lie on at least one cycle.
    pub fn ring_atoms(&self) -> Vec<bool> {
        let ring_bonds = self.ring_bonds();
        let mut in_ring = vec![false; self.atoms.len()];
        for (k, bond) in self.bonds.iter().enumerate() {
            if ring_bonds[k] {
                in_ring[bond.a] = true;
                in_ring[bond.b] = true;
            }
        }
        in_ring
    }

    /// Bonds that lie on at least one cycle (i.e. are not bridges).
    pub fn ring_bonds(&self) -> Vec<bool> {
        let n = self.atoms.len();
        let mut disc = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut is_bridge = vec![false; self.bonds.len()];
        let mut timer = 0;
        for root in 0..n {
            if disc[root] != usize::MAX {
                continue;
            }
            // (atom, bond used to enter, next neighbour slot)
            let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
            disc[root] = timer;
            low[root] = timer;
            timer += 1;
            while let Some(&mut (u, via, ref mut slot)) = stack.last_mut() {
                if let Some(&(v, k)) = self.adjacency[u].get(*slot) {
                    *slot += 1;
                    if k == via {
                        continue;
                    }
                    if disc[v] == usize::MAX {
                        disc[v] = timer;
                        low[v] = timer;
                        timer += 1;
                        stack.push((v, k, 0));
                    } else {
                        low[u] = low[u].min(disc[v]);
                    }
                } else {
                    stack.pop();
                    if let Some(&(parent, _, _)) = stack.last() {
                        low[parent] = low[parent].min(low[u]);
                        if low[u] > disc[parent] {
                            is_bridge[via] = true;
                        }
                    }
                }
            }
        }
        is_bridge.iter().map(|b| !b).collect()
    }

    /// Number of connected components.
    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.atoms.len()];
        let mut count = 0;
        for start in 0..self.atoms.len() {
            if seen[start] {
                continue;
            }
            count += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(u) = stack.pop() {
                for &(v, _) in &self.adjacency[u] {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
        }
        count
    }

    /// The same graph with atom `i` moved to position `permutation[i]`.
    ///
    /// Panics if `permutation` is not a permutation of `0..atom_count()`.
    pub fn relabeled(&self, permutation: &[usize]) -> Molecule {
        assert_eq!(permutation.len(), self.atoms.len());
        let mut atoms = vec![None; self.atoms.len()];
        for (i, &p) in permutation.iter().enumerate() {
            assert!(atoms[p].is_none(), "not a permutation");
            atoms[p] = Some(self.atoms[i].clone());
        }
        let atoms = atoms.into_iter().map(Option::unwrap).collect();
        let bonds = self
            .bonds
            .iter()
            .map(|b| Bond {
                a: permutation[b.a],
                b: permutation[b.b],
                order: b.order,
                stereo_mark: b.stereo_mark.clone(),
            })
            .collect();
        Molecule::new(atoms, bonds, self.source_text.clone()).expect("relabeling preserves invariants")
    }

    /// SMILES in input atom order, preserving stereo tokens. Not canonical.
    pub fn to_smiles(&self) -> String {
        let order: Vec<u32> = (0..self.atoms.len() as u32).collect();
        write::write_smiles(self, &order, true)
    }

    /// Sorted multiset of per-atom invariants, used as a cheap isomorphism check.
    pub fn invariant_multiset(&self) -> Vec<(u8, usize, i8, u8, bool, Option<u16>)> {
        let mut v: Vec<_> = (0..self.atoms.len())
            .map(|i| {
                let a = &self.atoms[i];
                (
                    a.atomic_number,
                    self.degree(i),
                    a.formal_charge,
                    self.hydrogen_count(i),
                    a.aromatic,
                    a.isotope,
                )
            })
            .collect();
        v.sort_unstable();
        v
    }
}

impl fmt::Display for Molecule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_smiles())
    }
}

/// Hydrogens attached to an atom with the given bond-order sum.
///
/// Bracket atoms carry exactly their written count. Organic-subset atoms take
/// the lowest standard valence not below their bond-order sum; aromatic atoms
/// count one extra unit for the ring pi system and are only filled up to their
/// lowest valence.
pub(crate) fn hydrogen_count(atom: &Atom, bond_sum: u32) -> u8 {
    if atom.bracket {
        return atom.explicit_h.unwrap_or(0);
    }
    let Some(valences) = element::standard_valences(atom.atomic_number) else {
        return 0;
    };
    if atom.aromatic {
        let used = bond_sum + 1;
        let lowest = valences[0] as u32;
        return lowest.saturating_sub(used) as u8;
    }
    valences
        .iter()
        .map(|&v| v as u32)
        .find(|&v| v >= bond_sum)
        .map_or(0, |v| (v - bond_sum) as u8)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn implicit_hydrogens() {
        let m = parse("CC(=O)O").unwrap();
        let h: Vec<u8> = (0..m.atom_count()).map(|i| m.hydrogen_count(i)).collect();
        assert_eq!(h, vec![3, 0, 0, 1]);
        let benzene = parse("c1ccccc1").unwrap();
        assert!((0..6).all(|i| benzene.hydrogen_count(i) == 1));
        let pyridine = parse("c1ccncc1").unwrap();
        assert_eq!(pyridine.hydrogen_count(3), 0);
        let thiophene = parse("c1ccsc1").unwrap();
        assert_eq!(thiophene.hydrogen_count(3), 0);
        let methylpyrrole = parse("Cn1cccc1").unwrap();
        assert_eq!(methylpyrrole.hydrogen_count(1), 0);
        let sulfur = parse("CS(C)C").unwrap();
        assert_eq!(sulfur.hydrogen_count(1), 1);
    }

    #[test]
    fn ring_membership() {
        let m = parse("C1CC1CC").unwrap();
        assert_eq!(m.ring_atoms(), vec![true, true, true, false, false]);
        let spiro = parse("C12(CC1)CC2").unwrap();
        assert!(spiro.ring_atoms().iter().all(|&r| r));
        assert_eq!(parse("CC.O").unwrap().component_count(), 2);
    }

    #[test]
    fn constructor_rejects_bad_graphs() {
        let atoms = vec![Atom::organic(6, false), Atom::organic(6, false)];
        assert_eq!(
            Molecule::new(atoms.clone(), vec![Bond::new(0, 0, BondOrder::Single)], "").unwrap_err(),
            GraphError::SelfBond(0, 0)
        );
        assert_eq!(
            Molecule::new(
                atoms.clone(),
                vec![Bond::new(0, 1, BondOrder::Single), Bond::new(1, 0, BondOrder::Double)],
                ""
            )
            .unwrap_err(),
            GraphError::DuplicateBond(1, 0)
        );
        assert_eq!(
            Molecule::new(atoms, vec![Bond::new(0, 5, BondOrder::Single)], "").unwrap_err(),
            GraphError::AtomOutOfRange(0, 5)
        );
        let mut h = Atom::organic(6, false);
        h.explicit_h = Some(2);
        assert!(Molecule::new(vec![h], vec![], "").is_err());
    }

    #[test]
    fn relabeling_keeps_invariants() {
        let m = parse("CC(=O)Nc1ccccc1").unwrap();
        let perm: Vec<usize> = (0..m.atom_count()).rev().collect();
        let r = m.relabeled(&perm);
        assert_eq!(m.invariant_multiset(), r.invariant_multiset());
        assert_eq!(canonical_smiles(&m), canonical_smiles(&r));
    }
}
