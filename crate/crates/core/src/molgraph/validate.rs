use serde::Serialize;

use super::element;
use super::Molecule;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValenceViolation {
    pub atom: usize,
    pub symbol: &'static str,
    pub formal_charge: i8,
    /// Bond-order sum plus hydrogens (plus one for aromatic atoms).
    pub total: u32,
    pub allowed: Vec<u8>,
}

impl std::fmt::Display for ValenceViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "atom {} ({}", self.atom, self.symbol)?;
        if self.formal_charge != 0 {
            write!(f, "{:+}", self.formal_charge)?;
        }
        write!(f, ") has valence {}, allowed {:?}", self.total, self.allowed)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidityVerdict {
    pub valid: bool,
    pub violations: Vec<ValenceViolation>,
}

/// Check every constrained atom against the charge-adjusted valence table.
///
/// Aromatic atoms count each aromatic bond as 1 plus 1 for the ring pi system.
/// Heteroatoms that donate a lone pair to the ring (pyrrole-type N, furan O,
/// thiophene S) are also accepted without the extra unit.
pub fn validate(mol: &Molecule) -> ValidityVerdict {
    let mut violations = Vec::new();
    for (i, atom) in mol.atoms().iter().enumerate() {
        let Some(allowed) = element::charged_valences(atom.atomic_number, atom.formal_charge)
        else {
            continue;
        };
        let base = mol.bond_order_sum(i) + mol.hydrogen_count(i) as u32;
        let fits = |total: u32| {
            if allowed.is_empty() {
                total == 0
            } else {
                allowed.iter().any(|&v| v as u32 == total)
            }
        };
        let (ok, total) = if atom.aromatic {
            let with_pi = base + 1;
            let shifted = atom.atomic_number as i16 - atom.formal_charge as i16;
            let donor = shifted >= 7 && fits(base);
            (fits(with_pi) || donor, with_pi)
        } else {
            (fits(base), base)
        };
        if !ok {
            violations.push(ValenceViolation {
                atom: i,
                symbol: atom.symbol(),
                formal_charge: atom.formal_charge,
                total,
                allowed: allowed.to_vec(),
            });
        }
    }
    ValidityVerdict {
        valid: violations.is_empty(),
        violations,
    }
}
