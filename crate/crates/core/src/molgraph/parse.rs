use std::collections::BTreeMap;

use thiserror::Error;

use super::element;
use super::{Atom, Bond, BondOrder, Molecule};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("empty input")]
    EmptyInput,
    #[error("ring closure {0} was never closed")]
    UnclosedRing(u8),
    #[error("unbalanced parenthesis")]
    UnbalancedParenthesis,
    #[error("unknown element {0:?}")]
    UnknownElement(String),
    #[error("malformed bracket atom: {0}")]
    MalformedBracketAtom(&'static str),
    #[error("bond symbol not followed by an atom or ring closure")]
    DanglingBondSymbol,
    #[error("unexpected character {0:?}")]
    UnexpectedCharacter(char),
    #[error("duplicate bond between the same pair of atoms")]
    DuplicateBond,
    #[error("ring closure {0} specifies conflicting bond orders")]
    RingBondConflict(u8),
}

/// A SMILES syntax error at a character offset.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("SMILES error at position {position}: {kind}")]
pub struct ParseError {
    pub position: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct BondToken {
    order: BondOrder,
    mark: Option<char>,
}

struct RingOpen {
    atom: usize,
    bond: Option<BondToken>,
    position: usize,
}

struct Parser<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    rings: BTreeMap<u8, RingOpen>,
    branch_stack: Vec<usize>,
    previous: Option<usize>,
    pending_bond: Option<(BondToken, usize)>,
}

/// Parse a SMILES string into a molecular graph.
pub fn parse(text: &str) -> Result<Molecule, ParseError> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(ParseError {
            position: 0,
            kind: ParseErrorKind::EmptyInput,
        });
    }
    let mut parser = Parser {
        text: trimmed,
        bytes: trimmed.as_bytes(),
        pos: 0,
        atoms: Vec::new(),
        bonds: Vec::new(),
        rings: BTreeMap::new(),
        branch_stack: Vec::new(),
        previous: None,
        pending_bond: None,
    };
    parser.run()?;
    let Parser { atoms, bonds, .. } = parser;
    let mut mol = Molecule::new(atoms, bonds, trimmed).map_err(|_| ParseError {
        position: trimmed.len(),
        kind: ParseErrorKind::DuplicateBond,
    })?;
    // a bond joining two aromatic rings is single, not aromatic
    let in_ring = mol.ring_bonds();
    let mut changed = false;
    for (bond, ring) in mol.bonds.iter_mut().zip(in_ring) {
        if bond.order == BondOrder::Aromatic && !ring {
            bond.order = BondOrder::Single;
            changed = true;
        }
    }
    if changed {
        mol = Molecule::new(mol.atoms, mol.bonds, trimmed).expect("bond orders do not affect invariants");
    }
    Ok(mol)
}

impl Parser<'_> {
    fn err<T>(&self, kind: ParseErrorKind) -> Result<T, ParseError> {
        Err(ParseError {
            position: self.pos,
            kind,
        })
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn run(&mut self) -> Result<(), ParseError> {
        while let Some(c) = self.peek() {
            match c {
                b'(' => {
                    let Some(prev) = self.previous else {
                        return self.err(ParseErrorKind::UnbalancedParenthesis);
                    };
                    if self.pending_bond.is_some() {
                        return self.err(ParseErrorKind::DanglingBondSymbol);
                    }
                    self.branch_stack.push(prev);
                    self.pos += 1;
                    if self.peek() == Some(b')') {
                        return self.err(ParseErrorKind::UnbalancedParenthesis);
                    }
                }
                b')' => {
                    if self.pending_bond.is_some() {
                        return self.err(ParseErrorKind::DanglingBondSymbol);
                    }
                    let Some(top) = self.branch_stack.pop() else {
                        return self.err(ParseErrorKind::UnbalancedParenthesis);
                    };
                    self.previous = Some(top);
                    self.pos += 1;
                }
                b'.' => {
                    if self.pending_bond.is_some() {
                        return self.err(ParseErrorKind::DanglingBondSymbol);
                    }
                    if self.previous.is_none() || !self.branch_stack.is_empty() {
                        return self.err(ParseErrorKind::UnexpectedCharacter('.'));
                    }
                    self.previous = None;
                    self.pos += 1;
                    match self.peek() {
                        Some(b'[') | Some(b'A'..=b'Z') | Some(b'a'..=b'z') => {}
                        _ => return self.err(ParseErrorKind::UnexpectedCharacter('.')),
                    }
                }
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' => {
                    if self.pending_bond.is_some() || self.previous.is_none() {
                        return self.err(ParseErrorKind::DanglingBondSymbol);
                    }
                    let token = match c {
                        b'-' => BondToken { order: BondOrder::Single, mark: None },
                        b'=' => BondToken { order: BondOrder::Double, mark: None },
                        b'#' => BondToken { order: BondOrder::Triple, mark: None },
                        b':' => BondToken { order: BondOrder::Aromatic, mark: None },
                        b'/' => BondToken { order: BondOrder::Single, mark: Some('/') },
                        _ => BondToken { order: BondOrder::Single, mark: Some('\\') },
                    };
                    self.pending_bond = Some((token, self.pos));
                    self.pos += 1;
                }
                b'0'..=b'9' | b'%' => self.ring_closure()?,
                b'[' => {
                    let atom = self.bracket_atom()?;
                    self.add_atom(atom)?;
                }
                b'A'..=b'Z' | b'a'..=b'z' => {
                    let atom = self.organic_atom()?;
                    self.add_atom(atom)?;
                }
                _ => {
                    let ch = self.text[self.pos..].chars().next().unwrap_or('?');
                    return self.err(ParseErrorKind::UnexpectedCharacter(ch));
                }
            }
        }
        if let Some((_, position)) = self.pending_bond {
            return Err(ParseError {
                position,
                kind: ParseErrorKind::DanglingBondSymbol,
            });
        }
        if !self.branch_stack.is_empty() {
            return self.err(ParseErrorKind::UnbalancedParenthesis);
        }
        if let Some((&digit, open)) = self.rings.iter().next() {
            return Err(ParseError {
                position: open.position,
                kind: ParseErrorKind::UnclosedRing(digit),
            });
        }
        Ok(())
    }

    fn add_atom(&mut self, atom: Atom) -> Result<(), ParseError> {
        let index = self.atoms.len();
        self.atoms.push(atom);
        if let Some(prev) = self.previous {
            let token = self.pending_bond.take().map(|(t, _)| t);
            let bond = self.make_bond(prev, index, token);
            self.bonds.push(bond);
        }
        self.previous = Some(index);
        Ok(())
    }

    fn make_bond(&self, a: usize, b: usize, token: Option<BondToken>) -> Bond {
        match token {
            Some(t) => Bond {
                a,
                b,
                order: t.order,
                stereo_mark: t.mark.map(String::from).unwrap_or_default(),
            },
            None => {
                let order = if self.atoms[a].aromatic && self.atoms[b].aromatic {
                    BondOrder::Aromatic
                } else {
                    BondOrder::Single
                };
                Bond::new(a, b, order)
            }
        }
    }

    fn ring_closure(&mut self) -> Result<(), ParseError> {
        let start = self.pos;
        let Some(current) = self.previous else {
            return self.err(ParseErrorKind::UnexpectedCharacter(self.bytes[self.pos] as char));
        };
        let digit = if self.bytes[self.pos] == b'%' {
            match (self.bytes.get(self.pos + 1), self.bytes.get(self.pos + 2)) {
                (Some(a @ b'0'..=b'9'), Some(b @ b'0'..=b'9')) => {
                    self.pos += 3;
                    (a - b'0') * 10 + (b - b'0')
                }
                _ => return self.err(ParseErrorKind::UnexpectedCharacter('%')),
            }
        } else {
            self.pos += 1;
            self.bytes[start] - b'0'
        };
        let token = self.pending_bond.take().map(|(t, _)| t);
        match self.rings.remove(&digit) {
            None => {
                self.rings.insert(
                    digit,
                    RingOpen {
                        atom: current,
                        bond: token,
                        position: start,
                    },
                );
            }
            Some(open) => {
                let token = match (open.bond, token) {
                    (Some(x), Some(y)) if x.order != y.order => {
                        return Err(ParseError {
                            position: start,
                            kind: ParseErrorKind::RingBondConflict(digit),
                        })
                    }
                    (Some(x), _) => Some(x),
                    (None, y) => y,
                };
                let exists = open.atom == current
                    || self.bonds.iter().any(|b| {
                        (b.a == open.atom && b.b == current) || (b.b == open.atom && b.a == current)
                    });
                if exists {
                    return Err(ParseError {
                        position: start,
                        kind: ParseErrorKind::DuplicateBond,
                    });
                }
                let bond = self.make_bond(open.atom, current, token);
                self.bonds.push(bond);
            }
        }
        Ok(())
    }

    fn organic_atom(&mut self) -> Result<Atom, ParseError> {
        let c = self.bytes[self.pos];
        let next = self.bytes.get(self.pos + 1).copied();
        let (z, aromatic, len) = match (c, next) {
            (b'C', Some(b'l')) => (17, false, 2),
            (b'B', Some(b'r')) => (35, false, 2),
            (b'B', _) => (5, false, 1),
            (b'C', _) => (6, false, 1),
            (b'N', _) => (7, false, 1),
            (b'O', _) => (8, false, 1),
            (b'P', _) => (15, false, 1),
            (b'S', _) => (16, false, 1),
            (b'F', _) => (9, false, 1),
            (b'I', _) => (53, false, 1),
            (b'b', _) => (5, true, 1),
            (b'c', _) => (6, true, 1),
            (b'n', _) => (7, true, 1),
            (b'o', _) => (8, true, 1),
            (b'p', _) => (15, true, 1),
            (b's', _) => (16, true, 1),
            _ => {
                let end = self.bytes[self.pos..]
                    .iter()
                    .take(2)
                    .take_while(|b| b.is_ascii_alphabetic())
                    .count();
                let sym = self.text[self.pos..self.pos + end.max(1)].to_string();
                return self.err(ParseErrorKind::UnknownElement(sym));
            }
        };
        self.pos += len;
        Ok(Atom::organic(z, aromatic))
    }

    fn read_number(&mut self) -> Option<u32> {
        let start = self.pos;
        let mut value: u32 = 0;
        while let Some(d @ b'0'..=b'9') = self.peek() {
            value = value.checked_mul(10)?.checked_add((d - b'0') as u32)?;
            self.pos += 1;
            if self.pos - start > 6 {
                return None;
            }
        }
        (self.pos > start).then_some(value)
    }

    fn bracket_atom(&mut self) -> Result<Atom, ParseError> {
        let open = self.pos;
        self.pos += 1;
        let malformed = |p: &Self, what: &'static str| -> Result<Atom, ParseError> {
            Err(ParseError {
                position: p.pos.max(open),
                kind: ParseErrorKind::MalformedBracketAtom(what),
            })
        };

        let isotope = match self.peek() {
            Some(b'0'..=b'9') => match self.read_number() {
                Some(v) if (1..=u16::MAX as u32).contains(&v) => Some(v as u16),
                _ => return malformed(self, "isotope out of range"),
            },
            _ => None,
        };

        // element symbol
        let rest = &self.bytes[self.pos..];
        let (z, aromatic, len) = match rest {
            [a @ b'A'..=b'Z', b @ b'a'..=b'z', ..]
                if element::atomic_number(&format!("{}{}", *a as char, *b as char)).is_some() =>
            {
                let sym = format!("{}{}", *a as char, *b as char);
                (element::atomic_number(&sym).unwrap(), false, 2)
            }
            [a @ b'A'..=b'Z', ..] => match element::atomic_number(&(*a as char).to_string()) {
                Some(z) => (z, false, 1),
                None => {
                    return self.err(ParseErrorKind::UnknownElement((*a as char).to_string()))
                }
            },
            [b's', b'e', ..] => (34, true, 2),
            [b'a', b's', ..] => (33, true, 2),
            [b't', b'e', ..] => (52, true, 2),
            [a @ b'a'..=b'z', ..] => {
                let sym = (*a as char).to_ascii_uppercase().to_string();
                match element::atomic_number(&sym) {
                    Some(z) if element::is_bracket_aromatic(z) => (z, true, 1),
                    _ => return self.err(ParseErrorKind::UnknownElement((*a as char).to_string())),
                }
            }
            [b'*', ..] => return self.err(ParseErrorKind::UnknownElement("*".into())),
            [] => return malformed(self, "unterminated bracket"),
            _ => return malformed(self, "missing element symbol"),
        };
        self.pos += len;

        let chirality = if self.peek() == Some(b'@') {
            let start = self.pos;
            self.pos += 1;
            if self.peek() == Some(b'@') {
                self.pos += 1;
            } else if matches!(self.peek(), Some(b'A'..=b'Z'))
                && matches!(self.bytes.get(self.pos + 1), Some(b'A'..=b'Z'))
            {
                self.pos += 2;
                if self.read_number().is_none() {
                    return malformed(self, "chirality class without a number");
                }
            }
            Some(self.text[start..self.pos].to_string())
        } else {
            None
        };

        let mut hydrogens = 0u8;
        if self.peek() == Some(b'H') {
            self.pos += 1;
            hydrogens = match self.peek() {
                Some(b'0'..=b'9') => {
                    let d = self.bytes[self.pos] - b'0';
                    self.pos += 1;
                    d
                }
                _ => 1,
            };
        }

        let mut charge: i32 = 0;
        if let Some(sign @ (b'+' | b'-')) = self.peek() {
            let unit = if sign == b'+' { 1 } else { -1 };
            self.pos += 1;
            if let Some(b'0'..=b'9') = self.peek() {
                match self.read_number() {
                    Some(v) if v <= 15 => charge = unit * v as i32,
                    _ => return malformed(self, "charge out of range"),
                }
            } else {
                charge = unit;
                while self.peek() == Some(sign) {
                    self.pos += 1;
                    charge += unit;
                    if charge.abs() > 15 {
                        return malformed(self, "charge out of range");
                    }
                }
            }
        }

        let atom_class = if self.peek() == Some(b':') {
            self.pos += 1;
            match self.read_number() {
                Some(v) => Some(v),
                None => return malformed(self, "atom class without a number"),
            }
        } else {
            None
        };

        if self.peek() != Some(b']') {
            return malformed(self, "unexpected content before ']'");
        }
        self.pos += 1;
        Ok(Atom {
            atomic_number: z,
            aromatic,
            formal_charge: charge as i8,
            explicit_h: Some(hydrogens),
            isotope,
            bracket: true,
            chirality,
            atom_class,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kind(text: &str) -> ParseErrorKind {
        parse(text).unwrap_err().kind
    }

    #[test]
    fn ethanol() {
        let m = parse("CCO").unwrap();
        let z: Vec<u8> = m.atoms().iter().map(|a| a.atomic_number).collect();
        assert_eq!(z, vec![6, 6, 8]);
        assert_eq!(m.bonds().len(), 2);
        assert!(m.bonds().iter().all(|b| b.order == BondOrder::Single));
    }

    #[test]
    fn benzene() {
        let m = parse("c1ccccc1").unwrap();
        assert_eq!(m.atom_count(), 6);
        assert!(m.atoms().iter().all(|a| a.aromatic && a.atomic_number == 6));
        assert_eq!(m.bonds().len(), 6);
        assert!(m.bonds().iter().all(|b| b.order == BondOrder::Aromatic));
    }

    #[test]
    fn branches_and_two_digit_rings() {
        let m = parse("CC(C)(C)C").unwrap();
        assert_eq!(m.degree(1), 4);
        let m = parse("C%10CCCC%10").unwrap();
        assert_eq!(m.bonds().len(), 5);
        let m = parse("C1CC1C2CC2").unwrap();
        assert_eq!(m.bonds().len(), 7);
        // ring digits are reusable once closed
        let m = parse("C1CC1C1CC1").unwrap();
        assert_eq!(m.bonds().len(), 7);
    }

    #[test]
    fn bracket_atoms() {
        let m = parse("[NH4+]").unwrap();
        let a = &m.atoms()[0];
        assert_eq!((a.atomic_number, a.formal_charge, a.explicit_h), (7, 1, Some(4)));
        let m = parse("[13CH3][O-]").unwrap();
        assert_eq!(m.atoms()[0].isotope, Some(13));
        assert_eq!(m.atoms()[1].formal_charge, -1);
        let m = parse("[Fe+++]").unwrap();
        assert_eq!(m.atoms()[0].formal_charge, 3);
        let m = parse("[C@@H](F)(Cl)Br").unwrap();
        assert_eq!(m.atoms()[0].chirality.as_deref(), Some("@@"));
        let m = parse("c1cc[nH]c1").unwrap();
        assert_eq!(m.hydrogen_count(3), 1);
        let m = parse("[se]1cccc1").unwrap();
        assert!(m.atoms()[0].aromatic);
        let m = parse("[CH3:7]C").unwrap();
        assert_eq!(m.atoms()[0].atom_class, Some(7));
        let m = parse("[Sc]").unwrap();
        assert_eq!(m.atoms()[0].atomic_number, 21);
    }

    #[test]
    fn stereo_bonds_are_kept() {
        let m = parse("F/C=C/F").unwrap();
        assert_eq!(m.bonds()[0].stereo_mark, "/");
        assert_eq!(m.bonds()[0].order, BondOrder::Single);
        assert_eq!(m.bonds()[1].order, BondOrder::Double);
    }

    #[test]
    fn aromatic_bond_rules() {
        let m = parse("c1ccccc1-c1ccccc1").unwrap();
        assert_eq!(m.bonds()[6].order, BondOrder::Single);
        let m = parse("c1ccccc1c1ccccc1").unwrap();
        assert_eq!(m.bonds()[6].order, BondOrder::Single);
        assert_eq!(m.bonds().iter().filter(|b| b.order == BondOrder::Aromatic).count(), 12);
        let m = parse("Cc1ccccc1").unwrap();
        assert_eq!(m.bonds()[0].order, BondOrder::Single);
        let m = parse("C=1CCCCC1").unwrap();
        assert_eq!(m.bonds().last().unwrap().order, BondOrder::Double);
        let m = parse("C1CCCCC=1").unwrap();
        assert_eq!(m.bonds().last().unwrap().order, BondOrder::Double);
    }

    #[test]
    fn components() {
        let m = parse("[Na+].[Cl-]").unwrap();
        assert_eq!(m.component_count(), 2);
        assert!(m.bonds().is_empty());
    }

    #[test]
    fn errors() {
        assert_eq!(kind("C1CC"), ParseErrorKind::UnclosedRing(1));
        assert_eq!(kind(""), ParseErrorKind::EmptyInput);
        assert_eq!(kind("   "), ParseErrorKind::EmptyInput);
        assert_eq!(kind("C(C"), ParseErrorKind::UnbalancedParenthesis);
        assert_eq!(kind("CC)"), ParseErrorKind::UnbalancedParenthesis);
        assert_eq!(kind("(C)"), ParseErrorKind::UnbalancedParenthesis);
        assert_eq!(kind("C()C"), ParseErrorKind::UnbalancedParenthesis);
        assert_eq!(kind("CX"), ParseErrorKind::UnknownElement("X".into()));
        assert_eq!(kind("[Xx]"), ParseErrorKind::UnknownElement("X".into()));
        assert!(matches!(kind("[C"), ParseErrorKind::MalformedBracketAtom(_)));
        assert!(matches!(kind("[CH4+"), ParseErrorKind::MalformedBracketAtom(_)));
        assert!(matches!(kind("[]"), ParseErrorKind::MalformedBracketAtom(_)));
        assert_eq!(kind("CC="), ParseErrorKind::DanglingBondSymbol);
        assert_eq!(kind("=CC"), ParseErrorKind::DanglingBondSymbol);
        assert_eq!(kind("C=(C)C"), ParseErrorKind::DanglingBondSymbol);
        assert_eq!(kind("C==C"), ParseErrorKind::DanglingBondSymbol);
        assert_eq!(kind("C-1CC=1"), ParseErrorKind::RingBondConflict(1));
        assert_eq!(kind("C11"), ParseErrorKind::DuplicateBond);
        assert_eq!(kind("C12CC12"), ParseErrorKind::DuplicateBond);
        assert_eq!(kind("C C"), ParseErrorKind::UnexpectedCharacter(' '));
        assert_eq!(kind(".C"), ParseErrorKind::UnexpectedCharacter('.'));
        assert_eq!(kind("C."), ParseErrorKind::UnexpectedCharacter('.'));
        assert_eq!(kind("Cé"), ParseErrorKind::UnexpectedCharacter('é'));
    }

}
