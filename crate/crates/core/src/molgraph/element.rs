//! Element symbols and the valence table used for validity checks.

const SYMBOLS: [&str; 118] = [
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S", "Cl",
    "Ar", "K", "Ca", "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As",
    "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In",
    "Sn", "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd", "Pm", "Sm", "Eu", "Gd", "Tb",
    "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl",
    "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U", "Np", "Pu", "Am", "Cm", "Bk",
    "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs", "Mt", "Ds", "Rg", "Cn", "Nh",
    "Fl", "Mc", "Lv", "Ts", "Og",
];

/// Atomic number for an element symbol with canonical capitalization.
pub fn atomic_number(symbol: &str) -> Option<u8> {
    SYMBOLS
        .iter()
        .position(|s| *s == symbol)
        .map(|i| (i + 1) as u8)
}

/// Element symbol for an atomic number in `1..=118`.
pub fn symbol(atomic_number: u8) -> Option<&'static str> {
    SYMBOLS.get((atomic_number as usize).checked_sub(1)?).copied()
}

/// Elements that may be written without brackets.
pub fn is_organic_subset(atomic_number: u8) -> bool {
    matches!(atomic_number, 5 | 6 | 7 | 8 | 9 | 15 | 16 | 17 | 35 | 53)
}

/// Elements that may carry a lowercase (aromatic) symbol outside brackets.
pub fn is_organic_aromatic(atomic_number: u8) -> bool {
    matches!(atomic_number, 5 | 6 | 7 | 8 | 15 | 16)
}

/// Elements that may carry a lowercase (aromatic) symbol inside brackets.
pub fn is_bracket_aromatic(atomic_number: u8) -> bool {
    is_organic_aromatic(atomic_number) || matches!(atomic_number, 33 | 34 | 52)
}

/// Allowed valences for the elements the validity check constrains.
///
/// Elements outside the table (metals, noble gases) are unconstrained.
pub fn standard_valences(atomic_number: u8) -> Option<&'static [u8]> {
    Some(match atomic_number {
        1 => &[1],
        5 => &[3],
        6 => &[4],
        7 => &[3, 5],
        8 => &[2],
        9 | 17 | 35 | 53 => &[1],
        15 => &[3, 5],
        16 => &[2, 4, 6],
        _ => return None,
    })
}

/// Valences for an atom after the formal-charge adjustment.
///
/// A charged atom takes the valences of its isoelectronic neighbour in the
/// periodic table (N+ behaves like C, O- like F, C- like N). Returns
/// `Some(&[])` when the element is constrained but the shifted element is not,
/// meaning the atom must carry no bonds at all (e.g. a bare halide anion).
pub fn charged_valences(atomic_number: u8, formal_charge: i8) -> Option<&'static [u8]> {
    let base = standard_valences(atomic_number)?;
    if formal_charge == 0 {
        return Some(base);
    }
    let shifted = atomic_number as i16 - formal_charge as i16;
    if !(1..=118).contains(&shifted) {
        return Some(&[]);
    }
    Some(standard_valences(shifted as u8).unwrap_or(&[]))
}
