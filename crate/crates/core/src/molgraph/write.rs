//! Depth-first SMILES emission from an atom ordering.

use super::element;
use super::{hydrogen_count, Atom, BondOrder, Molecule};

enum Event {
    Atom(usize, Option<usize>),
    OpenBranch,
    CloseBranch,
}

/// Ring-closure labels in the order they are handed out.
fn ring_label(slot: usize) -> String {
    match slot {
        0..=8 => ((b'1' + slot as u8) as char).to_string(),
        9..=98 => format!("%{}", slot + 1),
        99 => "0".to_string(),
        100..=109 => format!("%0{}", slot - 100),
        _ => panic!("more than 110 simultaneously open rings"),
    }
}

/// Write `mol` as SMILES, visiting atoms in increasing `order` (ties by index).
///
/// With `faithful` set, bracket atoms, chirality, atom classes and bond
/// direction marks are reproduced as parsed. Otherwise atoms are written in
/// normalized form and stereo tokens are dropped.
pub(crate) fn write_smiles(mol: &Molecule, order: &[u32], faithful: bool) -> String {
    let n = mol.atom_count();
    let by_key = |a: &usize, b: &usize| (order[*a], *a).cmp(&(order[*b], *b));

    let mut sorted_neighbors: Vec<Vec<(usize, usize)>> = (0..n)
        .map(|u| {
            let mut v = mol.neighbors(u).to_vec();
            v.sort_by(|x, y| by_key(&x.0, &y.0));
            v
        })
        .collect();

    let mut visited = vec![false; n];
    let mut bond_used = vec![false; mol.bonds().len()];
    let mut children: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut ring_opens: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut ring_closes: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut roots = Vec::new();

    let mut atom_order: Vec<usize> = (0..n).collect();
    atom_order.sort_by(by_key);
    for &root in &atom_order {
        if visited[root] {
            continue;
        }
        roots.push(root);
        visited[root] = true;
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        while let Some(&mut (u, ref mut slot)) = stack.last_mut() {
            let Some(&(v, k)) = sorted_neighbors[u].get(*slot) else {
                stack.pop();
                continue;
            };
            *slot += 1;
            if bond_used[k] {
                continue;
            }
            bond_used[k] = true;
            if visited[v] {
                ring_opens[v].push(k);
                ring_closes[u].push(k);
            } else {
                visited[v] = true;
                children[u].push((v, k));
                stack.push((v, 0));
            }
        }
    }
    sorted_neighbors.clear();

    let mut out = String::with_capacity(n * 3);
    let mut labels_in_use: Vec<bool> = Vec::new();
    let mut bond_label: Vec<Option<usize>> = vec![None; mol.bonds().len()];

    for (ci, &root) in roots.iter().enumerate() {
        if ci > 0 {
            out.push('.');
        }
        let mut events = vec![Event::Atom(root, None)];
        while let Some(event) = events.pop() {
            match event {
                Event::OpenBranch => out.push('('),
                Event::CloseBranch => out.push(')'),
                Event::Atom(u, via) => {
                    if let Some(k) = via {
                        out.push_str(&bond_symbol(mol, k, faithful));
                    }
                    write_atom(&mut out, mol, u, faithful);
                    let mut freed = Vec::new();
                    for &k in &ring_closes[u] {
                        let slot = bond_label[k].take().expect("ring opened before closing");
                        out.push_str(&ring_label(slot));
                        freed.push(slot);
                    }
                    for &k in &ring_opens[u] {
                        let slot = match labels_in_use.iter().position(|used| !used) {
                            Some(s) => s,
                            None => {
                                labels_in_use.push(false);
                                labels_in_use.len() - 1
                            }
                        };
                        labels_in_use[slot] = true;
                        bond_label[k] = Some(slot);
                        out.push_str(&bond_symbol(mol, k, faithful));
                        out.push_str(&ring_label(slot));
                    }
                    for slot in freed {
                        labels_in_use[slot] = false;
                    }
                    let kids = &children[u];
                    if let Some((&(last, lk), rest)) = kids.split_last() {
                        events.push(Event::Atom(last, Some(lk)));
                        for &(c, k) in rest.iter().rev() {
                            events.push(Event::CloseBranch);
                            events.push(Event::Atom(c, Some(k)));
                            events.push(Event::OpenBranch);
                        }
                    }
                }
            }
        }
    }
    out
}

fn bond_symbol(mol: &Molecule, k: usize, faithful: bool) -> String {
    let bond = &mol.bonds()[k];
    if faithful && !bond.stereo_mark.is_empty() {
        return bond.stereo_mark.clone();
    }
    let both_aromatic = mol.atoms()[bond.a].aromatic && mol.atoms()[bond.b].aromatic;
    match bond.order {
        BondOrder::Single if both_aromatic => "-",
        BondOrder::Single => "",
        BondOrder::Double => "=",
        BondOrder::Triple => "#",
        BondOrder::Aromatic if both_aromatic => "",
        BondOrder::Aromatic => ":",
    }
    .to_string()
}

fn written_symbol(atom: &Atom) -> String {
    let sym = element::symbol(atom.atomic_number).unwrap_or("*");
    if atom.aromatic {
        sym.to_ascii_lowercase()
    } else {
        sym.to_string()
    }
}

fn write_atom(out: &mut String, mol: &Molecule, u: usize, faithful: bool) {
    let atom = &mol.atoms()[u];
    let organic_ok = atom.isotope.is_none()
        && atom.formal_charge == 0
        && element::is_organic_subset(atom.atomic_number)
        && (!atom.aromatic || element::is_organic_aromatic(atom.atomic_number));
    let use_organic = if faithful {
        !atom.bracket
    } else {
        organic_ok
            && mol.hydrogen_count(u)
                == hydrogen_count(
                    &Atom::organic(atom.atomic_number, atom.aromatic),
                    mol.bond_order_sum(u),
                )
    };
    if use_organic {
        out.push_str(&written_symbol(atom));
        return;
    }
    out.push('[');
    if let Some(iso) = atom.isotope {
        out.push_str(&iso.to_string());
    }
    out.push_str(&written_symbol(atom));
    if faithful {
        if let Some(ch) = &atom.chirality {
            out.push_str(ch);
        }
    }
    match mol.hydrogen_count(u) {
        0 => {}
        1 => out.push('H'),
        h => {
            out.push('H');
            out.push_str(&h.to_string());
        }
    }
    match atom.formal_charge {
        0 => {}
        1 => out.push('+'),
        -1 => out.push('-'),
        c if c > 0 => out.push_str(&format!("+{c}")),
        c => out.push_str(&format!("-{}", -(c as i16))),
    }
    if faithful {
        if let Some(class) = atom.atom_class {
            out.push_str(&format!(":{class}"));
        }
    }
    out.push(']');
}

#[cfg(test)]
mod tests {
    use super::super::parse;

    #[test]
    fn faithful_round_trip_keeps_stereo() {
        for s in ["F/C=C/F", "[C@@H](F)(Cl)Br", "[13CH3:2]O", "c1ccccc1", "CC(=O)O.[Na+]"] {
            let m = parse(s).unwrap();
            assert_eq!(m.to_smiles(), s);
        }
    }

    #[test]
    fn ring_labels_are_reused() {
        let m = parse("C1CC1C2CC2").unwrap();
        assert_eq!(m.to_smiles(), "C1CC1C1CC1");
    }

    #[test]
    fn label_sequence() {
        use super::ring_label;
        assert_eq!(ring_label(0), "1");
        assert_eq!(ring_label(8), "9");
        assert_eq!(ring_label(9), "%10");
        assert_eq!(ring_label(98), "%99");
        assert_eq!(ring_label(99), "0");
        assert_eq!(ring_label(100), "%00");
        assert_eq!(ring_label(109), "%09");
    }
}
