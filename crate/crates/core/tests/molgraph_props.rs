use molforge::fingerprint::morgan;
use molforge::molgraph::{canonical_smiles, canonicalize, parse, validate};
use molforge::synth;
use proptest::prelude::*;

fn corpus() -> Vec<String> {
    synth::pool(11, 60)
}

fn permutation(n: usize, seed: u64) -> Vec<usize> {
    use rand::seq::SliceRandom;
    use rand_chacha::rand_core::SeedableRng;
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
    p
}

#[test]
fn equivalent_spellings_share_a_canonical_form() {
    let groups: &[&[&str]] = &[
        &["OCC", "CCO", "C(O)C", "[CH3][CH2][OH]"],
        &["c1ccccc1", "c1ccc(cc1)", "c:1:c:c:c:c:c1"],
        &["C1=CC=CC=C1", "C=1C=CC=CC1"],
        &["CC(=O)O", "OC(C)=O", "O=C(O)C"],
        &["c1ccncc1", "n1ccccc1"],
        &["C1CC1C", "CC1CC1"],
        &["[NH4+]", "[NH4+]"],
        &["Cc1ccccc1-c1ccccc1", "c1ccccc1c1ccccc1C"],
    ];
    for g in groups {
        let forms: Vec<String> = g.iter().map(|s| canonicalize(s).unwrap().text).collect();
        assert!(forms.windows(2).all(|w| w[0] == w[1]), "{g:?} -> {forms:?}");
    }
    assert_ne!(canonicalize("CCO").unwrap(), canonicalize("COC").unwrap());
    assert_ne!(canonicalize("c1ccccc1").unwrap(), canonicalize("C1CCCCC1").unwrap());
    // aromaticity is taken from the notation, so a Kekulé spelling stays distinct
    assert_ne!(canonicalize("c1ccccc1").unwrap(), canonicalize("C1=CC=CC=C1").unwrap());
}

#[test]
fn corpus_canonical_forms_are_valid_and_idempotent() {
    for s in corpus() {
        let c = canonicalize(&s).unwrap();
        let again = parse(c.as_str()).unwrap();
        assert!(validate(&again).valid, "{s} -> {c}");
        assert_eq!(canonical_smiles(&again), c, "{s}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parser_never_panics(s in "[CNOScnos()=#\\[\\]+\\-@123%Hl.Br/\\\\]{0,24}") {
        if let Ok(m) = parse(&s) {
            let _ = validate(&m);
            let _ = canonical_smiles(&m);
        }
    }

    #[test]
    fn canonical_form_ignores_atom_order(idx in 0usize..60, seed in any::<u64>()) {
        let s = &corpus()[idx];
        let mol = parse(s).unwrap();
        let want = canonical_smiles(&mol);
        let shuffled = mol.relabeled(&permutation(mol.atom_count(), seed));
        let written = shuffled.to_smiles();
        prop_assert_eq!(canonicalize(&written).unwrap(), want.clone(), "{} via {}", s, written);
        prop_assert_eq!(canonical_smiles(&shuffled), want);
    }

    #[test]
    fn fingerprint_ignores_atom_order(idx in 0usize..60, seed in any::<u64>()) {
        let mol = parse(&corpus()[idx]).unwrap();
        let shuffled = mol.relabeled(&permutation(mol.atom_count(), seed));
        prop_assert_eq!(morgan(&mol, 2, 2048).unwrap(), morgan(&shuffled, 2, 2048).unwrap());
    }
}
