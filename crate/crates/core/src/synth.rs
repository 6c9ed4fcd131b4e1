//! Seeded generator of drug-like SMILES arranged in families of close
//! analogues. Used for fixtures, benchmarks and the bundled corpus.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Ring systems as atom tokens; `true` marks positions that take a substituent.
const CORES: &[&[(&str, bool)]] = &[
    &[("c#", true), ("c", true), ("c", true), ("c", true), ("c", true), ("c#", true)],
    &[("c#", true), ("c", true), ("n", false), ("c", true), ("c", true), ("c#", true)],
    &[("c#", true), ("n", false), ("c", true), ("n", false), ("c", true), ("c#", true)],
    &[("C#", true), ("C", true), ("C", true), ("C", true), ("C", true), ("C#", true)],
    &[("C#", true), ("C", true), ("N", true), ("C", true), ("C#", true)],
    &[("C#", true), ("C", true), ("N", true), ("C", true), ("C", true), ("C#", true)],
    &[("C#", true), ("C", true), ("O", false), ("C", true), ("C", true), ("N#", true)],
    &[("c#", true), ("c", true), ("c", true), ("s", false), ("c#", true)],
    &[("c#", true), ("c", true), ("c", true), ("o", false), ("c#", true)],
    &[("c#", true), ("c", true), ("c", true), ("[nH]", false), ("c#", true)],
    &[("c#", true), ("c", true), ("n", false), ("o", false), ("c#", true)],
    &[("C#", true), ("C", true), ("C", true), ("C#", true)],
];

const SUBSTITUENTS: &[&str] = &[
    "C", "CC", "O", "N", "F", "Cl", "Br", "OC", "C(=O)O", "C(=O)N", "C#N", "N(C)C", "C(F)(F)F", "S(=O)(=O)N",
    "NC(=O)C", "CO", "C(C)C", "[N+](=O)[O-]", "OCC", "C(=O)OC",
];

const LINKERS: &[&str] = &["", "C", "CC", "O", "N", "C(=O)N", "NC(=O)", "S(=O)(=O)", "OC", "C(=O)"];

#[derive(Debug, Clone, PartialEq)]
struct Core {
    kind: usize,
    subs: Vec<Option<usize>>,
}

/// A molecule as up to three ring systems joined by linkers.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    cores: Vec<Core>,
    linkers: Vec<usize>,
}

impl Design {
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        let n = rng.gen_range(1..=3);
        let cores = (0..n)
            .map(|_| {
                let kind = rng.gen_range(0..CORES.len());
                let subs = CORES[kind].iter().map(|_| None).collect();
                let mut c = Core { kind, subs };
                for _ in 0..rng.gen_range(0..=2) {
                    c.put_random(rng);
                }
                c
            })
            .collect();
        let linkers = (1..n).map(|_| rng.gen_range(0..LINKERS.len())).collect();
        Design { cores, linkers }
    }

    /// A close analogue: one substituent added, removed or replaced.
    pub fn mutate<R: Rng>(&self, rng: &mut R) -> Self {
        let mut d = self.clone();
        let ci = rng.gen_range(0..d.cores.len());
        let core = &mut d.cores[ci];
        let filled: Vec<usize> = (0..core.subs.len()).filter(|&i| core.subs[i].is_some()).collect();
        match rng.gen_range(0..3) {
            0 if !filled.is_empty() => core.subs[*filled.choose(rng).expect("non-empty")] = None,
            1 if !filled.is_empty() => {
                core.subs[*filled.choose(rng).expect("non-empty")] = Some(rng.gen_range(0..SUBSTITUENTS.len()))
            }
            _ => core.put_random(rng),
        }
        d
    }

    pub fn to_smiles(&self) -> String {
        let mut s = String::new();
        for (ci, core) in self.cores.iter().enumerate() {
            if ci > 0 {
                s.push_str(LINKERS[self.linkers[ci - 1]]);
            }
            let digit = (b'1' + ci as u8) as char;
            // attach the next ring at the last free position
            let attach = CORES[core.kind].len() - 1;
            for (pos, &(tok, _)) in CORES[core.kind].iter().enumerate() {
                s.push_str(&tok.replace('#', &digit.to_string()));
                if let Some(sub) = core.subs[pos] {
                    let linked = (pos == attach && ci + 1 < self.cores.len()) || (pos == 0 && ci > 0);
                    if !linked {
                        s.push('(');
                        s.push_str(SUBSTITUENTS[sub]);
                        s.push(')');
                    }
                }
            }
        }
        s
    }
}

impl Core {
    fn put_random<R: Rng>(&mut self, rng: &mut R) {
        let open: Vec<usize> = CORES[self.kind]
            .iter()
            .enumerate()
            .filter(|&(i, &(_, ok))| ok && self.subs[i].is_none())
            .map(|(i, _)| i)
            .collect();
        if let Some(&pos) = open.choose(rng) {
            self.subs[pos] = Some(rng.gen_range(0..SUBSTITUENTS.len()));
        }
    }
}

/// `families` groups of `family_size` analogues each, as SMILES in
/// generation order. Deterministic for a given seed.
pub fn families(seed: u64, families: usize, family_size: usize) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(families * family_size);
    for _ in 0..families {
        let base = Design::random(&mut rng);
        let mut cur = base.clone();
        out.push(base.to_smiles());
        for _ in 1..family_size {
            cur = if rng.gen_bool(0.5) { base.mutate(&mut rng) } else { cur.mutate(&mut rng) };
            out.push(cur.to_smiles());
        }
    }
    out
}

/// A shuffled pool of `n` molecules drawn from families of about eight.
pub fn pool(seed: u64, n: usize) -> Vec<String> {
    let mut v = families(seed, n.div_ceil(8), 8);
    v.truncate(n);
    v.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x5eed));
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::{parse, validate};

    #[test]
    fn generated_molecules_parse_and_validate() {
        for s in families(7, 60, 6) {
            let m = parse(&s).unwrap_or_else(|e| panic!("{s}: {e}"));
            assert!(validate(&m).valid, "{s}");
        }
    }

    #[test]
    fn deterministic() {
        assert_eq!(pool(3, 50), pool(3, 50));
        assert_ne!(pool(3, 50), pool(4, 50));
        assert_eq!(pool(3, 50).len(), 50);
    }
}
