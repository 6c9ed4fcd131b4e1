use std::collections::{BTreeSet, HashSet};

use molforge::molgraph::canonicalize;
use molforge::oracle::mock_vector;
use molforge::pairmine::{filter_pairs, mine_pairs, orient_pairs, MiningConfig, PairRecord, ScoredMolecule};
use molforge::propmodel::{parse_letters, Mode, PropertyId, PropertyVector, Registry, TaskSpec};
use molforge::synth;
use molforge::taskforge::{
    build_task, enumerate_tasks, median, percentile, split_train_val, SplitConfig, ValRounding,
};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// (letter, higher is better, minimum gain) written out independently of the
/// registry.
const TABLE: [(char, bool, f64); 6] = [
    ('B', true, 0.2),
    ('D', true, 0.2),
    ('H', true, 0.1),
    ('M', false, 0.1),
    ('P', true, 1.0),
    ('Q', true, 0.1),
];

fn recheck(task: &str, p: &PairRecord, strict: bool) -> bool {
    task.chars().all(|c| {
        let (_, up, delta) = TABLE.iter().find(|t| t.0 == c).copied().unwrap();
        let id = PropertyId::new(c).unwrap();
        let (x, y) = (p.vx.get(id).unwrap(), p.vy.get(id).unwrap());
        let gain = if up { y - x } else { x - y };
        if strict {
            gain >= delta - 1e-9
        } else {
            gain > 0.0
        }
    })
}

fn random_vector(rng: &mut ChaCha8Rng) -> PropertyVector {
    TABLE
        .iter()
        .map(|&(c, _, _)| {
            let v = if c == 'P' { rng.gen_range(-8.0..4.0) } else { rng.gen_range(0.0..1.0) };
            // coarse grid so exact-threshold gains occur
            (PropertyId::new(c).unwrap(), (v * 20.0_f64).round() / 20.0)
        })
        .collect()
}

#[test]
fn filter_matches_independent_recheck() {
    let reg = Registry::default();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let pairs: Vec<PairRecord> = (0..1000)
        .map(|i| PairRecord {
            mx: format!("x{i}"),
            my: format!("y{i}"),
            similarity: 0.7,
            vx: random_vector(&mut rng),
            vy: random_vector(&mut rng),
        })
        .collect();
    let mut nonempty = 0;
    for task in enumerate_tasks(&reg.ids(), 1).unwrap() {
        for (mode, strict) in [(Mode::Strict, true), (Mode::Loose, false)] {
            let got = filter_pairs(&pairs, &task, &reg, mode).unwrap();
            let want: Vec<PairRecord> = pairs.iter().filter(|p| recheck(&task.name, p, strict)).cloned().collect();
            assert_eq!(got, want, "{} {mode}", task.name);
            nonempty += usize::from(!got.is_empty());
        }
    }
    assert!(nonempty > 60);
}

fn scored_pool(seed: u64, n: usize) -> Vec<ScoredMolecule> {
    let props = parse_letters("BDHMPQ").unwrap();
    let mut seen = HashSet::new();
    synth::pool(seed, n)
        .into_iter()
        .filter_map(|s| {
            let c = canonicalize(&s).unwrap().text;
            seen.insert(c.clone()).then(|| ScoredMolecule { scores: mock_vector(&c, &props), smiles: c })
        })
        .collect()
}

#[test]
fn oriented_pairs_all_satisfy_the_task() {
    let reg = Registry::default();
    let pool = scored_pool(3, 400);
    let cands = mine_pairs(&pool, &MiningConfig::default()).unwrap();
    assert!(!cands.is_empty());
    for name in ["Q", "MPQ", "BDPQ"] {
        let task = TaskSpec::from_letters(name).unwrap();
        for (mode, strict) in [(Mode::Strict, true), (Mode::Loose, false)] {
            let pairs = orient_pairs(&cands, &task, &reg, mode).unwrap();
            assert!(pairs.iter().all(|p| recheck(name, p, strict) && p.mx != p.my && p.similarity > 0.6));
            let brute = cands
                .iter()
                .flat_map(|c| {
                    [(c.a.clone(), c.b.clone(), c.va.clone(), c.vb.clone()), (c.b.clone(), c.a.clone(), c.vb.clone(), c.va.clone())]
                })
                .filter(|(x, y, vx, vy)| {
                    x != y
                        && recheck(
                            name,
                            &PairRecord { mx: x.clone(), my: y.clone(), similarity: 0.0, vx: vx.clone(), vy: vy.clone() },
                            strict,
                        )
                })
                .map(|(x, y, _, _)| (x, y))
                .collect::<BTreeSet<_>>();
            let got: BTreeSet<_> = pairs.iter().map(|p| (p.mx.clone(), p.my.clone())).collect();
            assert_eq!(got.len(), pairs.len());
            assert_eq!(got, brute);
        }
    }
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

#[test]
fn test_set_contract_on_seeded_builds() {
    let reg = Registry::default();
    let pool = scored_pool(21, 1200);
    let cands = mine_pairs(&pool, &MiningConfig::default()).unwrap();
    let mut checked = 0;
    for seed in [1u64, 42, 777] {
        for name in ["BDP", "MPQ", "PQ", "HMPQ"] {
            let task = TaskSpec::from_letters(name).unwrap();
            let cfg = SplitConfig { seed, test_cap: 40, ..SplitConfig::default() };
            let b = match build_task(&task, &reg, &cands, &pool, Mode::Loose, &cfg) {
                Ok(b) => b,
                Err(e) => panic!("{name}: {e}"),
            };
            let train_mols: HashSet<&str> = b.train.iter().chain(&b.val).flat_map(|p| [p.mx.as_str(), p.my.as_str()]).collect();
            assert!(b.test.len() <= 40);
            let unique: HashSet<&String> = b.test.iter().collect();
            assert_eq!(unique.len(), b.test.len());
            for t in &b.test {
                assert!(!train_mols.contains(t.as_str()), "{name}: {t} is a training molecule");
                let m = pool.iter().find(|m| &m.smiles == t).unwrap();
                for &p in &task.properties {
                    let x = m.scores.get(p).unwrap();
                    let hits: Vec<f64> = b.train.iter().map(|r| r.vx.get(p).unwrap()).collect();
                    let mps = median(&hits).unwrap();
                    let up = reg.get(p).unwrap().higher_is_better;
                    assert!(if up { x < mps } else { x > mps }, "{name} {p}: {x} vs {mps}");
                    if p == PropertyId::PLOGP {
                        assert!(x >= percentile(&hits, 0.1).unwrap());
                    }
                }
            }
            assert_eq!(b.stats.n_test, b.test.len());
            assert_eq!(b.val.len(), cfg.val_size(b.train.len() + b.val.len()));
            checked += b.test.len();
        }
    }
    assert!(checked > 0);
}

#[test]
fn builds_are_reproducible() {
    let reg = Registry::default();
    let pool = scored_pool(8, 500);
    let cands = mine_pairs(&pool, &MiningConfig::default()).unwrap();
    let task = TaskSpec::from_letters("PQ").unwrap();
    let cfg = SplitConfig { test_cap: 10, ..SplitConfig::default() };
    let a = build_task(&task, &reg, &cands, &pool, Mode::Loose, &cfg).unwrap();
    let b = build_task(&task, &reg, &cands, &pool, Mode::Loose, &cfg).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #[test]
    fn enumeration_counts_subsets(n in 1usize..8, min in 1usize..8) {
        let props: Vec<PropertyId> = "ABCDEFGH".chars().take(n).map(|c| PropertyId::new(c).unwrap()).collect();
        match enumerate_tasks(&props, min) {
            Ok(tasks) => {
                let want: usize = (min..=n).map(|k| binomial(n, k)).sum();
                prop_assert_eq!(tasks.len(), want);
                prop_assert!(tasks.windows(2).all(|w| (w[0].properties.len(), &w[0].name) < (w[1].properties.len(), &w[1].name)));
            }
            Err(_) => prop_assert!(min > n),
        }
    }

    #[test]
    fn split_partitions_input(n in 0usize..300, frac in 0.0f64..0.9, seed in any::<u64>(), ceil in any::<bool>()) {
        let items: Vec<usize> = (0..n).collect();
        let cfg = SplitConfig {
            val_fraction: frac,
            val_rounding: if ceil { ValRounding::Ceil } else { ValRounding::Round },
            ..SplitConfig::default()
        };
        let (train, val) = split_train_val(&items, &cfg, seed);
        prop_assert_eq!(val.len(), cfg.val_size(n));
        let mut all: Vec<usize> = train.iter().chain(&val).copied().collect();
        all.sort();
        prop_assert_eq!(all, items);
        prop_assert!(train.windows(2).all(|w| w[0] < w[1]) && val.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn median_splits_values(mut v in proptest::collection::vec(-100.0f64..100.0, 1..50)) {
        let m = median(&v).unwrap();
        let below = v.iter().filter(|&&x| x < m).count();
        let above = v.iter().filter(|&&x| x > m).count();
        prop_assert!(below <= v.len() / 2 && above <= v.len() / 2);
        v.sort_by(f64::total_cmp);
        prop_assert!(percentile(&v, 0.1).unwrap() >= v[0] && percentile(&v, 0.1).unwrap() <= m);
    }
}
