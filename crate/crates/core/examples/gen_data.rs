//! Regenerates the bundled data under `data/`:
//!
//! ```text
//! cargo run -p molforge-core --example gen_data -- data
//! ```
//!
//! * `corpus_1k.smi`: 1,000 unique synthetic molecules.
//! * `eval/`: a 100-case MPQ generation fixture with hand-set M, P, Q and S
//!   scores, plus a training-molecule list for novelty.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use molforge::evalengine::GenerationRecord;
use molforge::molgraph::canonicalize;
use molforge::synth;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn unique(seed: u64, draw: usize, keep: usize) -> Vec<String> {
    let mut seen = HashSet::new();
    let out: Vec<String> = synth::pool(seed, draw)
        .into_iter()
        .map(|s| canonicalize(&s).expect("synthetic SMILES parse").text)
        .filter(|c| seen.insert(c.clone()))
        .take(keep)
        .collect();
    assert_eq!(out.len(), keep, "synthetic pool too small");
    out
}

fn corpus(dir: &Path) -> std::io::Result<()> {
    let mut text = String::from("# synthetic drug-like pool, seed 42\n");
    for c in unique(42, 1600, 1000) {
        writeln!(text, "{c}").unwrap();
    }
    std::fs::write(dir.join("corpus_1k.smi"), text)
}

fn eval_fixture(dir: &Path) -> std::io::Result<()> {
    let dir = dir.join("eval");
    std::fs::create_dir_all(&dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mols = unique(7, 600, 400);
    let mut table = String::from("smiles\tM\tP\tQ\tS\n");
    for m in &mols {
        // tenths and quarters keep gains exact-ish; zero is avoided so RI stays finite
        let mutag = rng.gen_range(1..=9) as f64 / 10.0;
        let logp = [-1.0, 1.0].choose(&mut rng).unwrap() * rng.gen_range(1..=24) as f64 / 4.0;
        let qed = rng.gen_range(1..=9) as f64 / 10.0;
        let sas = (rng.gen_range(1.0..10.0f64) * 100.0).round() / 100.0;
        writeln!(table, "{m}\t{mutag}\t{logp}\t{qed}\t{sas}").unwrap();
    }
    std::fs::write(dir.join("scores.tsv"), table)?;

    let mut lines = String::new();
    for input in &mols[..100] {
        let k = rng.gen_range(0..=20);
        let mut candidates: Vec<String> = (0..k).map(|_| mols.choose(&mut rng).unwrap().clone()).collect();
        if rng.gen_bool(0.3) {
            candidates.push("C1CC(".into());
        }
        if rng.gen_bool(0.2) {
            candidates.push("C(C)(C)(C)(C)C".into());
        }
        if rng.gen_bool(0.1) {
            candidates.clear();
        }
        let rec = GenerationRecord {
            task: "MPQ".into(),
            input: input.clone(),
            candidates,
        };
        lines.push_str(&serde_json::to_string(&rec).unwrap());
        lines.push('\n');
    }
    std::fs::write(dir.join("generations.jsonl"), lines)?;

    let train: String = mols.iter().step_by(3).map(|m| format!("{m}\n")).collect();
    std::fs::write(dir.join("train_mols.smi"), train)
}

fn main() -> std::io::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data".into()));
    std::fs::create_dir_all(&dir)?;
    corpus(&dir)?;
    eval_fixture(&dir)
}
