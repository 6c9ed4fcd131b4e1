use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use molforge::evalengine::{aggregate, evaluate_cases, CaseResult, EvalConfig, GenerationRecord, ReportFormat};
use molforge::fingerprint::{self, cache, morgan, pairwise_similar, tanimoto};
use molforge::molgraph::{canonicalize, parse, validate};
use molforge::oracle::{Oracle, ScoreTable};
use molforge::pairmine::{
    complete_pairs, filter_pairs, mine_pairs, read_jsonl, read_pair_table, write_jsonl, CandidatePair, PairRecord,
    ScoredMolecule,
};
use molforge::prompts::{
    self, render_eval_prompt, render_eval_record, render_training_example, training_corpus, NameSet, NameVariant,
    PromptRecord, PromptStyle,
};
use molforge::propmodel::{letters, parse_letters, PropertyId, PropertyVector, Registry, TaskSpec};
use molforge::taskforge::{
    build_splits, build_testset, enumerate_tasks, pair_molecules, task_stats, test_reference, TaskStats,
    TestReference,
};
use rand::seq::index;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::io::{open_in, read_to_string, smiles_lines, Output, Provenance};
use crate::Reporter;

pub const TASK_MANIFEST: &str = "task.json";

fn oracle(cfg: &PipelineConfig) -> Result<Oracle> {
    let Some(o) = &cfg.oracle else {
        bail!("no oracle configured (use --scores, --mock or --scorer)");
    };
    Ok(Oracle::from_config(o)?)
}

fn oracle_input(prov: &mut Provenance, cfg: &PipelineConfig) -> Result<()> {
    if let Some(molforge::oracle::OracleConfig {
        backend: molforge::oracle::BackendConfig::Table { path },
        ..
    }) = &cfg.oracle
    {
        prov.input(path)?;
    }
    Ok(())
}

pub fn canon(input: &Path, out: &Path, cfg: &PipelineConfig, rep: &Reporter) -> Result<bool> {
    let mut prov = Provenance::new("canon", cfg);
    prov.input(input)?;
    let mut w = Output::create(out)?;
    let mut clean = true;
    for item in smiles_lines(open_in(input)?) {
        let (line, s) = item?;
        match canonicalize(&s) {
            Ok(c) => writeln!(w, "{c}")?,
            Err(e) => {
                clean = false;
                rep.item(line, &s, &e.to_string());
            }
        }
    }
    w.finish(&prov)?;
    Ok(clean)
}

pub fn validate_cmd(input: &Path, out: &Path, cfg: &PipelineConfig) -> Result<()> {
    let mut prov = Provenance::new("validate", cfg);
    prov.input(input)?;
    let mut w = Output::create(out)?;
    writeln!(w, "smiles\tvalid\tdetail")?;
    for item in smiles_lines(open_in(input)?) {
        let (_, s) = item?;
        match parse(&s) {
            Err(e) => writeln!(w, "{s}\tfalse\t{e}")?,
            Ok(m) => {
                let v = validate(&m);
                let detail: Vec<String> = v.violations.iter().map(|x| x.to_string()).collect();
                writeln!(w, "{s}\t{}\t{}", v.valid, detail.join("; "))?;
            }
        }
    }
    w.finish(&prov)
}

pub fn fp(input: &Path, out: &Path, cfg: &PipelineConfig, rep: &Reporter) -> Result<bool> {
    let mut prov = Provenance::new("fp", cfg);
    prov.input(input)?;
    let mut mols = Vec::new();
    let mut clean = true;
    for item in smiles_lines(open_in(input)?) {
        let (line, s) = item?;
        match parse(&s) {
            Ok(m) => mols.push(m),
            Err(e) => {
                clean = false;
                rep.item(line, &s, &e.to_string());
            }
        }
    }
    let entries = cache::build(&mols, cfg.mining.radius, cfg.mining.width)?;
    let mut w = Output::create(out)?;
    cache::write(&mut w, cfg.mining.radius, cfg.mining.width, &entries)?;
    w.finish(&prov)?;
    Ok(clean)
}

pub fn sim(pair: &[String], input: Option<&Path>, threshold: Option<f64>, out: &Path, cfg: &PipelineConfig) -> Result<()> {
    let (r, wd) = (cfg.mining.radius, cfg.mining.width);
    let fp_of = |s: &str| -> Result<fingerprint::Fingerprint> {
        let m = parse(s).with_context(|| format!("parsing {s:?}"))?;
        Ok(morgan(&m, r, wd)?)
    };
    let mut prov = Provenance::new("sim", cfg);
    let mut w = Output::create(out)?;
    match (pair, input) {
        ([a, b], None) => writeln!(w, "{:.6}", tanimoto(&fp_of(a)?, &fp_of(b)?)?)?,
        ([], Some(path)) => {
            prov.input(path)?;
            let mut smiles = Vec::new();
            for item in smiles_lines(open_in(path)?) {
                smiles.push(item?.1);
            }
            let fps: Vec<_> = smiles.iter().map(|s| fp_of(s)).collect::<Result<_>>()?;
            writeln!(w, "i\tj\tsmiles_i\tsmiles_j\tsimilarity")?;
            for p in pairwise_similar(&fps, threshold.unwrap_or(cfg.mining.threshold))? {
                writeln!(w, "{}\t{}\t{}\t{}\t{:.6}", p.i, p.j, smiles[p.i], smiles[p.j], p.similarity)?;
            }
        }
        _ => return Err(crate::usage("give either two SMILES or --input")),
    }
    w.finish(&prov)
}

pub fn score(input: &Path, props: &str, out: &Path, cfg: &PipelineConfig, rep: &Reporter) -> Result<bool> {
    let props = parse_letters(props)?;
    let oracle = oracle(cfg)?;
    oracle.require(&props)?;
    let mut prov = Provenance::new("score", cfg);
    prov.input(input)?;
    oracle_input(&mut prov, cfg)?;
    let items: Vec<(usize, String)> = smiles_lines(open_in(input)?).collect::<Result<_>>()?;
    let smiles: Vec<&str> = items.iter().map(|(_, s)| s.as_str()).collect();
    let scored = oracle.score_batch(&smiles, &props)?;
    let mut table = ScoreTable::new(props);
    let mut clean = true;
    for ((line, s), r) in items.iter().zip(scored) {
        match r {
            Ok(v) => table.insert(canonicalize(s)?.text, v)?,
            Err(e) => {
                clean = false;
                rep.item(*line, s, &e.to_string());
            }
        }
    }
    let mut w = Output::create(out)?;
    w.note(serde_json::json!({ "oracle": oracle.identity() }));
    table.write(&mut w)?;
    w.finish(&prov)?;
    Ok(clean)
}

fn load_pool(path: &Path) -> Result<Vec<ScoredMolecule>> {
    let table = ScoreTable::read(open_in(path)?).with_context(|| format!("reading score table {}", path.display()))?;
    Ok(table
        .iter()
        .map(|(s, v)| ScoredMolecule {
            smiles: s.to_string(),
            scores: v.clone(),
        })
        .collect())
}

pub fn mine(pool: &Path, out: &Path, cfg: &PipelineConfig) -> Result<()> {
    let mut prov = Provenance::new("mine-pairs", cfg);
    prov.input(pool)?;
    let pool = load_pool(pool)?;
    let cands = mine_pairs(&pool, &cfg.mining)?;
    let mut w = Output::create(out)?;
    w.note(serde_json::json!({ "pool": pool.len(), "pairs": cands.len() }));
    write_jsonl(&cands, &mut w)?;
    w.finish(&prov)
}

fn looks_like_jsonl(path: &Path, text: &str) -> bool {
    path.extension().is_some_and(|e| e == "jsonl") || text.trim_start().starts_with('{')
}

pub fn filter(pairs: &Path, task: &str, out: &Path, cfg: &PipelineConfig, rep: &Reporter) -> Result<bool> {
    let registry = cfg.registry()?;
    let task = TaskSpec::from_letters(task)?;
    let mut prov = Provenance::new("filter-pairs", cfg);
    prov.input(pairs)?;
    let text = read_to_string(pairs)?;
    let mut clean = true;
    let records: Vec<PairRecord> = if looks_like_jsonl(pairs, &text) {
        read_jsonl(text.as_bytes())?
    } else {
        let rows = read_pair_table(text.as_bytes())?;
        let oracle = if rows.iter().any(|r| r.vx.is_none()) {
            oracle_input(&mut prov, cfg)?;
            Some(oracle(cfg)?)
        } else {
            None
        };
        let (recs, skipped) = complete_pairs(&rows, &task.properties, oracle.as_ref(), &cfg.mining)?;
        for (line, reason) in skipped {
            clean = false;
            rep.item(line, "", &reason);
        }
        recs
    };
    let kept = filter_pairs(&records, &task, &registry, cfg.mode)?;
    let mut w = Output::create(out)?;
    w.note(serde_json::json!({ "task": task.name, "mode": cfg.mode, "input_pairs": records.len(), "kept": kept.len() }));
    write_jsonl(&kept, &mut w)?;
    w.finish(&prov)?;
    Ok(clean)
}

/// Per-task summary written next to the task's split files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskManifest {
    pub name: String,
    pub properties: String,
    pub category: String,
    pub split: String,
    pub deltas: BTreeMap<PropertyId, f64>,
    pub mode: String,
    pub seed: u64,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: Option<usize>,
    pub n_unique_mols: usize,
    pub mps_train: Option<PropertyVector>,
    pub aps_test: Option<PropertyVector>,
    pub test_reference: Option<TestReference>,
    pub files: BTreeMap<String, String>,
}

fn write_manifest(dir: &Path, m: &TaskManifest) -> Result<()> {
    let mut text = serde_json::to_string_pretty(m)?;
    text.push('\n');
    let path = dir.join(TASK_MANIFEST);
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_manifest(dir: &Path) -> Result<TaskManifest> {
    let path = dir.join(TASK_MANIFEST);
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn selected_tasks(cfg: &PipelineConfig, registry: &Registry) -> Result<Vec<TaskSpec>> {
    match &cfg.tasks {
        Some(names) => names.iter().map(|n| Ok(TaskSpec::from_letters(n)?)).collect(),
        None => Ok(enumerate_tasks(&registry.ids(), cfg.min_props)?),
    }
}

fn write_split(dir: &Path, name: &str, rows: &[impl Serialize], prov: &Provenance) -> Result<()> {
    let mut w = Output::create(&dir.join(name))?;
    write_jsonl(rows, &mut w)?;
    w.finish(prov)
}

/// Shared inputs for writing test sets.
struct TestInputs<'a> {
    registry: &'a Registry,
    pool: &'a [ScoredMolecule],
    cfg: &'a PipelineConfig,
    prov: &'a Provenance<'a>,
}

fn attach_test(
    dir: &Path,
    m: &mut TaskManifest,
    task: &TaskSpec,
    train: &[PairRecord],
    val: &[PairRecord],
    env: &TestInputs,
) -> Result<()> {
    let TestInputs { registry, pool, cfg, prov } = *env;
    let split = cfg.split();
    let reference = test_reference(task, registry, train, &split)?;
    let test = build_testset(task, registry, pool, &pair_molecules(train, val), &reference, &split, m.seed)?;
    let by: BTreeMap<&str, &ScoredMolecule> = pool.iter().map(|p| (p.smiles.as_str(), p)).collect();
    let rows: Vec<ScoredMolecule> = test.iter().map(|s| by[s.as_str()].clone()).collect();
    write_split(dir, "test.jsonl", &rows, prov)?;
    let stats = task_stats(task, train, val, &rows)?;
    m.n_test = Some(rows.len());
    m.aps_test = stats.aps_test;
    m.test_reference = Some(reference);
    m.files.insert("test".into(), "test.jsonl".into());
    Ok(())
}

pub fn build_tasks(candidates: &Path, pool: Option<&Path>, out_dir: &Path, cfg: &PipelineConfig) -> Result<usize> {
    let registry = cfg.registry()?;
    let tasks = selected_tasks(cfg, &registry)?;
    let mut prov = Provenance::new("build-tasks", cfg);
    prov.input(candidates)?;
    let cands: Vec<CandidatePair> = read_jsonl(open_in(candidates)?)?;
    let pool = match pool {
        Some(p) => {
            prov.input(p)?;
            Some(load_pool(p)?)
        }
        None => None,
    };
    let split = cfg.split();
    let built = molforge::exec::map_ordered(&tasks, |t| build_splits(t, &registry, &cands, cfg.mode, &split));
    for (task, res) in tasks.iter().zip(built) {
        let (train, val) = res?;
        let dir = out_dir.join(&task.name);
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        write_split(&dir, "train.jsonl", &train, &prov)?;
        write_split(&dir, "val.jsonl", &val, &prov)?;
        let mut m = TaskManifest {
            name: task.name.clone(),
            properties: letters(&task.properties),
            category: format!("{:?}", task.category),
            split: serde_json::to_value(task.split)?.as_str().unwrap_or_default().to_string(),
            deltas: task
                .properties
                .iter()
                .map(|&p| Ok((p, registry.get(p)?.delta)))
                .collect::<Result<_>>()?,
            mode: cfg.mode.to_string(),
            seed: split.task_seed(task),
            n_train: train.len(),
            n_val: val.len(),
            n_test: None,
            n_unique_mols: pair_molecules(&train, &val).len(),
            mps_train: (!train.is_empty())
                .then(|| molforge::taskforge::training_medians(task, &train))
                .transpose()?,
            aps_test: None,
            test_reference: None,
            files: [("train", "train.jsonl"), ("val", "val.jsonl")]
                .into_iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
        };
        if let (Some(pool), false) = (&pool, train.is_empty()) {
            let env = TestInputs { registry: &registry, pool, cfg, prov: &prov };
            attach_test(&dir, &mut m, task, &train, &val, &env)?;
        }
        write_manifest(&dir, &m)?;
    }
    Ok(tasks.len())
}

fn task_dirs(root: &Path) -> Result<Vec<PathBuf>> {
    if root.join(TASK_MANIFEST).exists() {
        return Ok(vec![root.to_path_buf()]);
    }
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(root)
        .with_context(|| format!("listing {}", root.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(TASK_MANIFEST).exists())
        .collect();
    let registry_order = |p: &PathBuf| {
        let n = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        (n.len(), n)
    };
    dirs.sort_by_key(registry_order);
    Ok(dirs)
}

fn load_split<T: for<'de> Deserialize<'de>>(dir: &Path, name: &str) -> Result<Vec<T>> {
    let p = dir.join(name);
    if !p.exists() {
        return Ok(Vec::new());
    }
    read_jsonl(open_in(&p)?).with_context(|| format!("reading {}", p.display()))
}

pub fn build_testset_cmd(task_dir: &Path, pool: &Path, cfg: &PipelineConfig) -> Result<()> {
    let registry = cfg.registry()?;
    let mut prov = Provenance::new("build-testset", cfg);
    prov.input(pool)?;
    let pool = load_pool(pool)?;
    for dir in task_dirs(task_dir)? {
        let mut m = read_manifest(&dir)?;
        let task = TaskSpec::from_letters(&m.properties)?;
        let train: Vec<PairRecord> = load_split(&dir, "train.jsonl")?;
        let val: Vec<PairRecord> = load_split(&dir, "val.jsonl")?;
        if train.is_empty() {
            continue;
        }
        let env = TestInputs { registry: &registry, pool: &pool, cfg, prov: &prov };
        attach_test(&dir, &mut m, &task, &train, &val, &env)?;
        write_manifest(&dir, &m)?;
    }
    Ok(())
}

pub fn stats(root: &Path, out: &Path, cfg: &PipelineConfig) -> Result<()> {
    let prov = Provenance::new("stats", cfg);
    let mut rows: Vec<TaskStats> = Vec::new();
    let mut letters_seen = std::collections::BTreeSet::new();
    for dir in task_dirs(root)? {
        let m = read_manifest(&dir)?;
        let task = TaskSpec::from_letters(&m.properties)?;
        let train: Vec<PairRecord> = load_split(&dir, "train.jsonl")?;
        if train.is_empty() {
            continue;
        }
        let val: Vec<PairRecord> = load_split(&dir, "val.jsonl")?;
        let test: Vec<ScoredMolecule> = load_split(&dir, "test.jsonl")?;
        letters_seen.extend(task.properties.iter().copied());
        rows.push(task_stats(&task, &train, &val, &test)?);
    }
    let cell = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.2}"));
    let mut w = Output::create(out)?;
    let mut header = vec!["task".to_string(), "train".into(), "val".into(), "test".into(), "mols".into()];
    for prefix in ["MPS_train", "APS_test", "change"] {
        header.extend(letters_seen.iter().map(|p| format!("{prefix}_{p}")));
    }
    writeln!(w, "{}", header.join("\t"))?;
    for s in &rows {
        let mut row = vec![
            s.task.clone(),
            s.n_train.to_string(),
            s.n_val.to_string(),
            s.n_test.to_string(),
            s.n_unique_mols.to_string(),
        ];
        for &p in &letters_seen {
            row.push(cell(s.mps_train.get(p)));
        }
        for &p in &letters_seen {
            row.push(cell(s.aps_test.as_ref().and_then(|v| v.get(p))));
        }
        for &p in &letters_seen {
            row.push(cell(s.mean_change.get(p)));
        }
        writeln!(w, "{}", row.join("\t"))?;
    }
    w.finish(&prov)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SplitName {
    Train,
    Val,
    Test,
}

/// Template choice for emitted prompts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemplateChoice {
    Auto,
    Index(u8),
}

impl std::str::FromStr for TemplateChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(TemplateChoice::Auto);
        }
        s.parse().map(TemplateChoice::Index).map_err(|_| format!("expected 'auto' or a template index, got {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum EvalStyle {
    /// Template text followed by the request
    Plain,
    Chat,
    Simple,
}

pub struct EmitOptions {
    pub split: SplitName,
    pub names: NameVariant,
    pub template: TemplateChoice,
    pub style: EvalStyle,
    pub fewshot: usize,
    pub allow_held_out: bool,
}

pub fn emit_prompts(task_dir: &Path, out: &Path, opts: &EmitOptions, cfg: &PipelineConfig) -> Result<()> {
    let registry = cfg.registry()?;
    let templates = cfg.templates()?;
    let names = NameSet::from_registry(&registry, opts.names);
    let m = read_manifest(task_dir)?;
    let task = TaskSpec::from_letters(&m.properties)?;
    let mut prov = Provenance::new("emit-prompts", cfg);
    let records: Vec<PromptRecord> = match opts.split {
        SplitName::Train | SplitName::Val => {
            let file = if opts.split == SplitName::Train { "train.jsonl" } else { "val.jsonl" };
            prov.input(&task_dir.join(file))?;
            let pairs: Vec<PairRecord> = load_split(task_dir, file)?;
            match opts.template {
                TemplateChoice::Auto => training_corpus(&pairs, &task, &templates, &registry, &names, m.seed)?,
                TemplateChoice::Index(i) => {
                    let t = templates.get(i)?;
                    pairs
                        .iter()
                        .map(|p| render_training_example(p, &task, t, &registry, &names, !opts.allow_held_out))
                        .collect::<Result<_, _>>()?
                }
            }
        }
        SplitName::Test => {
            prov.input(&task_dir.join("test.jsonl"))?;
            let test: Vec<ScoredMolecule> = load_split(task_dir, "test.jsonl")?;
            let index = match opts.template {
                TemplateChoice::Auto => 1,
                TemplateChoice::Index(i) => i,
            };
            let t = templates.get(index)?;
            let shots: Vec<PairRecord> = if opts.fewshot > 0 {
                let train: Vec<PairRecord> = load_split(task_dir, "train.jsonl")?;
                let k = opts.fewshot.min(train.len());
                let mut picked =
                    index::sample(&mut ChaCha8Rng::seed_from_u64(m.seed), train.len(), k).into_vec();
                picked.sort_unstable();
                picked.into_iter().map(|i| train[i].clone()).collect()
            } else {
                Vec::new()
            };
            test.iter()
                .map(|mol| -> Result<PromptRecord> {
                    let mut r = render_eval_record(&mol.smiles, &task, t, &registry, &names)?;
                    let style = match opts.style {
                        EvalStyle::Plain => None,
                        EvalStyle::Chat => Some(PromptStyle::Chat),
                        EvalStyle::Simple => Some(PromptStyle::Simple),
                    };
                    if let Some(style) = style {
                        r.instruction = render_eval_prompt(&mol.smiles, &task, t, &registry, &names, style, &shots)?;
                    }
                    Ok(r)
                })
                .collect::<Result<_>>()?
        }
    };
    let mut w = Output::create(out)?;
    w.note(serde_json::json!({
        "task": task.name,
        "split": format!("{:?}", opts.split).to_lowercase(),
        "names": opts.names,
        "fewshot": opts.fewshot,
        "fewshot_format": prompts::FEWSHOT_FORMAT,
    }));
    write_jsonl(&records, &mut w)?;
    w.finish(&prov)
}

/// One evaluated case tagged with its task, as written by `evaluate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskCase {
    pub task: String,
    #[serde(flatten)]
    pub case: CaseResult,
}

fn read_train_mols(path: &Path) -> Result<HashSet<String>> {
    let mut set = HashSet::new();
    for item in smiles_lines(open_in(path)?) {
        let (line, s) = item?;
        set.insert(canonicalize(&s).with_context(|| format!("{}:{line}", path.display()))?.text);
    }
    Ok(set)
}

pub fn evaluate(generations: &Path, train_mols: Option<&Path>, out: &Path, cfg: &PipelineConfig) -> Result<()> {
    let registry = cfg.registry()?;
    let oracle = oracle(cfg)?;
    let mut prov = Provenance::new("evaluate", cfg);
    prov.input(generations)?;
    oracle_input(&mut prov, cfg)?;
    let records: Vec<GenerationRecord> = read_jsonl(open_in(generations)?)?;
    let train = match train_mols {
        Some(p) => {
            prov.input(p)?;
            Some(read_train_mols(p)?)
        }
        None => None,
    };
    let mut groups: Vec<(String, Vec<GenerationRecord>)> = Vec::new();
    for r in records {
        match groups.iter_mut().find(|g| g.0 == r.task) {
            Some(g) => g.1.push(r),
            None => groups.push((r.task.clone(), vec![r])),
        }
    }
    let eval_cfg = EvalConfig {
        mode: cfg.eval_mode,
        radius: cfg.mining.radius,
        width: cfg.mining.width,
    };
    let mut w = Output::create(out)?;
    w.note(serde_json::json!({ "mode": cfg.eval_mode, "oracle": oracle.identity() }));
    for (name, recs) in groups {
        let task = TaskSpec::from_letters(&name)?;
        let cases = evaluate_cases(&recs, &task, &registry, &oracle, train.as_ref(), &eval_cfg)?;
        let tagged: Vec<TaskCase> = cases.into_iter().map(|case| TaskCase { task: name.clone(), case }).collect();
        write_jsonl(&tagged, &mut w)?;
    }
    w.finish(&prov)
}

pub fn report(cases: &[PathBuf], format: ReportFormat, out: &Path, cfg: &PipelineConfig) -> Result<()> {
    let mut prov = Provenance::new("report", cfg);
    let mut groups: Vec<(String, Vec<CaseResult>)> = Vec::new();
    for path in cases {
        prov.input(path)?;
        let rows: Vec<TaskCase> = read_jsonl(open_in(path)?)?;
        for r in rows {
            match groups.iter_mut().find(|g| g.0 == r.task) {
                Some(g) => g.1.push(r.case),
                None => groups.push((r.task, vec![r.case])),
            }
        }
    }
    let reports = groups
        .iter()
        .map(|(name, cases)| Ok(aggregate(cases, &TaskSpec::from_letters(name)?)?))
        .collect::<Result<Vec<_>>>()?;
    let mut w = Output::create(out)?;
    molforge::evalengine::write_report(&reports, format, &mut w)?;
    w.finish(&prov)
}

/// Read a whole file of lines, for commands that need random access.
#[allow(dead_code)]
pub fn lines(path: &Path) -> Result<Vec<String>> {
    open_in(path)?.lines().map(|l| Ok(l?)).collect()
}
