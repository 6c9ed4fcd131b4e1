//! Task enumeration, train/validation splits, training medians and test-set
//! construction.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::seq::{index, SliceRandom};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec;
use crate::fingerprint::fnv1a64;
use crate::pairmine::{orient_pairs, CandidatePair, PairError, PairRecord, ScoredMolecule};
use crate::propmodel::{Mode, PropertyError, PropertyId, PropertyVector, Registry, TaskSpec};

#[derive(Debug, Error)]
pub enum TaskError {
    #[error("min_size {min_size} exceeds the {available} available properties")]
    TooFewProperties { min_size: usize, available: usize },
    #[error("property {0} listed twice")]
    DuplicateProperty(PropertyId),
    #[error("task {0} has no training pairs")]
    EmptyTrainingSet(String),
    #[error("candidate pool is empty")]
    EmptyPool,
    #[error("split config: {0}")]
    Config(String),
    #[error(transparent)]
    Property(#[from] PropertyError),
    #[error(transparent)]
    Pair(#[from] PairError),
}

/// How the validation size is rounded from `val_fraction * n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ValRounding {
    #[default]
    Ceil,
    Round,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    pub val_fraction: f64,
    pub val_rounding: ValRounding,
    pub test_cap: usize,
    pub seed: u64,
    pub percentile_floor: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            val_fraction: 0.10,
            val_rounding: ValRounding::Ceil,
            test_cap: 500,
            seed: 42,
            percentile_floor: 0.10,
        }
    }
}

impl SplitConfig {
    pub fn check(&self) -> Result<(), TaskError> {
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(TaskError::Config(format!("val_fraction {} outside [0, 1)", self.val_fraction)));
        }
        if self.test_cap == 0 {
            return Err(TaskError::Config("test_cap must be at least 1".into()));
        }
        if !(0.0..=0.5).contains(&self.percentile_floor) {
            return Err(TaskError::Config(format!(
                "percentile_floor {} outside [0, 0.5]",
                self.percentile_floor
            )));
        }
        Ok(())
    }

    /// Per-task seed, so tasks draw independent but reproducible samples.
    pub fn task_seed(&self, task: &TaskSpec) -> u64 {
        self.seed ^ fnv1a64(task.name.as_bytes())
    }

    pub fn val_size(&self, n: usize) -> usize {
        let raw = self.val_fraction * n as f64;
        let k = match self.val_rounding {
            ValRounding::Ceil => (raw - 1e-9).ceil(),
            ValRounding::Round => raw.round(),
        };
        (k.max(0.0) as usize).min(n)
    }
}

/// All subsets of `properties` with at least `min_size` members, ordered by
/// size then name.
pub fn enumerate_tasks(properties: &[PropertyId], min_size: usize) -> Result<Vec<TaskSpec>, TaskError> {
    let mut props = properties.to_vec();
    props.sort();
    if let Some(w) = props.windows(2).find(|w| w[0] == w[1]) {
        return Err(TaskError::DuplicateProperty(w[0]));
    }
    let n = props.len();
    if min_size > n || n == 0 {
        return Err(TaskError::TooFewProperties {
            min_size,
            available: n,
        });
    }
    if n > 20 {
        return Err(TaskError::Config(format!("{n} properties give too many subsets")));
    }
    let mut tasks = Vec::new();
    for mask in 1u32..(1 << n) {
        if (mask.count_ones() as usize) < min_size.max(1) {
            continue;
        }
        let set: BTreeSet<PropertyId> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| props[i]).collect();
        tasks.push(TaskSpec::new(set)?);
    }
    tasks.sort_by(|a, b| (a.properties.len(), &a.name).cmp(&(b.properties.len(), &b.name)));
    Ok(tasks)
}

/// Seeded shuffle, then the first `val_size(n)` shuffled items form the
/// validation split. Both halves keep input order.
pub fn split_train_val<T: Clone>(items: &[T], cfg: &SplitConfig, seed: u64) -> (Vec<T>, Vec<T>) {
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut is_val = vec![false; items.len()];
    for &i in &order[..cfg.val_size(items.len())] {
        is_val[i] = true;
    }
    let mut train = Vec::new();
    let mut val = Vec::new();
    for (item, v) in items.iter().zip(is_val) {
        if v {
            val.push(item.clone());
        } else {
            train.push(item.clone());
        }
    }
    (train, val)
}

/// Median; even counts average the two middle values. `None` when empty.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { (v[m - 1] + v[m]) / 2.0 })
}

/// Percentile with linear interpolation between closest ranks. `q` in [0, 1].
pub fn percentile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(v[lo] + (v[hi] - v[lo]) * (pos - lo as f64))
}

fn hit_scores(task: &TaskSpec, train: &[PairRecord], p: PropertyId) -> Result<Vec<f64>, TaskError> {
    let _ = task;
    train.iter().map(|r| Ok(r.vx.require(p)?)).collect()
}

/// Per-property median of the hit (`mx`) scores over the training pairs.
pub fn training_medians(task: &TaskSpec, train: &[PairRecord]) -> Result<PropertyVector, TaskError> {
    if train.is_empty() {
        return Err(TaskError::EmptyTrainingSet(task.name.clone()));
    }
    let mut out = PropertyVector::new();
    for &p in &task.properties {
        out.insert(p, median(&hit_scores(task, train, p)?).expect("non-empty"));
    }
    Ok(out)
}

/// Bound on a skewed property beyond which a molecule is too extreme to
/// serve as a test input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkewLimit {
    pub value: f64,
    /// `true` when values below `value` are excluded; otherwise values above.
    pub lower: bool,
}

impl SkewLimit {
    pub fn admits(&self, x: f64) -> bool {
        if self.lower {
            x >= self.value
        } else {
            x <= self.value
        }
    }
}

/// Reference values a test molecule is checked against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReference {
    pub mps: PropertyVector,
    pub skew_limits: BTreeMap<PropertyId, SkewLimit>,
}

/// Training medians plus, for skewed properties, the percentile of training
/// hit scores in the undesirable tail.
pub fn test_reference(
    task: &TaskSpec,
    registry: &Registry,
    train: &[PairRecord],
    cfg: &SplitConfig,
) -> Result<TestReference, TaskError> {
    let mps = training_medians(task, train)?;
    let mut skew_limits = BTreeMap::new();
    for &p in &task.properties {
        let spec = registry.get(p)?;
        if !spec.skewed {
            continue;
        }
        let xs = hit_scores(task, train, p)?;
        let (q, lower) = if spec.higher_is_better {
            (cfg.percentile_floor, true)
        } else {
            (1.0 - cfg.percentile_floor, false)
        };
        let value = percentile(&xs, q).expect("non-empty");
        skew_limits.insert(p, SkewLimit { value, lower });
    }
    Ok(TestReference { mps, skew_limits })
}

/// Whether a pool molecule qualifies as a test input for `task`.
pub fn test_eligible(
    task: &TaskSpec,
    registry: &Registry,
    scores: &PropertyVector,
    reference: &TestReference,
) -> Result<bool, TaskError> {
    for &p in &task.properties {
        let spec = registry.get(p)?;
        let x = scores.require(p)?;
        if !spec.worse_than(x, reference.mps.require(p)?) {
            return Ok(false);
        }
        if let Some(limit) = reference.skew_limits.get(&p) {
            if !limit.admits(x) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Test inputs: eligible pool molecules absent from `train_mols`, sampled
/// down to `test_cap` with a seeded draw. Output follows pool order.
pub fn build_testset(
    task: &TaskSpec,
    registry: &Registry,
    pool: &[ScoredMolecule],
    train_mols: &HashSet<String>,
    reference: &TestReference,
    cfg: &SplitConfig,
    seed: u64,
) -> Result<Vec<String>, TaskError> {
    if pool.is_empty() {
        return Err(TaskError::EmptyPool);
    }
    let verdicts = exec::map_ordered(pool, |m| test_eligible(task, registry, &m.scores, reference));
    let mut seen = HashSet::new();
    let mut eligible = Vec::new();
    for (m, ok) in pool.iter().zip(verdicts) {
        if ok? && !train_mols.contains(&m.smiles) && seen.insert(m.smiles.as_str()) {
            eligible.push(m.smiles.clone());
        }
    }
    if eligible.len() <= cfg.test_cap {
        return Ok(eligible);
    }
    let mut picked = index::sample(&mut ChaCha8Rng::seed_from_u64(seed), eligible.len(), cfg.test_cap).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| eligible[i].clone()).collect())
}

/// Summary figures for one built task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskStats {
    pub task: String,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub n_unique_mols: usize,
    pub mps_train: PropertyVector,
    pub aps_train: PropertyVector,
    /// Mean raw change `y - x` over training pairs.
    pub mean_change: PropertyVector,
    pub aps_test: Option<PropertyVector>,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

pub fn task_stats(
    task: &TaskSpec,
    train: &[PairRecord],
    val: &[PairRecord],
    test: &[ScoredMolecule],
) -> Result<TaskStats, TaskError> {
    let mps_train = training_medians(task, train)?;
    let mut aps_train = PropertyVector::new();
    let mut mean_change = PropertyVector::new();
    let mut aps = PropertyVector::new();
    for &p in &task.properties {
        let xs = hit_scores(task, train, p)?;
        aps_train.insert(p, mean(xs.iter().copied()).expect("non-empty"));
        let deltas: Vec<f64> = train
            .iter()
            .map(|r| Ok(r.vy.require(p)? - r.vx.require(p)?))
            .collect::<Result<_, PropertyError>>()?;
        mean_change.insert(p, mean(deltas.into_iter()).expect("non-empty"));
        if let Some(m) = mean(test.iter().filter_map(|t| t.scores.get(p))) {
            aps.insert(p, m);
        }
    }
    let mols: HashSet<&str> = train
        .iter()
        .chain(val)
        .flat_map(|r| [r.mx.as_str(), r.my.as_str()])
        .collect();
    Ok(TaskStats {
        task: task.name.clone(),
        n_train: train.len(),
        n_val: val.len(),
        n_test: test.len(),
        n_unique_mols: mols.len(),
        mps_train,
        aps_train,
        mean_change,
        aps_test: (!test.is_empty()).then_some(aps),
    })
}

/// Everything produced for one task.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskBuild {
    pub task: TaskSpec,
    pub seed: u64,
    pub train: Vec<PairRecord>,
    pub val: Vec<PairRecord>,
    pub reference: TestReference,
    pub test: Vec<String>,
    pub stats: TaskStats,
}

/// Molecules appearing in any training or validation pair.
pub fn pair_molecules(train: &[PairRecord], val: &[PairRecord]) -> HashSet<String> {
    train.iter().chain(val).flat_map(|r| [r.mx.clone(), r.my.clone()]).collect()
}

/// Orient candidates for `task` and split them. Either half may be empty.
pub fn build_splits(
    task: &TaskSpec,
    registry: &Registry,
    candidates: &[CandidatePair],
    mode: Mode,
    cfg: &SplitConfig,
) -> Result<(Vec<PairRecord>, Vec<PairRecord>), TaskError> {
    cfg.check()?;
    let pairs = orient_pairs(candidates, task, registry, mode)?;
    Ok(split_train_val(&pairs, cfg, cfg.task_seed(task)))
}

/// Orient candidates for `task`, split, and build its test set from `pool`.
pub fn build_task(
    task: &TaskSpec,
    registry: &Registry,
    candidates: &[CandidatePair],
    pool: &[ScoredMolecule],
    mode: Mode,
    cfg: &SplitConfig,
) -> Result<TaskBuild, TaskError> {
    let (train, val) = build_splits(task, registry, candidates, mode, cfg)?;
    let seed = cfg.task_seed(task);
    let reference = test_reference(task, registry, &train, cfg)?;
    let exclude = pair_molecules(&train, &val);
    let test = build_testset(task, registry, pool, &exclude, &reference, cfg, seed)?;
    let by_smiles: BTreeMap<&str, &ScoredMolecule> = pool.iter().map(|m| (m.smiles.as_str(), m)).collect();
    let test_scored: Vec<ScoredMolecule> = test.iter().map(|s| by_smiles[s.as_str()].clone()).collect();
    let stats = task_stats(task, &train, &val, &test_scored)?;
    Ok(TaskBuild {
        task: task.clone(),
        seed,
        train,
        val,
        reference,
        test,
        stats,
    })
}

/// [`build_task`] for each task, in parallel, results in task order.
pub fn build_tasks(
    tasks: &[TaskSpec],
    registry: &Registry,
    candidates: &[CandidatePair],
    pool: &[ScoredMolecule],
    mode: Mode,
    cfg: &SplitConfig,
) -> Vec<Result<TaskBuild, TaskError>> {
    exec::map_ordered(tasks, |t| build_task(t, registry, candidates, pool, mode, cfg))
}
