//! Scoring of generated candidates against their inputs and aggregation into
//! per-task reports.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec;
use crate::fingerprint::{morgan, tanimoto, Fingerprint, FingerprintError};
use crate::molgraph::{canonical_smiles, parse, validate};
use crate::oracle::{Oracle, OracleError};
use crate::propmodel::{Mode, PropertyError, PropertyId, PropertyVector, Registry, TaskSpec};

/// Floor on the magnitude of a starting score in relative improvement.
pub const RI_EPSILON: f64 = 1e-8;
/// Default number of candidates generated per input.
pub const DEFAULT_CANDIDATES: usize = 20;
/// Statement of which cases each averaged column covers.
pub const AVERAGING_NOTE: &str =
    "SR and Val are over all cases; Sim, Nov, SAS, RI and APS are over successful cases only";

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("input {input:?} cannot be scored: {reason}")]
    InputUnscoreable { input: String, reason: String },
    #[error("no cases to aggregate")]
    EmptyCaseList,
    #[error("record for task {found} in a {expected} evaluation")]
    TaskMismatch { expected: String, found: String },
    #[error(transparent)]
    Property(#[from] PropertyError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Fingerprint(#[from] FingerprintError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Candidates generated for one input molecule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub task: String,
    pub input: String,
    #[serde(default)]
    pub candidates: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub input: String,
    pub any_valid: bool,
    pub success: bool,
    pub selected: Option<String>,
    pub selected_index: Option<usize>,
    pub sim: Option<f64>,
    pub ri: Option<f64>,
    pub selected_scores: Option<PropertyVector>,
    pub novel: Option<bool>,
    pub sas: Option<f64>,
}

impl CaseResult {
    fn failed(input: String, any_valid: bool) -> Self {
        CaseResult {
            input,
            any_valid,
            success: false,
            selected: None,
            selected_index: None,
            sim: None,
            ri: None,
            selected_scores: None,
            novel: None,
            sas: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub mode: Mode,
    pub radius: u32,
    pub width: u32,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            mode: Mode::Loose,
            radius: 2,
            width: 2048,
        }
    }
}

/// Mean relative improvement over the task properties, signed so that an
/// improvement is positive regardless of direction or sign of `x`.
pub fn compute_ri(task: &TaskSpec, registry: &Registry, vx: &PropertyVector, vy: &PropertyVector) -> Result<f64, PropertyError> {
    let mut sum = 0.0;
    for &p in &task.properties {
        let spec = registry.get(p)?;
        let x = vx.require(p)?;
        let y = vy.require(p)?;
        sum += spec.oriented_gain(x, y) / x.abs().max(RI_EPSILON);
    }
    Ok(sum / task.properties.len() as f64)
}

/// Index and RI of the best passing candidate. `None` entries are
/// candidates that could not be scored. Ties keep the lowest index.
pub fn select_candidate(
    task: &TaskSpec,
    registry: &Registry,
    vx: &PropertyVector,
    candidates: &[Option<PropertyVector>],
    mode: Mode,
) -> Result<Option<(usize, f64)>, PropertyError> {
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in candidates.iter().enumerate() {
        let Some(vy) = c else { continue };
        if !registry.satisfies_pair(task, vx, vy, mode)? {
            continue;
        }
        let ri = compute_ri(task, registry, vx, vy)?;
        if best.is_none_or(|(_, b)| ri > b) {
            best = Some((i, ri));
        }
    }
    Ok(best)
}

struct Prepared {
    input: String,
    candidates: Vec<Option<String>>,
}

fn canonical_valid(text: &str) -> Option<String> {
    let mol = parse(text).ok()?;
    validate(&mol).valid.then(|| canonical_smiles(&mol).text)
}

fn fingerprint_of(canonical: &str, cfg: &EvalConfig) -> Result<Fingerprint, EvalError> {
    let mol = parse(canonical).map_err(|e| EvalError::InputUnscoreable {
        input: canonical.into(),
        reason: e.to_string(),
    })?;
    Ok(morgan(&mol, cfg.radius, cfg.width)?)
}

/// Evaluate every record of one task. Molecules are canonicalized and scored
/// in one oracle batch; cases are then judged in parallel.
pub fn evaluate_cases(
    records: &[GenerationRecord],
    task: &TaskSpec,
    registry: &Registry,
    oracle: &Oracle,
    train_mols: Option<&HashSet<String>>,
    cfg: &EvalConfig,
) -> Result<Vec<CaseResult>, EvalError> {
    if let Some(r) = records.iter().find(|r| r.task != task.name) {
        return Err(EvalError::TaskMismatch {
            expected: task.name.clone(),
            found: r.task.clone(),
        });
    }
    oracle.require(&task.properties)?;
    let prepared: Vec<Result<Prepared, EvalError>> = exec::map_ordered(records, |r| {
        let input = canonical_valid(&r.input).ok_or_else(|| EvalError::InputUnscoreable {
            input: r.input.clone(),
            reason: "not a valid molecule".into(),
        })?;
        Ok(Prepared {
            input,
            candidates: r.candidates.iter().map(|c| canonical_valid(c)).collect(),
        })
    });
    let prepared: Vec<Prepared> = prepared.into_iter().collect::<Result<_, _>>()?;

    let mut unique: Vec<&str> = Vec::new();
    let mut seen: HashSet<&str> = HashSet::new();
    for p in &prepared {
        for s in std::iter::once(p.input.as_str()).chain(p.candidates.iter().flatten().map(String::as_str)) {
            if seen.insert(s) {
                unique.push(s);
            }
        }
    }
    let scored = oracle.score_batch(&unique, &task.properties)?;
    let scores: HashMap<&str, _> = unique.iter().copied().zip(scored).collect();

    let judged: Vec<Result<CaseResult, EvalError>> = exec::map_ordered(&prepared, |p| {
        let vx = scores[p.input.as_str()].as_ref().map_err(|e| EvalError::InputUnscoreable {
            input: p.input.clone(),
            reason: e.to_string(),
        })?;
        let any_valid = p.candidates.iter().any(Option::is_some);
        let cand_scores: Vec<Option<PropertyVector>> = p
            .candidates
            .iter()
            .map(|c| c.as_ref().and_then(|s| scores[s.as_str()].as_ref().ok().cloned()))
            .collect();
        let Some((idx, ri)) = select_candidate(task, registry, vx, &cand_scores, cfg.mode)? else {
            return Ok(CaseResult::failed(p.input.clone(), any_valid));
        };
        let selected = p.candidates[idx].clone().expect("scored candidates are valid");
        let sim = tanimoto(&fingerprint_of(&p.input, cfg)?, &fingerprint_of(&selected, cfg)?)?;
        Ok(CaseResult {
            input: p.input.clone(),
            any_valid,
            success: true,
            novel: train_mols.map(|t| !t.contains(&selected)),
            selected: Some(selected),
            selected_index: Some(idx),
            sim: Some(sim),
            ri: Some(ri),
            selected_scores: cand_scores[idx].clone(),
            sas: None,
        })
    });
    let mut cases: Vec<CaseResult> = judged.into_iter().collect::<Result<_, _>>()?;

    if oracle.provides().contains(&PropertyId::SAS) {
        let picks: Vec<&str> = cases.iter().filter_map(|c| c.selected.as_deref()).collect();
        let sas_props = BTreeSet::from([PropertyId::SAS]);
        let sas: Vec<Option<f64>> = oracle
            .score_batch(&picks, &sas_props)?
            .into_iter()
            .map(|r| r.ok().and_then(|v| v.get(PropertyId::SAS)))
            .collect();
        let mut it = sas.into_iter();
        for c in cases.iter_mut().filter(|c| c.selected.is_some()) {
            c.sas = it.next().expect("one score per selection");
        }
    }
    Ok(cases)
}

/// Single-record convenience wrapper around [`evaluate_cases`].
pub fn evaluate_case(
    record: &GenerationRecord,
    task: &TaskSpec,
    registry: &Registry,
    oracle: &Oracle,
    train_mols: Option<&HashSet<String>>,
    cfg: &EvalConfig,
) -> Result<CaseResult, EvalError> {
    Ok(evaluate_cases(std::slice::from_ref(record), task, registry, oracle, train_mols, cfg)?
        .pop()
        .expect("one record in, one case out"))
}

/// Metric summary for one task. `None` marks a metric undefined for lack of
/// successful cases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskReport {
    pub task: String,
    pub n_cases: usize,
    pub sr: f64,
    pub val: f64,
    pub sim: Option<f64>,
    pub nov: Option<f64>,
    pub sas: Option<f64>,
    pub ri: Option<f64>,
    pub aps: BTreeMap<PropertyId, Option<f64>>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| s / n as f64)
}

pub fn aggregate(cases: &[CaseResult], task: &TaskSpec) -> Result<TaskReport, EvalError> {
    if cases.is_empty() {
        return Err(EvalError::EmptyCaseList);
    }
    let n = cases.len() as f64;
    let ok: Vec<&CaseResult> = cases.iter().filter(|c| c.success).collect();
    let aps = task
        .properties
        .iter()
        .map(|&p| (p, mean(ok.iter().filter_map(|c| c.selected_scores.as_ref()?.get(p)))))
        .collect();
    Ok(TaskReport {
        task: task.name.clone(),
        n_cases: cases.len(),
        sr: 100.0 * ok.len() as f64 / n,
        val: 100.0 * cases.iter().filter(|c| c.any_valid).count() as f64 / n,
        sim: mean(ok.iter().filter_map(|c| c.sim)),
        nov: mean(ok.iter().filter_map(|c| c.novel.map(|b| if b { 100.0 } else { 0.0 }))),
        sas: mean(ok.iter().filter_map(|c| c.sas)),
        ri: mean(ok.iter().filter_map(|c| c.ri)),
        aps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Tsv,
    Json,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "tsv" => Ok(ReportFormat::Tsv),
            "json" => Ok(ReportFormat::Json),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            _ => Err(format!("unknown report format {s:?} (expected tsv, json or markdown)")),
        }
    }
}

pub const UNDEFINED: &str = "n/a";
const METRICS: [&str; 6] = ["SR", "Val", "Sim", "Nov", "SAS", "RI"];

/// Value rounded to the two decimals shown in text reports.
pub fn round2(x: f64) -> f64 {
    format!("{x:.2}").parse().expect("formatted float parses")
}

fn cell(x: Option<f64>) -> String {
    x.map_or_else(|| UNDEFINED.to_string(), |v| format!("{v:.2}"))
}

fn aps_columns(reports: &[TaskReport]) -> Vec<PropertyId> {
    let set: BTreeSet<PropertyId> = reports.iter().flat_map(|r| r.aps.keys().copied()).collect();
    set.into_iter().collect()
}

fn rows(reports: &[TaskReport]) -> (Vec<String>, Vec<Vec<String>>) {
    let aps = aps_columns(reports);
    let mut header: Vec<String> = ["task", "n"].iter().chain(&METRICS).map(|s| s.to_string()).collect();
    header.extend(aps.iter().map(|p| format!("APS_{p}")));
    let body = reports
        .iter()
        .map(|r| {
            let mut row = vec![r.task.clone(), r.n_cases.to_string()];
            for v in [Some(r.sr), Some(r.val), r.sim, r.nov, r.sas, r.ri] {
                row.push(cell(v));
            }
            row.extend(aps.iter().map(|p| cell(r.aps.get(p).copied().flatten())));
            row
        })
        .collect();
    (header, body)
}

pub fn write_report<W: Write>(reports: &[TaskReport], format: ReportFormat, mut out: W) -> Result<(), EvalError> {
    match format {
        ReportFormat::Tsv => {
            let (header, body) = rows(reports);
            writeln!(out, "{}", header.join("\t"))?;
            for row in body {
                writeln!(out, "{}", row.join("\t"))?;
            }
        }
        ReportFormat::Markdown => {
            let (header, body) = rows(reports);
            writeln!(out, "<!-- {AVERAGING_NOTE} -->")?;
            writeln!(out, "| {} |", header.join(" | "))?;
            writeln!(out, "|{}", "---|".repeat(header.len()))?;
            for row in body {
                writeln!(out, "| {} |", row.join(" | "))?;
            }
        }
        ReportFormat::Json => {
            let num = |x: Option<f64>| x.map(round2);
            let tasks: Vec<serde_json::Value> = reports
                .iter()
                .map(|r| {
                    let aps: BTreeMap<String, Option<f64>> =
                        r.aps.iter().map(|(p, v)| (p.to_string(), num(*v))).collect();
                    serde_json::json!({
                        "task": r.task,
                        "n": r.n_cases,
                        "SR": round2(r.sr),
                        "Val": round2(r.val),
                        "Sim": num(r.sim),
                        "Nov": num(r.nov),
                        "SAS": num(r.sas),
                        "RI": num(r.ri),
                        "APS": aps,
                    })
                })
                .collect();
            let doc = serde_json::json!({ "note": AVERAGING_NOTE, "reports": tasks });
            serde_json::to_writer_pretty(&mut out, &doc).map_err(io::Error::other)?;
            writeln!(out)?;
        }
    }
    Ok(())
}
