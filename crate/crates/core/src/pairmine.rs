//! Training pairs: mining similar molecules, ingesting pair lists, and
//! keeping the orientations that improve every task property.

use std::collections::{BTreeSet, HashSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec;
use crate::fingerprint::{self, FingerprintError, DEFAULT_RADIUS, DEFAULT_WIDTH};
use crate::molgraph::{canonicalize, parse, ParseError};
use crate::oracle::{Oracle, OracleError};
use crate::propmodel::{Mode, PropertyError, PropertyId, PropertyVector, Registry, TaskSpec};

pub const DEFAULT_THRESHOLD: f64 = 0.6;

#[derive(Debug, Error)]
pub enum PairError {
    #[error(transparent)]
    Property(#[from] PropertyError),
    #[error(transparent)]
    Fingerprint(#[from] FingerprintError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("pool molecule {index} ({smiles}) does not parse: {source}")]
    BadPoolMolecule {
        index: usize,
        smiles: String,
        source: ParseError,
    },
    #[error("pair input line {line}: {reason}")]
    Input { line: usize, reason: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// An ordered pair where `my` is meant to improve on `mx`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub mx: String,
    pub my: String,
    pub similarity: f64,
    pub vx: PropertyVector,
    pub vy: PropertyVector,
}

/// An unordered similar pair with scores for both members.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatePair {
    pub a: String,
    pub b: String,
    pub similarity: f64,
    pub va: PropertyVector,
    pub vb: PropertyVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredMolecule {
    pub smiles: String,
    pub scores: PropertyVector,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiningConfig {
    pub threshold: f64,
    pub radius: u32,
    pub width: u32,
}

impl Default for MiningConfig {
    fn default() -> Self {
        MiningConfig {
            threshold: DEFAULT_THRESHOLD,
            radius: DEFAULT_RADIUS,
            width: DEFAULT_WIDTH,
        }
    }
}

/// Pairs satisfying the task constraints under `mode`, deduplicated on
/// `(mx, my)` with the first occurrence kept. Input order is preserved.
pub fn filter_pairs(
    pairs: &[PairRecord],
    task: &TaskSpec,
    registry: &Registry,
    mode: Mode,
) -> Result<Vec<PairRecord>, PairError> {
    let verdicts = exec::map_ordered(pairs, |p| registry.satisfies_pair(task, &p.vx, &p.vy, mode));
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (p, ok) in pairs.iter().zip(verdicts) {
        if ok? && seen.insert((p.mx.as_str(), p.my.as_str())) {
            out.push(p.clone());
        }
    }
    Ok(out)
}

/// Every orientation of each candidate in which the second molecule improves
/// on the first for all task properties. Pairs of identical molecules are
/// dropped.
pub fn orient_pairs(
    candidates: &[CandidatePair],
    task: &TaskSpec,
    registry: &Registry,
    mode: Mode,
) -> Result<Vec<PairRecord>, PairError> {
    let oriented = exec::map_ordered(candidates, |c| -> Result<Vec<PairRecord>, PairError> {
        let mut out = Vec::new();
        if c.a == c.b {
            return Ok(out);
        }
        if registry.satisfies_pair(task, &c.va, &c.vb, mode)? {
            out.push(PairRecord {
                mx: c.a.clone(),
                my: c.b.clone(),
                similarity: c.similarity,
                vx: c.va.clone(),
                vy: c.vb.clone(),
            });
        }
        if registry.satisfies_pair(task, &c.vb, &c.va, mode)? {
            out.push(PairRecord {
                mx: c.b.clone(),
                my: c.a.clone(),
                similarity: c.similarity,
                vx: c.vb.clone(),
                vy: c.va.clone(),
            });
        }
        Ok(out)
    });
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for group in oriented {
        for p in group? {
            if seen.insert((p.mx.clone(), p.my.clone())) {
                out.push(p);
            }
        }
    }
    Ok(out)
}

/// Unordered pool pairs with Tanimoto similarity strictly above the
/// threshold, in `(i, j)` index order.
pub fn mine_pairs(pool: &[ScoredMolecule], cfg: &MiningConfig) -> Result<Vec<CandidatePair>, PairError> {
    if !(0.0..1.0).contains(&cfg.threshold) {
        return Err(FingerprintError::InvalidThreshold(cfg.threshold).into());
    }
    if cfg.width == 0 {
        return Err(FingerprintError::ZeroWidth.into());
    }
    let fps = exec::map_ordered(pool, |m| {
        parse(&m.smiles)
            .map(|mol| fingerprint::morgan(&mol, cfg.radius, cfg.width).expect("nonzero width"))
            .map_err(|e| (m.smiles.clone(), e))
    });
    let mut prints = Vec::with_capacity(fps.len());
    for (index, fp) in fps.into_iter().enumerate() {
        match fp {
            Ok(f) => prints.push(f),
            Err((smiles, source)) => return Err(PairError::BadPoolMolecule { index, smiles, source }),
        }
    }
    let hits = fingerprint::pairwise_similar(&prints, cfg.threshold)?;
    Ok(hits
        .into_iter()
        .map(|h| CandidatePair {
            a: pool[h.i].smiles.clone(),
            b: pool[h.j].smiles.clone(),
            similarity: h.similarity,
            va: pool[h.i].scores.clone(),
            vb: pool[h.j].scores.clone(),
        })
        .collect())
}

/// One row of an ingested pair list. Scores are present only when the input
/// carried `<letter>_x` / `<letter>_y` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct PairRow {
    pub mx: String,
    pub my: String,
    pub vx: Option<PropertyVector>,
    pub vy: Option<PropertyVector>,
}

/// Read a pair TSV with header `mx\tmy` optionally followed by score columns
/// named `<letter>_x` and `<letter>_y`. SMILES are canonicalized.
pub fn read_pair_table<R: BufRead>(reader: R) -> Result<Vec<PairRow>, PairError> {
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(h) => h?,
        None => return Err(PairError::Input { line: 1, reason: "empty input".into() }),
    };
    let cols: Vec<String> = header.trim_end_matches('\r').split('\t').map(|c| c.trim().to_string()).collect();
    if cols.len() < 2 || cols[0] != "mx" || cols[1] != "my" {
        return Err(PairError::Input {
            line: 1,
            reason: "header must start with mx\\tmy".into(),
        });
    }
    let mut score_cols: Vec<(PropertyId, bool)> = Vec::new();
    for c in &cols[2..] {
        let bad = || PairError::Input {
            line: 1,
            reason: format!("unexpected column {c:?}"),
        };
        let (letter, side) = c.split_once('_').ok_or_else(bad)?;
        let id: PropertyId = letter.parse().map_err(|_| bad())?;
        let is_x = match side {
            "x" => true,
            "y" => false,
            _ => return Err(bad()),
        };
        score_cols.push((id, is_x));
    }
    let xs: BTreeSet<PropertyId> = score_cols.iter().filter(|c| c.1).map(|c| c.0).collect();
    let ys: BTreeSet<PropertyId> = score_cols.iter().filter(|c| !c.1).map(|c| c.0).collect();
    if xs != ys {
        return Err(PairError::Input {
            line: 1,
            reason: "every _x column needs a matching _y column".into(),
        });
    }
    let mut out = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() != cols.len() {
            return Err(PairError::Input {
                line: line_no,
                reason: format!("expected {} cells, found {}", cols.len(), cells.len()),
            });
        }
        let canon = |s: &str| {
            canonicalize(s).map(String::from).map_err(|e| PairError::Input {
                line: line_no,
                reason: format!("bad SMILES {s:?}: {e}"),
            })
        };
        let (mx, my) = (canon(cells[0])?, canon(cells[1])?);
        let (vx, vy) = if score_cols.is_empty() {
            (None, None)
        } else {
            let mut vx = PropertyVector::new();
            let mut vy = PropertyVector::new();
            for (&(id, is_x), cell) in score_cols.iter().zip(&cells[2..]) {
                let v: f64 = cell
                    .trim()
                    .parse()
                    .ok()
                    .filter(|v: &f64| v.is_finite())
                    .ok_or_else(|| PairError::Input {
                        line: line_no,
                        reason: format!("bad number {cell:?}"),
                    })?;
                if is_x { vx.insert(id, v) } else { vy.insert(id, v) }
            }
            (Some(vx), Some(vy))
        };
        out.push(PairRow { mx, my, vx, vy });
    }
    Ok(out)
}

/// A pair-list row that could not be used: line number and reason.
pub type Skipped = (usize, String);

/// Turn ingested rows into pair records: similarity is computed from
/// fingerprints, missing scores come from `oracle`. Rows whose molecules
/// cannot be scored are returned separately with a reason.
pub fn complete_pairs(
    rows: &[PairRow],
    props: &BTreeSet<PropertyId>,
    oracle: Option<&Oracle>,
    cfg: &MiningConfig,
) -> Result<(Vec<PairRecord>, Vec<Skipped>), PairError> {
    let needs_oracle = rows.iter().any(|r| r.vx.is_none());
    let scored = match (needs_oracle, oracle) {
        (false, _) => None,
        (true, Some(o)) => {
            let smiles: Vec<&str> = rows.iter().flat_map(|r| [r.mx.as_str(), r.my.as_str()]).collect();
            Some(o.score_batch(&smiles, props)?)
        }
        (true, None) => {
            return Err(PairError::Input {
                line: 1,
                reason: "pair list has no score columns and no oracle was given".into(),
            })
        }
    };
    let sims = exec::map_ordered(rows, |r| -> Result<f64, PairError> {
        let a = fingerprint::morgan(&parse(&r.mx).expect("canonical"), cfg.radius, cfg.width)?;
        let b = fingerprint::morgan(&parse(&r.my).expect("canonical"), cfg.radius, cfg.width)?;
        Ok(fingerprint::tanimoto(&a, &b)?)
    });
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for (i, (row, sim)) in rows.iter().zip(sims).enumerate() {
        let similarity = sim?;
        let pair = match (&row.vx, &row.vy, &scored) {
            (Some(vx), Some(vy), _) => Ok((vx.project(props), vy.project(props))),
            (_, _, Some(s)) => match (&s[2 * i], &s[2 * i + 1]) {
                (Ok(vx), Ok(vy)) => Ok((Ok(vx.clone()), Ok(vy.clone()))),
                (Err(e), _) | (_, Err(e)) => Err(e.to_string()),
            },
            _ => unreachable!("oracle results exist when scores are absent"),
        };
        match pair {
            Ok((Ok(vx), Ok(vy))) => records.push(PairRecord {
                mx: row.mx.clone(),
                my: row.my.clone(),
                similarity,
                vx,
                vy,
            }),
            Ok((Err(e), _)) | Ok((_, Err(e))) => skipped.push((i, e.to_string())),
            Err(e) => skipped.push((i, e)),
        }
    }
    Ok((records, skipped))
}

pub fn write_jsonl<W: Write, T: Serialize>(items: &[T], mut out: W) -> std::io::Result<()> {
    for item in items {
        serde_json::to_writer(&mut out, item)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_jsonl<R: BufRead, T: for<'de> Deserialize<'de>>(reader: R) -> Result<Vec<T>, PairError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| PairError::Input {
            line: i + 1,
            reason: e.to_string(),
        })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propmodel::parse_letters;

    fn v(pairs: &[(char, f64)]) -> PropertyVector {
        pairs.iter().map(|&(c, x)| (PropertyId::new(c).unwrap(), x)).collect()
    }

    fn rec(mx: &str, my: &str, vx: PropertyVector, vy: PropertyVector) -> PairRecord {
        PairRecord {
            mx: mx.into(),
            my: my.into(),
            similarity: 0.7,
            vx,
            vy,
        }
    }

    #[test]
    fn filter_keeps_improving_pairs_once() {
        let task = TaskSpec::from_letters("BDP").unwrap();
        let reg = Registry::default();
        let x = v(&[('B', 0.1), ('D', 0.1), ('P', -3.0)]);
        let good = v(&[('B', 0.4), ('D', 0.35), ('P', -1.5)]);
        let weak = v(&[('B', 0.4), ('D', 0.15), ('P', -1.5)]);
        let pairs = vec![
            rec("CC", "CCO", x.clone(), good.clone()),
            rec("CC", "CCN", x.clone(), weak.clone()),
            rec("CC", "CCO", x.clone(), good.clone()),
        ];
        let strict = filter_pairs(&pairs, &task, &reg, Mode::Strict).unwrap();
        assert_eq!(strict.len(), 1);
        let loose = filter_pairs(&pairs, &task, &reg, Mode::Loose).unwrap();
        assert_eq!(loose.iter().map(|p| p.my.as_str()).collect::<Vec<_>>(), ["CCO", "CCN"]);
        assert!(filter_pairs(&[], &task, &reg, Mode::Strict).unwrap().is_empty());
    }

    #[test]
    fn orientation_cases() {
        let reg = Registry::default();
        let q = TaskSpec::from_letters("Q").unwrap();
        let cand = |va, vb| CandidatePair {
            a: "CCO".into(),
            b: "CCN".into(),
            similarity: 0.8,
            va,
            vb,
        };
        let same = cand(v(&[('Q', 0.3)]), v(&[('Q', 0.3)]));
        assert!(orient_pairs(&[same], &q, &reg, Mode::Loose).unwrap().is_empty());
        let one = orient_pairs(&[cand(v(&[('Q', 0.5)]), v(&[('Q', 0.3)]))], &q, &reg, Mode::Loose).unwrap();
        assert_eq!((one.len(), one[0].mx.as_str()), (1, "CCN"));
        let bdq = TaskSpec::from_letters("BDQ").unwrap();
        let mixed = cand(
            v(&[('B', 0.2), ('D', 0.6), ('Q', 0.3)]),
            v(&[('B', 0.7), ('D', 0.2), ('Q', 0.8)]),
        );
        assert!(orient_pairs(&[mixed], &bdq, &reg, Mode::Loose).unwrap().is_empty());
        let mq = TaskSpec::from_letters("MQ").unwrap();
        let both_up = cand(v(&[('M', 0.2), ('Q', 0.3)]), v(&[('M', 0.6), ('Q', 0.8)]));
        assert!(orient_pairs(&[both_up], &mq, &reg, Mode::Loose).unwrap().is_empty());
    }

    #[test]
    fn mining_rejects_bad_thresholds() {
        let pool = vec![ScoredMolecule {
            smiles: "CCO".into(),
            scores: PropertyVector::new(),
        }];
        for t in [1.0, -0.1, 1.5] {
            let cfg = MiningConfig {
                threshold: t,
                ..MiningConfig::default()
            };
            assert!(matches!(
                mine_pairs(&pool, &cfg),
                Err(PairError::Fingerprint(FingerprintError::InvalidThreshold(_)))
            ));
        }
    }

    #[test]
    fn duplicate_pool_members_mine_but_never_orient() {
        let s = ScoredMolecule {
            smiles: "c1ccccc1O".into(),
            scores: v(&[('Q', 0.5)]),
        };
        let pool = vec![s.clone(), s.clone(), s];
        let cands = mine_pairs(&pool, &MiningConfig::default()).unwrap();
        assert_eq!(cands.len(), 3);
        let q = TaskSpec::from_letters("Q").unwrap();
        assert!(orient_pairs(&cands, &q, &Registry::default(), Mode::Loose).unwrap().is_empty());
    }

    #[test]
    fn pair_table_ingestion() {
        let text = "mx\tmy\tQ_x\tQ_y\nOCC\tCCN\t0.2\t0.5\n";
        let rows = read_pair_table(text.as_bytes()).unwrap();
        assert_eq!(rows[0].mx, canonicalize("CCO").unwrap().text);
        let props = parse_letters("Q").unwrap();
        let (recs, skipped) = complete_pairs(&rows, &props, None, &MiningConfig::default()).unwrap();
        assert!(skipped.is_empty());
        assert_eq!(recs[0].vy.get(PropertyId::QED), Some(0.5));
        assert!(recs[0].similarity > 0.0 && recs[0].similarity < 1.0);

        let bare = read_pair_table("mx\tmy\nCCO\tCCN\nCCO\tC1CC\n".as_bytes());
        assert!(matches!(bare, Err(PairError::Input { line: 3, .. })));
        let bare = read_pair_table("mx\tmy\nCCO\tCCN\n".as_bytes()).unwrap();
        let (recs, _) = complete_pairs(&bare, &props, Some(&Oracle::mock()), &MiningConfig::default()).unwrap();
        assert_eq!(recs.len(), 1);
        assert!(read_pair_table("mx\tmy\tQ_x\nCCO\tCCN\t1\n".as_bytes()).is_err());
    }

    #[test]
    fn jsonl_round_trip() {
        let recs = vec![rec("CC", "CCO", v(&[('P', -1.25)]), v(&[('P', 0.1)]))];
        let mut buf = Vec::new();
        write_jsonl(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(r#"{"mx":"CC","my":"CCO","similarity":0.7,"vx":{"P":-1.25}"#));
        let back: Vec<PairRecord> = read_jsonl(buf.as_slice()).unwrap();
        assert_eq!(back, recs);
    }
}
