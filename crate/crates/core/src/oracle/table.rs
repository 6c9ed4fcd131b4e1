//! Precomputed score tables in TSV form.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};
use std::path::Path;

use thiserror::Error;

use crate::molgraph::canonicalize;
use crate::propmodel::{PropertyId, PropertyVector};

#[derive(Debug, Error)]
pub enum TableError {
    #[error("score table io: {0}")]
    Io(#[from] std::io::Error),
    #[error("score table is missing column {0:?}")]
    MissingColumn(String),
    #[error("conflicting scores for duplicate molecule {0}")]
    ConflictingDuplicate(String),
    #[error("score table line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// Scores keyed by canonical SMILES. Every row carries every declared property.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreTable {
    rows: BTreeMap<String, PropertyVector>,
    declared: BTreeSet<PropertyId>,
}

fn parse_cell(cell: &str) -> Option<f64> {
    let cell = cell.trim();
    if !cell.bytes().any(|b| b.is_ascii_digit()) {
        return None;
    }
    cell.parse::<f64>().ok().filter(|v| v.is_finite())
}

impl ScoreTable {
    pub fn new(declared: BTreeSet<PropertyId>) -> Self {
        ScoreTable {
            rows: BTreeMap::new(),
            declared,
        }
    }

    pub fn declared(&self) -> &BTreeSet<PropertyId> {
        &self.declared
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, canonical: &str) -> Option<&PropertyVector> {
        self.rows.get(canonical)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &PropertyVector)> {
        self.rows.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Insert a row keyed by an already-canonical SMILES. Identical
    /// duplicates are merged; differing ones are rejected.
    pub fn insert(&mut self, canonical: String, scores: PropertyVector) -> Result<(), TableError> {
        match self.rows.get(&canonical) {
            Some(existing) if *existing != scores => Err(TableError::ConflictingDuplicate(canonical)),
            Some(_) => Ok(()),
            None => {
                self.rows.insert(canonical, scores);
                Ok(())
            }
        }
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self, TableError> {
        let mut lines = reader.lines().enumerate();
        let header = loop {
            match lines.next() {
                Some((_, line)) => {
                    let line = line?;
                    if !line.trim().is_empty() {
                        break line;
                    }
                }
                None => return Err(TableError::MissingColumn("smiles".into())),
            }
        };
        let columns: Vec<&str> = header.trim_end_matches('\r').split('\t').collect();
        if columns.first().map(|c| c.trim()) != Some("smiles") {
            return Err(TableError::MissingColumn("smiles".into()));
        }
        let mut props = Vec::new();
        for c in &columns[1..] {
            let id: PropertyId = c.trim().parse().map_err(|_| TableError::Parse {
                line: 1,
                reason: format!("column {c:?} is not a property letter"),
            })?;
            if props.contains(&id) {
                return Err(TableError::Parse {
                    line: 1,
                    reason: format!("duplicate column {id}"),
                });
            }
            props.push(id);
        }
        let mut table = ScoreTable::new(props.iter().copied().collect());
        for (idx, line) in lines {
            let line = line?;
            let line_no = idx + 1;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split('\t').collect();
            if cells.len() != columns.len() {
                return Err(TableError::Parse {
                    line: line_no,
                    reason: format!("expected {} cells, found {}", columns.len(), cells.len()),
                });
            }
            let canonical = canonicalize(cells[0]).map_err(|e| TableError::Parse {
                line: line_no,
                reason: format!("bad SMILES {:?}: {e}", cells[0]),
            })?;
            let mut v = PropertyVector::new();
            for (&id, cell) in props.iter().zip(&cells[1..]) {
                let value = parse_cell(cell).ok_or_else(|| TableError::Parse {
                    line: line_no,
                    reason: format!("bad number {cell:?} in column {id}"),
                })?;
                v.insert(id, value);
            }
            table.insert(canonical.text, v)?;
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self, TableError> {
        let file = std::fs::File::open(path)?;
        ScoreTable::read(std::io::BufReader::new(file))
    }

    /// Write as TSV, rows sorted by key. Values use shortest round-trip form.
    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "smiles")?;
        for p in &self.declared {
            write!(out, "\t{p}")?;
        }
        writeln!(out)?;
        for (k, v) in &self.rows {
            write!(out, "{k}")?;
            for p in &self.declared {
                match v.get(*p) {
                    Some(x) => write!(out, "\t{x}")?,
                    None => write!(out, "\tNA")?,
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }
}
