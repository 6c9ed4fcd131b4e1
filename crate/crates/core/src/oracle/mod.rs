//! Property scores for molecules from pluggable backends, behind a cache
//! keyed by canonical SMILES.

mod mock;
mod subprocess;
mod table;

use std::collections::{BTreeSet, HashMap};
use std::path::PathBuf;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec;
use crate::fingerprint::fnv1a64;
use crate::molgraph::canonicalize;
use crate::propmodel::{letters, parse_letters, PropertyId, PropertyVector};

pub use mock::{mock_range, mock_score, mock_vector, MOCK_PROPERTIES};
pub use subprocess::{SubprocessConfig, DEFAULT_TIMEOUT_MS, DEFAULT_WINDOW, PROTOCOL_VERSION};
pub use table::{ScoreTable, TableError};

use subprocess::SubprocessScorer;

/// Failure for a single molecule. Other molecules in the batch are unaffected.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoreError {
    #[error("unparseable SMILES: {0}")]
    InvalidSmiles(String),
    #[error("molecule not in score table: {0}")]
    UnknownMolecule(String),
    #[error("backend does not provide property {0}")]
    MissingProperty(PropertyId),
    #[error("scorer error: {0}")]
    Scorer(String),
    #[error("scorer timed out")]
    Timeout,
    #[error("scorer exited before answering")]
    ScorerExited,
}

/// Failure that affects the whole oracle or batch.
#[derive(Debug, Error)]
pub enum OracleError {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("cannot start scorer {0}")]
    Spawn(String),
    #[error("scorer handshake failed: {0}")]
    Handshake(String),
    #[error("scorer protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("backend does not provide required property {0}")]
    UnsupportedProperty(PropertyId),
    #[error("oracle config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BackendConfig {
    Table { path: PathBuf },
    Subprocess(SubprocessConfig),
    Mock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub backend: BackendConfig,
    /// Letters every molecule must be scoreable on, e.g. `"BDHMPQ"`.
    #[serde(default)]
    pub properties_required: String,
    #[serde(default = "yes")]
    pub cache_enabled: bool,
}

fn yes() -> bool {
    true
}

enum Backend {
    Table(ScoreTable),
    Mock,
    Subprocess(Box<SubprocessScorer>),
}

impl Backend {
    fn provides(&self) -> BTreeSet<PropertyId> {
        match self {
            Backend::Table(t) => t.declared().clone(),
            Backend::Mock => parse_letters(MOCK_PROPERTIES).expect("valid letters"),
            Backend::Subprocess(s) => s.props().clone(),
        }
    }

    fn score(
        &mut self,
        items: &[(String, BTreeSet<PropertyId>)],
    ) -> Result<Vec<Result<PropertyVector, ScoreError>>, OracleError> {
        match self {
            Backend::Table(t) => Ok(items
                .iter()
                .map(|(smi, props)| {
                    let row = t.get(smi).ok_or_else(|| ScoreError::UnknownMolecule(smi.clone()))?;
                    row.project(props).map_err(|e| match e {
                        crate::propmodel::PropertyError::MissingScore(p) => ScoreError::MissingProperty(p),
                        other => ScoreError::Scorer(other.to_string()),
                    })
                })
                .collect()),
            Backend::Mock => {
                let provided = self.provides();
                Ok(items
                    .iter()
                    .map(|(smi, props)| match props.iter().find(|p| !provided.contains(p)) {
                        Some(&p) => Err(ScoreError::MissingProperty(p)),
                        None => Ok(mock_vector(smi, props)),
                    })
                    .collect())
            }
            Backend::Subprocess(s) => s.score(items),
        }
    }
}

struct Inner {
    backend: Backend,
    identity: String,
    cache: Option<HashMap<(String, String), PropertyVector>>,
}

/// Score source shared across workers. Backend and cache access are
/// serialized internally.
pub struct Oracle {
    inner: Mutex<Inner>,
}

fn table_identity(t: &ScoreTable) -> String {
    let mut buf = Vec::new();
    t.write(&mut buf).expect("in-memory write");
    format!("table:{:016x}", fnv1a64(&buf))
}

impl Oracle {
    fn with_backend(backend: Backend, identity: String, cache: bool) -> Self {
        Oracle {
            inner: Mutex::new(Inner {
                backend,
                identity,
                cache: cache.then(HashMap::new),
            }),
        }
    }

    pub fn from_table(table: ScoreTable) -> Self {
        let id = table_identity(&table);
        Oracle::with_backend(Backend::Table(table), id, true)
    }

    pub fn mock() -> Self {
        Oracle::with_backend(Backend::Mock, "mock:v1".into(), true)
    }

    pub fn subprocess(cfg: &SubprocessConfig) -> Result<Self, OracleError> {
        let scorer = SubprocessScorer::spawn(cfg)?;
        Ok(Oracle::with_backend(
            Backend::Subprocess(Box::new(scorer)),
            cfg.identity(),
            true,
        ))
    }

    pub fn from_config(cfg: &OracleConfig) -> Result<Self, OracleError> {
        let mut oracle = match &cfg.backend {
            BackendConfig::Table { path } => Oracle::from_table(ScoreTable::load(path)?),
            BackendConfig::Subprocess(s) => Oracle::subprocess(s)?,
            BackendConfig::Mock => Oracle::mock(),
        };
        if !cfg.cache_enabled {
            oracle.inner.get_mut().expect("fresh mutex").cache = None;
        }
        let required = parse_letters(&cfg.properties_required).map_err(|e| OracleError::Config(e.to_string()))?;
        oracle.require(&required)?;
        Ok(oracle)
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|p| p.into_inner())
    }

    /// Fail unless the backend serves every property in `props`.
    pub fn require(&self, props: &BTreeSet<PropertyId>) -> Result<(), OracleError> {
        let provided = self.provides();
        match props.iter().find(|p| !provided.contains(p)) {
            Some(&p) => Err(OracleError::UnsupportedProperty(p)),
            None => Ok(()),
        }
    }

    pub fn provides(&self) -> BTreeSet<PropertyId> {
        self.lock().backend.provides()
    }

    /// Stable description of the backend, recorded in manifests.
    pub fn identity(&self) -> String {
        self.lock().identity.clone()
    }

    pub fn cached_entries(&self) -> usize {
        self.lock().cache.as_ref().map_or(0, HashMap::len)
    }

    /// Swap the backend. The cache is cleared when the identity changes.
    pub fn replace_with(&self, other: Oracle) {
        let new = other.inner.into_inner().unwrap_or_else(|p| p.into_inner());
        let mut inner = self.lock();
        if inner.identity != new.identity {
            if let Some(c) = inner.cache.as_mut() {
                c.clear();
            }
        }
        inner.backend = new.backend;
        inner.identity = new.identity;
    }

    /// Score each input on `props`. The result has one entry per input, in
    /// input order.
    pub fn score_batch<S: AsRef<str> + Sync>(
        &self,
        smiles: &[S],
        props: &BTreeSet<PropertyId>,
    ) -> Result<Vec<Result<PropertyVector, ScoreError>>, OracleError> {
        let keys: Vec<Result<String, ScoreError>> = exec::map_ordered(smiles, |s| {
            canonicalize(s.as_ref())
                .map(String::from)
                .map_err(|e| ScoreError::InvalidSmiles(format!("{}: {e}", s.as_ref())))
        });
        let letter_key = letters(props);
        let mut inner = self.lock();
        let mut out: Vec<Option<Result<PropertyVector, ScoreError>>> = vec![None; keys.len()];
        let mut misses: Vec<(String, BTreeSet<PropertyId>)> = Vec::new();
        let mut miss_slot: HashMap<String, usize> = HashMap::new();
        let mut waiting: Vec<(usize, usize)> = Vec::new();
        for (i, key) in keys.iter().enumerate() {
            let key = match key {
                Ok(k) => k,
                Err(e) => {
                    out[i] = Some(Err(e.clone()));
                    continue;
                }
            };
            if let Some(hit) = inner.cache.as_ref().and_then(|c| c.get(&(key.clone(), letter_key.clone()))) {
                out[i] = Some(Ok(hit.clone()));
                continue;
            }
            let slot = *miss_slot.entry(key.clone()).or_insert_with(|| {
                misses.push((key.clone(), props.clone()));
                misses.len() - 1
            });
            waiting.push((i, slot));
        }
        if !misses.is_empty() {
            let scored = inner.backend.score(&misses)?;
            if let Some(cache) = inner.cache.as_mut() {
                for ((key, _), r) in misses.iter().zip(&scored) {
                    if let Ok(v) = r {
                        cache.insert((key.clone(), letter_key.clone()), v.clone());
                    }
                }
            }
            for (i, slot) in waiting {
                out[i] = Some(scored[slot].clone());
            }
        }
        Ok(out.into_iter().map(|r| r.expect("every slot filled")).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn props(s: &str) -> BTreeSet<PropertyId> {
        parse_letters(s).unwrap()
    }

    #[test]
    fn table_backend_reports_unknown_molecules() {
        let t = ScoreTable::read("smiles\tQ\nCCO\t0.4\nc1ccccc1\t0.5\n".as_bytes()).unwrap();
        let o = Oracle::from_table(t);
        let r = o.score_batch(&["OCC", "CCN", "C1=CC=CC=C1", "C1CC"], &props("Q")).unwrap();
        assert_eq!(r.len(), 4);
        assert_eq!(r[0].as_ref().unwrap().get(PropertyId::QED), Some(0.4));
        assert!(matches!(r[1], Err(ScoreError::UnknownMolecule(_))));
        assert!(matches!(r[3], Err(ScoreError::InvalidSmiles(_))));
        let r = o.score_batch(&["CCO"], &props("QB")).unwrap();
        assert_eq!(r[0], Err(ScoreError::MissingProperty(PropertyId::BBBP)));
    }

    #[test]
    fn cache_is_coherent_and_reset_on_backend_change() {
        let o = Oracle::mock();
        let a = o.score_batch(&["CCO", "OCC"], &props("BQ")).unwrap();
        assert_eq!(a[0], a[1]);
        assert_eq!(o.cached_entries(), 1);
        let t = ScoreTable::read("smiles\tB\tQ\nCCO\t0.1\t0.2\n".as_bytes()).unwrap();
        o.replace_with(Oracle::from_table(t));
        assert_eq!(o.cached_entries(), 0);
        let b = o.score_batch(&["CCO"], &props("BQ")).unwrap();
        assert_eq!(b[0].as_ref().unwrap().get(PropertyId::QED), Some(0.2));
    }

    #[test]
    fn config_requires_properties() {
        let cfg = OracleConfig {
            backend: BackendConfig::Mock,
            properties_required: "BDHMPQ".into(),
            cache_enabled: false,
        };
        let o = Oracle::from_config(&cfg).unwrap();
        o.score_batch(&["CCO"], &props("Q")).unwrap();
        assert_eq!(o.cached_entries(), 0);
        let cfg = OracleConfig {
            properties_required: "Z".into(),
            ..cfg
        };
        assert!(matches!(
            Oracle::from_config(&cfg),
            Err(OracleError::UnsupportedProperty(_))
        ));
        let json = r#"{"backend":{"kind":"subprocess","command":"scorer","args":["--mock"]}}"#;
        let parsed: OracleConfig = serde_json::from_str(json).unwrap();
        assert!(parsed.cache_enabled);
        assert!(matches!(parsed.backend, BackendConfig::Subprocess(ref s) if s.timeout_ms == DEFAULT_TIMEOUT_MS));
    }
}
