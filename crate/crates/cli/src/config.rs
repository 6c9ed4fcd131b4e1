use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use molforge::oracle::{BackendConfig, OracleConfig, SubprocessConfig};
use molforge::pairmine::MiningConfig;
use molforge::prompts::TemplateSet;
use molforge::propmodel::{Mode, Registry};
use molforge::taskforge::SplitConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Settings shared by every command. Loaded from `--config`, then
/// overridden by command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub registry: Option<PathBuf>,
    pub templates: Option<PathBuf>,
    pub oracle: Option<OracleConfig>,
    pub split: SplitConfig,
    pub mining: MiningConfig,
    /// Pair acceptance mode when building tasks.
    pub mode: Mode,
    /// Success criterion when evaluating generations.
    pub eval_mode: Mode,
    pub min_props: usize,
    pub tasks: Option<Vec<String>>,
    /// Worker cap. Not serialized: outputs do not depend on it.
    #[serde(skip_serializing)]
    pub threads: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: SplitConfig::default().seed,
            registry: None,
            templates: None,
            oracle: None,
            split: SplitConfig::default(),
            mining: MiningConfig::default(),
            mode: Mode::Strict,
            eval_mode: Mode::Loose,
            min_props: 1,
            tasks: None,
            threads: None,
        }
    }
}

/// Oracle selection flags shared by commands that score molecules.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct OracleArgs {
    /// Score table (TSV with a `smiles` column and one column per letter)
    #[arg(long, value_name = "TSV", conflicts_with_all = ["mock", "scorer"])]
    pub scores: Option<PathBuf>,
    /// Deterministic hash-based scores, for testing
    #[arg(long, conflicts_with = "scorer")]
    pub mock: bool,
    /// External scorer command speaking the JSON Lines protocol
    #[arg(long, value_name = "CMD")]
    pub scorer: Option<String>,
    /// Per-request scorer timeout in milliseconds
    #[arg(long, value_name = "MS", requires = "scorer")]
    pub scorer_timeout: Option<u64>,
}

impl OracleArgs {
    pub fn backend(&self) -> Option<BackendConfig> {
        if let Some(p) = &self.scores {
            return Some(BackendConfig::Table { path: p.clone() });
        }
        if self.mock {
            return Some(BackendConfig::Mock);
        }
        let cmd = self.scorer.as_ref()?;
        let mut parts = cmd.split_whitespace().map(str::to_string);
        let mut cfg = SubprocessConfig::new(parts.next()?, parts.collect());
        if let Some(ms) = self.scorer_timeout {
            cfg.timeout_ms = ms;
        }
        Some(BackendConfig::Subprocess(cfg))
    }
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let cfg: PipelineConfig = match path {
            None => PipelineConfig::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?
            }
        };
        cfg.check_files()?;
        Ok(cfg)
    }

    fn check_files(&self) -> Result<()> {
        let mut paths: Vec<&Path> = self.registry.iter().chain(&self.templates).map(PathBuf::as_path).collect();
        if let Some(OracleConfig {
            backend: BackendConfig::Table { path },
            ..
        }) = &self.oracle
        {
            paths.push(path);
        }
        for p in paths {
            if !p.exists() {
                bail!("config references missing file {}", p.display());
            }
        }
        Ok(())
    }

    pub fn apply_oracle(&mut self, args: &OracleArgs) {
        if let Some(backend) = args.backend() {
            match &mut self.oracle {
                Some(o) => o.backend = backend,
                None => {
                    self.oracle = Some(OracleConfig {
                        backend,
                        properties_required: String::new(),
                        cache_enabled: true,
                    })
                }
            }
        }
    }

    pub fn registry(&self) -> Result<Registry> {
        match &self.registry {
            None => Ok(Registry::default()),
            Some(p) => Registry::load(p).with_context(|| format!("loading registry {}", p.display())),
        }
    }

    pub fn templates(&self) -> Result<TemplateSet> {
        match &self.templates {
            None => Ok(TemplateSet::default()),
            Some(p) => Ok(TemplateSet::load(p)?),
        }
    }

    /// Split settings with the pipeline seed applied.
    pub fn split(&self) -> SplitConfig {
        SplitConfig {
            seed: self.seed,
            ..self.split
        }
    }

    /// Hex SHA-256 of the effective configuration.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex(&Sha256::digest(bytes))
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
