//! Path handling with `-` for stdin/stdout, and sidecar manifests.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{hex, PipelineConfig};

pub fn is_std(path: &Path) -> bool {
    path.as_os_str() == "-"
}

pub fn open_in(path: &Path) -> Result<Box<dyn BufRead>> {
    if is_std(path) {
        return Ok(Box::new(BufReader::new(io::stdin())));
    }
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(Box::new(BufReader::new(f)))
}

pub fn read_to_string(path: &Path) -> Result<String> {
    let mut s = String::new();
    open_in(path)?.read_to_string(&mut s).with_context(|| format!("reading {}", path.display()))?;
    Ok(s)
}

/// SMILES from a line-oriented file: first whitespace token of each line,
/// skipping blanks and `#` comments. Yields (line number, token).
pub fn smiles_lines(reader: Box<dyn BufRead>) -> impl Iterator<Item = Result<(usize, String)>> {
    reader.lines().enumerate().filter_map(|(i, line)| match line {
        Err(e) => Some(Err(e.into())),
        Ok(l) => {
            let tok = l.split_whitespace().next()?;
            (!tok.starts_with('#')).then(|| Ok((i + 1, tok.to_string())))
        }
    })
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let mut h = Sha256::new();
    let mut f = File::open(path).with_context(|| format!("hashing {}", path.display()))?;
    io::copy(&mut f, &mut h)?;
    Ok(hex(&h.finalize()))
}

#[derive(Serialize)]
struct InputRecord {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    seed: u64,
    config_hash: String,
    config: &'a PipelineConfig,
    inputs: Vec<InputRecord>,
    output: String,
    output_sha256: String,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    extra: serde_json::Value,
}

/// Provenance shared by every output file of one command invocation.
pub struct Provenance<'a> {
    pub command: &'a str,
    pub config: &'a PipelineConfig,
    inputs: Vec<InputRecord>,
}

impl<'a> Provenance<'a> {
    pub fn new(command: &'a str, config: &'a PipelineConfig) -> Self {
        Provenance {
            command,
            config,
            inputs: Vec::new(),
        }
    }

    /// Record an input file by path and content hash. Stdin is recorded
    /// without a hash.
    pub fn input(&mut self, path: &Path) -> Result<()> {
        let sha256 = if is_std(path) { String::new() } else { file_sha256(path)? };
        self.inputs.push(InputRecord {
            path: path.display().to_string(),
            sha256,
        });
        Ok(())
    }

    fn write_manifest(&self, out: &Path, digest: String, extra: serde_json::Value) -> Result<()> {
        let m = Manifest {
            tool: "molforge",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            seed: self.config.seed,
            config_hash: self.config.hash(),
            config: self.config,
            inputs: self
                .inputs
                .iter()
                .map(|i| InputRecord {
                    path: i.path.clone(),
                    sha256: i.sha256.clone(),
                })
                .collect(),
            output: out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
            output_sha256: digest,
            extra,
        };
        let path = sidecar(out);
        let mut text = serde_json::to_string_pretty(&m)?;
        text.push('\n');
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }
}

pub fn sidecar(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

struct Hashing<W> {
    inner: W,
    hasher: Sha256,
}

impl<W: Write> Write for Hashing<W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.hasher.update(&buf[..n]);
        Ok(n)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

/// A streaming output file or stdout. Files get a manifest on `finish`.
pub struct Output {
    path: Option<PathBuf>,
    sink: Hashing<Box<dyn Write>>,
    extra: serde_json::Value,
}

impl Output {
    pub fn create(path: &Path) -> Result<Self> {
        let (path, inner): (Option<PathBuf>, Box<dyn Write>) = if is_std(path) {
            (None, Box::new(BufWriter::new(io::stdout())))
        } else {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            (Some(path.to_path_buf()), Box::new(BufWriter::new(f)))
        };
        Ok(Output {
            path,
            sink: Hashing {
                inner,
                hasher: Sha256::new(),
            },
            extra: serde_json::Value::Null,
        })
    }

    /// Extra command-specific fields for the manifest.
    pub fn note(&mut self, extra: serde_json::Value) {
        self.extra = extra;
    }

    pub fn finish(mut self, prov: &Provenance) -> Result<()> {
        self.sink.flush()?;
        if let Some(p) = &self.path {
            let digest = hex(&self.sink.hasher.clone().finalize());
            prov.write_manifest(p, digest, std::mem::take(&mut self.extra))?;
        }
        Ok(())
    }
}

impl Write for Output {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.sink.write(buf)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.sink.flush()
    }
}
