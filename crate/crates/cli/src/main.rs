mod commands;
mod config;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use molforge::evalengine::ReportFormat;
use molforge::prompts::NameVariant;
use molforge::propmodel::Mode;

use commands::{EmitOptions, EvalStyle, SplitName, TemplateChoice};
use config::{OracleArgs, PipelineConfig};

#[derive(Debug, Parser)]
#[command(name = "molforge", version, about = "Multi-property molecule optimization datasets and evaluation")]
struct Cli {
    /// Pipeline configuration (JSON)
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Base seed for every random choice
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Report errors on stderr as JSON objects
    #[arg(long, global = true)]
    json_errors: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Canonicalize SMILES, one per line
    Canon {
        #[arg(default_value = "-")]
        input: PathBuf,
        #[arg(short, long, default_value = "-")]
        out: PathBuf,
    },
    /// Parse and valence-check SMILES
    Validate {
        #[arg(default_value = "-")]
        input: PathBuf,
        #[arg(short, long, default_value = "-")]
        out: PathBuf,
    },
    /// Write a fingerprint cache
    Fp {
        #[arg(default_value = "-")]
        input: PathBuf,
        #[arg(short, long, default_value = "-")]
        out: PathBuf,
    },
    /// Tanimoto similarity of two molecules, or all similar pairs in a file
    Sim {
        #[arg(num_args = 0..=2)]
        smiles: Vec<String>,
        #[arg(long, conflicts_with = "smiles")]
        input: Option<PathBuf>,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(short, long, default_value = "-")]
        out: PathBuf,
    },
    /// Score molecules with the configured oracle
    Score {
        #[arg(default_value = "-")]
        input: PathBuf,
        /// Property letters to score
        #[arg(long)]
        props: String,
        #[command(flatten)]
        oracle: OracleArgs,
        #[arg(short, long, default_value = "-")]
        out: PathBuf,
    },
    /// Find similar molecule pairs in a scored pool
    MinePairs {
        /// Score table of the molecule pool
        #[arg(long)]
        pool: PathBuf,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(short, long, default_value = "-")]
        out: PathBuf,
    },
    /// Keep the pairs that satisfy a task
    FilterPairs {
        /// Pair TSV (mx, my, optional <L>_x/<L>_y columns) or pair JSONL
        input: PathBuf,
        #[arg(long)]
        task: String,
        #[arg(long)]
        mode: Option<Mode>,
        #[command(flatten)]
        oracle: OracleArgs,
        #[arg(short, long, default_value = "-")]
        out: PathBuf,
    },
    /// Build train/val (and optionally test) splits for every task
    BuildTasks {
        /// Candidate pairs from mine-pairs
        #[arg(long)]
        candidates: PathBuf,
        /// Score table for test-set sampling
        #[arg(long)]
        pool: Option<PathBuf>,
        #[arg(long)]
        min_props: Option<usize>,
        /// Comma-separated task names; all tasks when omitted
        #[arg(long, value_delimiter = ',')]
        tasks: Option<Vec<String>>,
        #[arg(long)]
        mode: Option<Mode>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Sample test molecules for built tasks
    BuildTestset {
        /// A task directory or a directory of them
        #[arg(long)]
        task_dir: PathBuf,
        #[arg(long)]
        pool: PathBuf,
    },
    /// Summarize built tasks
    Stats {
        task_dir: PathBuf,
        #[arg(short, long, default_value = "-")]
        out: PathBuf,
    },
    /// Render instruction records for a task split
    EmitPrompts {
        #[arg(long)]
        task_dir: PathBuf,
        #[arg(long, value_enum, default_value = "train")]
        split: SplitName,
        #[arg(long, default_value = "seen")]
        names: NameVariant,
        /// `auto` or a template index
        #[arg(long, default_value = "auto")]
        template: TemplateChoice,
        #[arg(long, value_enum, default_value = "chat")]
        style: EvalStyle,
        /// Worked examples drawn from the training split
        #[arg(long, default_value_t = 0)]
        fewshot: usize,
        /// Permit held-out templates in training records
        #[arg(long)]
        allow_held_out: bool,
        #[arg(short, long, default_value = "-")]
        out: PathBuf,
    },
    /// Judge generated candidates
    Evaluate {
        /// Generations JSONL: {task, input, candidates}
        generations: PathBuf,
        /// Training molecules, for novelty
        #[arg(long)]
        train_mols: Option<PathBuf>,
        #[arg(long)]
        mode: Option<Mode>,
        #[command(flatten)]
        oracle: OracleArgs,
        #[arg(short, long, default_value = "-")]
        out: PathBuf,
    },
    /// Aggregate evaluated cases into a report
    Report {
        #[arg(required = true)]
        cases: Vec<PathBuf>,
        #[arg(long, default_value = "tsv")]
        format: ReportFormat,
        #[arg(short, long, default_value = "-")]
        out: PathBuf,
    },
}

/// An error caused by how the tool was invoked rather than by the data.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(String);

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Per-item problems that do not stop a command.
pub struct Reporter {
    json: bool,
}

impl Reporter {
    pub fn item(&self, line: usize, input: &str, reason: &str) {
        if self.json {
            eprintln!("{}", serde_json::json!({ "level": "warning", "line": line, "input": input, "reason": reason }));
        } else {
            eprintln!("warning: line {line}: {input}: {reason}");
        }
    }
}

fn run(cli: Cli, rep: &Reporter) -> Result<bool> {
    let mut cfg = PipelineConfig::load(cli.config.as_deref())?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    #[cfg(feature = "parallel")]
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| usage(e.to_string()))?;
    }
    let mut clean = true;
    match cli.command {
        Command::Canon { input, out } => clean = commands::canon(&input, &out, &cfg, rep)?,
        Command::Validate { input, out } => commands::validate_cmd(&input, &out, &cfg)?,
        Command::Fp { input, out } => clean = commands::fp(&input, &out, &cfg, rep)?,
        Command::Sim { smiles, input, threshold, out } => {
            commands::sim(&smiles, input.as_deref(), threshold, &out, &cfg)?
        }
        Command::Score { input, props, oracle, out } => {
            cfg.apply_oracle(&oracle);
            clean = commands::score(&input, &props, &out, &cfg, rep)?
        }
        Command::MinePairs { pool, threshold, out } => {
            if let Some(t) = threshold {
                cfg.mining.threshold = t;
            }
            commands::mine(&pool, &out, &cfg)?
        }
        Command::FilterPairs { input, task, mode, oracle, out } => {
            cfg.apply_oracle(&oracle);
            if let Some(m) = mode {
                cfg.mode = m;
            }
            clean = commands::filter(&input, &task, &out, &cfg, rep)?
        }
        Command::BuildTasks { candidates, pool, min_props, tasks, mode, out_dir } => {
            if let Some(n) = min_props {
                cfg.min_props = n;
            }
            if tasks.is_some() {
                cfg.tasks = tasks;
            }
            if let Some(m) = mode {
                cfg.mode = m;
            }
            let n = commands::build_tasks(&candidates, pool.as_deref(), &out_dir, &cfg)?;
            eprintln!("built {n} tasks in {}", out_dir.display());
        }
        Command::BuildTestset { task_dir, pool } => commands::build_testset_cmd(&task_dir, &pool, &cfg)?,
        Command::Stats { task_dir, out } => commands::stats(&task_dir, &out, &cfg)?,
        Command::EmitPrompts { task_dir, split, names, template, style, fewshot, allow_held_out, out } => {
            let opts = EmitOptions { split, names, template, style, fewshot, allow_held_out };
            commands::emit_prompts(&task_dir, &out, &opts, &cfg)?
        }
        Command::Evaluate { generations, train_mols, mode, oracle, out } => {
            cfg.apply_oracle(&oracle);
            if let Some(m) = mode {
                cfg.eval_mode = m;
            }
            commands::evaluate(&generations, train_mols.as_deref(), &out, &cfg)?
        }
        Command::Report { cases, format, out } => commands::report(&cases, format, &out, &cfg)?,
    }
    Ok(clean)
}

/// Output closed early by the reader, as with `| head`.
fn broken_pipe(e: &anyhow::Error) -> bool {
    e.chain()
        .filter_map(|c| c.downcast_ref::<std::io::Error>())
        .any(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(if code == 0 { 0 } else { 2 });
        }
    };
    let rep = Reporter { json: cli.json_errors };
    match run(cli, &rep) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) if broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            let code = if e.downcast_ref::<UsageError>().is_some() { 2 } else { 1 };
            if rep.json {
                let chain: Vec<String> = e.chain().skip(1).map(|c| c.to_string()).collect();
                eprintln!("{}", serde_json::json!({ "level": "error", "error": e.to_string(), "causes": chain, "exit_code": code }));
            } else {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(code)
        }
    }
}
