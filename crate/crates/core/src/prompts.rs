//! Instruction templates, property display names, and rendering of training
//! records and evaluation prompts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec;
use crate::fingerprint::{fnv1a64, mix64};
use crate::pairmine::PairRecord;
use crate::propmodel::{PropertyError, PropertyId, Registry, TaskSpec};

const DEFAULT_TEMPLATES: &str = include_str!("../data/templates.json");

pub const SYSTEM_PROMPT: &str = "You are an expert medicinal chemist specializing in molecular optimization. You understand how structural modifications affect key ADMET properties and inhibitions of common receptor targets like DRD2.";
pub const FEWSHOT_GUIDE: &str = "Use the examples (if provided) as a guide.";
pub const SIMPLE_SUFFIX: &str = "Keep the modifications to the molecule structure as minimal as possible.";
/// How few-shot examples are serialized inside a chat prompt.
pub const FEWSHOT_FORMAT: &str = "Task: <request sentence>\\nAnswer: <SMILES> target </SMILES>";

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("no display name for property {0}")]
    MissingName(PropertyId),
    #[error("no instruction template with index {0}")]
    UnknownTemplate(u8),
    #[error("template {0} is held out and cannot be used for training")]
    HeldOutTemplateInTraining(u8),
    #[error("template set: {0}")]
    Templates(String),
    #[error(transparent)]
    Property(#[from] PropertyError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructionTemplate {
    pub index: u8,
    pub text: String,
    #[serde(default)]
    pub held_out: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateSet {
    templates: Vec<InstructionTemplate>,
}

impl TemplateSet {
    pub fn new(mut templates: Vec<InstructionTemplate>) -> Result<Self, PromptError> {
        templates.sort_by_key(|t| t.index);
        if templates.is_empty() {
            return Err(PromptError::Templates("no templates".into()));
        }
        for w in templates.windows(2) {
            if w[0].index == w[1].index {
                return Err(PromptError::Templates(format!("index {} listed twice", w[0].index)));
            }
        }
        if let Some(t) = templates.iter().find(|t| t.index == 0 || t.text.trim().is_empty()) {
            return Err(PromptError::Templates(format!("template {} is empty or has index 0", t.index)));
        }
        Ok(TemplateSet { templates })
    }

    pub fn from_json(text: &str) -> Result<Self, PromptError> {
        let raw: TemplateSet = serde_json::from_str(text).map_err(|e| PromptError::Templates(e.to_string()))?;
        Self::new(raw.templates)
    }

    pub fn load(path: &Path) -> Result<Self, PromptError> {
        let text = std::fs::read_to_string(path).map_err(|e| PromptError::Templates(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn all(&self) -> &[InstructionTemplate] {
        &self.templates
    }

    pub fn get(&self, index: u8) -> Result<&InstructionTemplate, PromptError> {
        self.templates
            .iter()
            .find(|t| t.index == index)
            .ok_or(PromptError::UnknownTemplate(index))
    }

    /// Indices usable for training corpora.
    pub fn training_indices(&self) -> Vec<u8> {
        self.templates.iter().filter(|t| !t.held_out).map(|t| t.index).collect()
    }

    pub fn held_out_indices(&self) -> Vec<u8> {
        self.templates.iter().filter(|t| t.held_out).map(|t| t.index).collect()
    }
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self::from_json(DEFAULT_TEMPLATES).expect("bundled templates are valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum NameVariant {
    #[default]
    Seen,
    Unseen,
}

impl fmt::Display for NameVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NameVariant::Seen => "seen",
            NameVariant::Unseen => "unseen",
        })
    }
}

impl FromStr for NameVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "seen" => Ok(NameVariant::Seen),
            "unseen" => Ok(NameVariant::Unseen),
            _ => Err(format!("unknown name variant {s:?} (expected seen or unseen)")),
        }
    }
}

/// Display names for properties, one variant at a time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NameSet {
    pub variant: NameVariant,
    pub names: BTreeMap<PropertyId, String>,
}

impl NameSet {
    pub fn from_registry(registry: &Registry, variant: NameVariant) -> Self {
        let names = registry
            .specs()
            .iter()
            .map(|s| {
                let n = match variant {
                    NameVariant::Seen => &s.seen_name,
                    NameVariant::Unseen => &s.unseen_name,
                };
                (s.id, n.clone())
            })
            .collect();
        NameSet { variant, names }
    }

    pub fn name(&self, id: PropertyId) -> Result<&str, PromptError> {
        self.names.get(&id).map(String::as_str).ok_or(PromptError::MissingName(id))
    }
}

/// Directives such as "decrease its Mutagenicity, increase its QED value",
/// comma-joined in letter order with ", and" before the last item.
pub fn render_task_clause(task: &TaskSpec, registry: &Registry, names: &NameSet) -> Result<String, PromptError> {
    let props: Vec<PropertyId> = task.properties.iter().copied().collect();
    let mut items = Vec::with_capacity(props.len());
    for (i, &p) in props.iter().enumerate() {
        let spec = registry.get(p)?;
        let name = names.name(p)?;
        let last = i + 1 == props.len();
        items.push(if spec.higher_is_better {
            format!("increase its {name} value")
        } else if last {
            format!("decrease its {name} value")
        } else {
            format!("decrease its {name}")
        });
    }
    Ok(match items.len() {
        1 => items.pop().expect("one item"),
        n => format!("{}, and {}", items[..n - 1].join(", "), items[n - 1]),
    })
}

pub fn smiles_tag(smiles: &str) -> String {
    format!("<SMILES> {smiles} </SMILES>")
}

/// Inverse of [`smiles_tag`]; tolerant of surrounding text and spacing.
pub fn extract_tagged(text: &str) -> Option<&str> {
    let start = text.find("<SMILES>")? + "<SMILES>".len();
    let end = start + text[start..].find("</SMILES>")?;
    Some(text[start..end].trim())
}

/// "Modify the molecule <SMILES> x </SMILES> to <clause>."
pub fn render_request(input: &str, task: &TaskSpec, registry: &Registry, names: &NameSet) -> Result<String, PromptError> {
    Ok(format!(
        "Modify the molecule {} to {}.",
        smiles_tag(input),
        render_task_clause(task, registry, names)?
    ))
}

/// One instruction-tuning or evaluation record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub task: String,
    pub instruction: String,
    pub input: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    pub template: u8,
    pub names: NameVariant,
}

impl PromptRecord {
    /// The target molecule, without tags.
    pub fn target_smiles(&self) -> Option<&str> {
        self.output.as_deref().and_then(extract_tagged)
    }
}

/// Instruction template followed by the request for `input`.
pub fn render_instruction(
    input: &str,
    task: &TaskSpec,
    template: &InstructionTemplate,
    registry: &Registry,
    names: &NameSet,
) -> Result<String, PromptError> {
    Ok(format!("{}\n\n{}", template.text, render_request(input, task, registry, names)?))
}

/// Wrap an instruction in the tuning-time delimiters.
pub fn wrap_instruction(instruction: &str) -> String {
    format!("[INST]\n{instruction}\n\n[/INST]")
}

pub fn render_training_example(
    pair: &PairRecord,
    task: &TaskSpec,
    template: &InstructionTemplate,
    registry: &Registry,
    names: &NameSet,
    strict: bool,
) -> Result<PromptRecord, PromptError> {
    if strict && template.held_out {
        return Err(PromptError::HeldOutTemplateInTraining(template.index));
    }
    Ok(PromptRecord {
        task: task.name.clone(),
        instruction: render_instruction(&pair.mx, task, template, registry, names)?,
        input: pair.mx.clone(),
        output: Some(smiles_tag(&pair.my)),
        template: template.index,
        names: names.variant,
    })
}

pub fn render_eval_record(
    input: &str,
    task: &TaskSpec,
    template: &InstructionTemplate,
    registry: &Registry,
    names: &NameSet,
) -> Result<PromptRecord, PromptError> {
    Ok(PromptRecord {
        task: task.name.clone(),
        instruction: render_instruction(input, task, template, registry, names)?,
        input: input.to_string(),
        output: None,
        template: template.index,
        names: names.variant,
    })
}

/// Deterministic template pick for a pair, independent of position and
/// thread scheduling.
pub fn pick_template(pair: &PairRecord, choices: &[u8], seed: u64) -> u8 {
    let h = fnv1a64(format!("{}\t{}", pair.mx, pair.my).as_bytes()) ^ seed;
    choices[(mix64(h) % choices.len() as u64) as usize]
}

/// Training records for every pair, each with a template drawn from the
/// non-held-out set. Order follows `pairs`.
pub fn training_corpus(
    pairs: &[PairRecord],
    task: &TaskSpec,
    templates: &TemplateSet,
    registry: &Registry,
    names: &NameSet,
    seed: u64,
) -> Result<Vec<PromptRecord>, PromptError> {
    let choices = templates.training_indices();
    if choices.is_empty() {
        return Err(PromptError::Templates("every template is held out".into()));
    }
    exec::map_ordered(pairs, |p| {
        let t = templates.get(pick_template(p, &choices, seed))?;
        render_training_example(p, task, t, registry, names, true)
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PromptStyle {
    #[default]
    Chat,
    Simple,
}

impl FromStr for PromptStyle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "chat" => Ok(PromptStyle::Chat),
            "simple" => Ok(PromptStyle::Simple),
            _ => Err(format!("unknown prompt style {s:?} (expected chat or simple)")),
        }
    }
}

fn with_guide(text: &str) -> String {
    match text.find(". ") {
        Some(i) => format!("{} {FEWSHOT_GUIDE} {}", &text[..=i], &text[i + 2..]),
        None => format!("{text} {FEWSHOT_GUIDE}"),
    }
}

/// Full evaluation prompt text. The simple style ignores `template` and
/// `fewshot`.
pub fn render_eval_prompt(
    input: &str,
    task: &TaskSpec,
    template: &InstructionTemplate,
    registry: &Registry,
    names: &NameSet,
    style: PromptStyle,
    fewshot: &[PairRecord],
) -> Result<String, PromptError> {
    let request = render_request(input, task, registry, names)?;
    if style == PromptStyle::Simple {
        return Ok(format!("{request} {SIMPLE_SUFFIX}"));
    }
    let mut out = format!(
        "<<SYS>>\n{SYSTEM_PROMPT}\n<</SYS>>\n\n[INST]\n{}\n\n",
        with_guide(&template.text)
    );
    if !fewshot.is_empty() {
        out.push_str("Examples:\n\n");
        for ex in fewshot {
            out.push_str(&format!(
                "Task: {}\nAnswer: {}\n\n",
                render_request(&ex.mx, task, registry, names)?,
                smiles_tag(&ex.my)
            ));
        }
    }
    out.push_str(&format!("Task: {request}\n[/INST]"));
    Ok(out)
}

/// Display names that appear in `text`, with their occurrence counts.
pub fn name_occurrences(text: &str, names: &NameSet, props: &BTreeSet<PropertyId>) -> BTreeMap<PropertyId, usize> {
    props
        .iter()
        .map(|&p| (p, names.names.get(&p).map_or(0, |n| text.matches(n.as_str()).count())))
        .collect()
}
