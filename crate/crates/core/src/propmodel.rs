//! Properties, optimization directions, improvement thresholds and tasks.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PropertyError {
    #[error("{0:?} is not a property letter (expected one uppercase ASCII letter)")]
    BadLetter(String),
    #[error("property {0} is not in the registry")]
    UnknownProperty(PropertyId),
    #[error("missing score for property {0}")]
    MissingScore(PropertyId),
    #[error("score {value} for property {id} is outside [0, 1]")]
    OutOfRange { id: PropertyId, value: f64 },
    #[error("task has no properties")]
    EmptyTask,
    #[error("duplicate property {0} in registry")]
    DuplicateProperty(PropertyId),
    #[error("registry config: {0}")]
    Config(String),
}

/// A property identified by a single uppercase letter. Ordering is
/// alphabetical, which for the defaults gives B < D < H < M < P < Q.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PropertyId(u8);

impl PropertyId {
    pub const BBBP: PropertyId = PropertyId(b'B');
    pub const DRD2: PropertyId = PropertyId(b'D');
    pub const HIA: PropertyId = PropertyId(b'H');
    pub const MUTAG: PropertyId = PropertyId(b'M');
    pub const PLOGP: PropertyId = PropertyId(b'P');
    pub const QED: PropertyId = PropertyId(b'Q');
    /// Synthetic accessibility. Reported, never optimized.
    pub const SAS: PropertyId = PropertyId(b'S');

    pub fn new(letter: char) -> Result<Self, PropertyError> {
        if letter.is_ascii_uppercase() {
            Ok(PropertyId(letter as u8))
        } else {
            Err(PropertyError::BadLetter(letter.to_string()))
        }
    }

    pub fn letter(self) -> char {
        self.0 as char
    }
}

impl fmt::Display for PropertyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for PropertyId {
    type Err = PropertyError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => PropertyId::new(c),
            _ => Err(PropertyError::BadLetter(s.to_string())),
        }
    }
}

impl Serialize for PropertyId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PropertyId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parse a letter string such as `"BDPQ"` into a property set.
pub fn parse_letters(s: &str) -> Result<BTreeSet<PropertyId>, PropertyError> {
    s.chars().map(PropertyId::new).collect()
}

pub fn letters(props: &BTreeSet<PropertyId>) -> String {
    props.iter().map(|p| p.letter()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertySpec {
    pub id: PropertyId,
    pub seen_name: String,
    pub unseen_name: String,
    pub higher_is_better: bool,
    pub delta: f64,
    pub bounded01: bool,
    pub skewed: bool,
}

impl PropertySpec {
    /// Signed change from `x` to `y`; positive means `y` is better.
    pub fn oriented_gain(&self, x: f64, y: f64) -> f64 {
        if self.higher_is_better {
            y - x
        } else {
            x - y
        }
    }

    /// Whether `value` is strictly worse than `reference`.
    pub fn worse_than(&self, value: f64, reference: f64) -> bool {
        if self.higher_is_better {
            value < reference
        } else {
            value > reference
        }
    }
}

pub fn oriented_gain(spec: &PropertySpec, x: f64, y: f64) -> f64 {
    spec.oriented_gain(x, y)
}

pub fn worse_than(spec: &PropertySpec, value: f64, reference: f64) -> bool {
    spec.worse_than(value, reference)
}

/// Absolute slack on threshold comparisons, so a gain of exactly the
/// threshold survives floating-point subtraction (0.6 - 0.4 < 0.2).
pub const DELTA_TOLERANCE: f64 = 1e-9;

/// Pair-acceptance mode: `Strict` demands a gain of at least Δ on every
/// property, `Loose` any positive gain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Strict,
    #[default]
    Loose,
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strict" => Ok(Mode::Strict),
            "loose" => Ok(Mode::Loose),
            _ => Err(format!("unknown mode {s:?} (expected strict or loose)")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Strict => "strict",
            Mode::Loose => "loose",
        })
    }
}

/// How the strict threshold treats a gain exactly equal to Δ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DeltaBoundary {
    #[default]
    Inclusive,
    Exclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Registry {
    properties: Vec<PropertySpec>,
    #[serde(default)]
    delta_boundary: DeltaBoundary,
}

impl Default for Registry {
    fn default() -> Self {
        let spec = |id, seen: &str, unseen: &str, up, delta, bounded01| PropertySpec {
            id,
            seen_name: seen.into(),
            unseen_name: unseen.into(),
            higher_is_better: up,
            delta,
            bounded01,
            skewed: !bounded01,
        };
        Registry {
            properties: vec![
                spec(PropertyId::BBBP, "BBB permeability", "Blood-brain barrier permeability (BBBP)", true, 0.2, true),
                spec(PropertyId::DRD2, "DRD2 inhibition", "inhibition probability of Dopamine receptor D2", true, 0.2, true),
                spec(PropertyId::HIA, "Intestinal adsorption", "human intestinal adsorption ability", true, 0.1, true),
                spec(
                    PropertyId::MUTAG,
                    "Mutagenicity",
                    "probability to induce genetic alterations (mutagenicity)",
                    false,
                    0.1,
                    true,
                ),
                spec(
                    PropertyId::PLOGP,
                    "Penalized octanol-water partition coefficient (penalized logP)",
                    "Penalized logP which is logP penalized by synthetic accessibility score and number of large rings",
                    true,
                    1.0,
                    false,
                ),
                spec(PropertyId::QED, "QED", "drug-likeness quantified by QED score", true, 0.1, true),
            ],
            delta_boundary: DeltaBoundary::Inclusive,
        }
    }
}

impl Registry {
    pub fn new(mut properties: Vec<PropertySpec>, delta_boundary: DeltaBoundary) -> Result<Self, PropertyError> {
        properties.sort_by_key(|p| p.id);
        for w in properties.windows(2) {
            if w[0].id == w[1].id {
                return Err(PropertyError::DuplicateProperty(w[0].id));
            }
        }
        for p in &properties {
            if !(p.delta >= 0.0 && p.delta.is_finite()) {
                return Err(PropertyError::Config(format!("delta for {} must be a non-negative number", p.id)));
            }
        }
        Ok(Registry {
            properties,
            delta_boundary,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, PropertyError> {
        let raw: Registry = serde_json::from_str(text).map_err(|e| PropertyError::Config(e.to_string()))?;
        Registry::new(raw.properties, raw.delta_boundary)
    }

    pub fn load(path: &Path) -> Result<Self, PropertyError> {
        let text = std::fs::read_to_string(path).map_err(|e| PropertyError::Config(format!("{}: {e}", path.display())))?;
        Registry::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("registry serializes")
    }

    pub fn delta_boundary(&self) -> DeltaBoundary {
        self.delta_boundary
    }

    pub fn with_delta_boundary(mut self, boundary: DeltaBoundary) -> Self {
        self.delta_boundary = boundary;
        self
    }

    /// Specs in global letter order.
    pub fn specs(&self) -> &[PropertySpec] {
        &self.properties
    }

    pub fn ids(&self) -> Vec<PropertyId> {
        self.properties.iter().map(|p| p.id).collect()
    }

    pub fn get(&self, id: PropertyId) -> Result<&PropertySpec, PropertyError> {
        self.properties
            .binary_search_by_key(&id, |p| p.id)
            .map(|i| &self.properties[i])
            .map_err(|_| PropertyError::UnknownProperty(id))
    }

    fn passes(&self, spec: &PropertySpec, gain: f64, mode: Mode) -> bool {
        match (mode, self.delta_boundary) {
            (Mode::Loose, _) => gain > 0.0,
            (Mode::Strict, DeltaBoundary::Inclusive) => gain >= spec.delta - DELTA_TOLERANCE,
            (Mode::Strict, DeltaBoundary::Exclusive) => gain > spec.delta + DELTA_TOLERANCE,
        }
    }

    /// Whether `vy` improves on `vx` for every property of `task`.
    pub fn satisfies_pair(
        &self,
        task: &TaskSpec,
        vx: &PropertyVector,
        vy: &PropertyVector,
        mode: Mode,
    ) -> Result<bool, PropertyError> {
        let mut all = true;
        for &id in &task.properties {
            let spec = self.get(id)?;
            let x = vx.require(id)?;
            let y = vy.require(id)?;
            all &= self.passes(spec, spec.oriented_gain(x, y), mode);
        }
        Ok(all)
    }

    /// Check that bounded properties lie in `[0, 1]`.
    pub fn check_vector(&self, v: &PropertyVector) -> Result<(), PropertyError> {
        for (&id, &value) in &v.scores {
            if let Ok(spec) = self.get(id) {
                if spec.bounded01 && !(0.0..=1.0).contains(&value) {
                    return Err(PropertyError::OutOfRange { id, value });
                }
            }
        }
        Ok(())
    }
}

pub fn satisfies_pair(
    task: &TaskSpec,
    registry: &Registry,
    vx: &PropertyVector,
    vy: &PropertyVector,
    mode: Mode,
) -> Result<bool, PropertyError> {
    registry.satisfies_pair(task, vx, vy, mode)
}

/// Scores for some subset of properties.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PropertyVector {
    pub scores: BTreeMap<PropertyId, f64>,
}

impl PropertyVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, id: PropertyId, value: f64) -> Self {
        self.scores.insert(id, value);
        self
    }

    pub fn get(&self, id: PropertyId) -> Option<f64> {
        self.scores.get(&id).copied()
    }

    pub fn require(&self, id: PropertyId) -> Result<f64, PropertyError> {
        self.get(id).ok_or(PropertyError::MissingScore(id))
    }

    pub fn insert(&mut self, id: PropertyId, value: f64) {
        self.scores.insert(id, value);
    }

    /// Restriction to `props`; fails if any is absent.
    pub fn project(&self, props: &BTreeSet<PropertyId>) -> Result<PropertyVector, PropertyError> {
        let mut out = PropertyVector::new();
        for &p in props {
            out.insert(p, self.require(p)?);
        }
        Ok(out)
    }
}

impl FromIterator<(PropertyId, f64)> for PropertyVector {
    fn from_iter<I: IntoIterator<Item = (PropertyId, f64)>>(iter: I) -> Self {
        PropertyVector {
            scores: iter.into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Category {
    /// General drug-likeness and toxicity.
    GT,
    /// Context-specific.
    CS,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Split {
    IND,
    OOD,
    #[serde(rename = "TRAIN_ONLY")]
    TrainOnly,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TaskSpec {
    pub properties: BTreeSet<PropertyId>,
    pub name: String,
    pub category: Category,
    pub split: Split,
}

/// Evaluation tasks whose property combinations are used in training.
pub const IND_TASKS: [&str; 5] = ["BDP", "BDQ", "BPQ", "DPQ", "BDPQ"];
/// Evaluation tasks with property combinations held out of training.
pub const OOD_TASKS: [&str; 5] = ["MPQ", "BDMQ", "BHMQ", "BMPQ", "HMPQ"];

impl TaskSpec {
    /// Task with default category and split.
    pub fn new(properties: BTreeSet<PropertyId>) -> Result<Self, PropertyError> {
        if properties.is_empty() {
            return Err(PropertyError::EmptyTask);
        }
        let name = letters(&properties);
        let category = default_category(&properties);
        let split = if IND_TASKS.contains(&name.as_str()) {
            Split::IND
        } else if OOD_TASKS.contains(&name.as_str()) {
            Split::OOD
        } else {
            Split::TrainOnly
        };
        Ok(TaskSpec {
            properties,
            name,
            category,
            split,
        })
    }

    pub fn from_letters(s: &str) -> Result<Self, PropertyError> {
        TaskSpec::new(parse_letters(s)?)
    }

    pub fn contains(&self, id: PropertyId) -> bool {
        self.properties.contains(&id)
    }
}

/// Context-specific when BBBP or DRD2 is involved, otherwise general.
pub fn default_category(props: &BTreeSet<PropertyId>) -> Category {
    if props.contains(&PropertyId::BBBP) || props.contains(&PropertyId::DRD2) {
        Category::CS
    } else {
        Category::GT
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reg() -> Registry {
        Registry::default()
    }

    fn vec_of(pairs: &[(char, f64)]) -> PropertyVector {
        pairs.iter().map(|&(c, v)| (PropertyId::new(c).unwrap(), v)).collect()
    }

    #[test]
    fn default_registry_matches_published_thresholds() {
        let r = reg();
        let got: Vec<(char, f64, bool)> = r
            .specs()
            .iter()
            .map(|s| (s.id.letter(), s.delta, s.higher_is_better))
            .collect();
        assert_eq!(
            got,
            vec![
                ('B', 0.2, true),
                ('D', 0.2, true),
                ('H', 0.1, true),
                ('M', 0.1, false),
                ('P', 1.0, true),
                ('Q', 0.1, true)
            ]
        );
        assert!(r.specs().iter().all(|s| s.bounded01 == (s.id != PropertyId::PLOGP)));
        assert!(r.specs().iter().all(|s| s.skewed == (s.id == PropertyId::PLOGP)));
    }

    #[test]
    fn gains() {
        let r = reg();
        let q = r.get(PropertyId::QED).unwrap();
        assert!((q.oriented_gain(0.4, 0.5) - 0.1).abs() < 1e-12);
        let m = r.get(PropertyId::MUTAG).unwrap();
        assert!((m.oriented_gain(0.6, 0.45) - 0.15).abs() < 1e-12);
        assert_eq!(q.oriented_gain(0.3, 0.3), 0.0);
    }

    #[test]
    fn worse_than_examples() {
        let r = reg();
        assert!(r.get(PropertyId::BBBP).unwrap().worse_than(0.34, 0.51));
        assert!(r.get(PropertyId::MUTAG).unwrap().worse_than(0.71, 0.50));
        assert!(!r.get(PropertyId::QED).unwrap().worse_than(0.5, 0.5));
    }

    #[test]
    fn strict_and_loose_pairs() {
        let r = reg();
        let task = TaskSpec::from_letters("BDP").unwrap();
        let x = vec_of(&[('B', 0.1), ('D', 0.1), ('P', -2.0)]);
        let y = vec_of(&[('B', 0.35), ('D', 0.4), ('P', -0.8)]);
        assert!(r.satisfies_pair(&task, &x, &y, Mode::Strict).unwrap());
        let y2 = vec_of(&[('B', 0.35), ('D', 0.25), ('P', -0.8)]);
        assert!(!r.satisfies_pair(&task, &x, &y2, Mode::Strict).unwrap());
        assert!(r.satisfies_pair(&task, &x, &y2, Mode::Loose).unwrap());
        assert!(!r.satisfies_pair(&task, &x, &x, Mode::Loose).unwrap());
        let partial = vec_of(&[('B', 0.35)]);
        assert_eq!(
            r.satisfies_pair(&task, &x, &partial, Mode::Loose),
            Err(PropertyError::MissingScore(PropertyId::DRD2))
        );
    }

    #[test]
    fn delta_boundary_is_configurable() {
        let task = TaskSpec::from_letters("P").unwrap();
        let x = vec_of(&[('P', -2.0)]);
        let y = vec_of(&[('P', -1.0)]);
        assert!(reg().satisfies_pair(&task, &x, &y, Mode::Strict).unwrap());
        let exclusive = reg().with_delta_boundary(DeltaBoundary::Exclusive);
        assert!(!exclusive.satisfies_pair(&task, &x, &y, Mode::Strict).unwrap());
    }

    #[test]
    fn task_names_and_defaults() {
        let t = TaskSpec::from_letters("QPDB").unwrap();
        assert_eq!(t.name, "BDPQ");
        assert_eq!((t.category, t.split), (Category::CS, Split::IND));
        let t = TaskSpec::from_letters("MPQ").unwrap();
        assert_eq!((t.category, t.split), (Category::GT, Split::OOD));
        let t = TaskSpec::from_letters("HQ").unwrap();
        assert_eq!((t.category, t.split), (Category::GT, Split::TrainOnly));
        assert_eq!(TaskSpec::from_letters(""), Err(PropertyError::EmptyTask));
        assert!(TaskSpec::from_letters("Bx").is_err());
    }

    #[test]
    fn registry_json_round_trip() {
        let r = reg();
        let back = Registry::from_json(&r.to_json()).unwrap();
        assert_eq!(back, r);
        let extended = r#"{"properties":[{"id":"Z","seen_name":"zeta","unseen_name":"zeta score",
            "higher_is_better":false,"delta":0.5,"bounded01":false,"skewed":false}]}"#;
        let z = Registry::from_json(extended).unwrap();
        assert_eq!(z.ids(), vec![PropertyId::new('Z').unwrap()]);
        assert_eq!(z.delta_boundary(), DeltaBoundary::Inclusive);
    }

    #[test]
    fn bounded_scores_checked() {
        let r = reg();
        assert!(r.check_vector(&vec_of(&[('Q', 0.5), ('P', -30.0)])).is_ok());
        assert!(r.check_vector(&vec_of(&[('Q', 1.5)])).is_err());
    }
}
