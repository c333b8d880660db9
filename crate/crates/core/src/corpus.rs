//! Domain types shared by every stage, and their line-delimited JSON formats.

use std::collections::BTreeSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::taxonomy::{RelationType, NUM_RELATIONS};

/// Role of one line of a teleplay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructuralRole {
    SceneHeader,
    SpeakerLabel,
    SpeakerNote,
    /// Spoken line. Lines at the dialogue column are merged into turns.
    Dialogue,
    ActionStatement,
    Other,
}

impl StructuralRole {
    pub fn as_str(self) -> &'static str {
        match self {
            StructuralRole::SceneHeader => "scene_header",
            StructuralRole::SpeakerLabel => "speaker_label",
            StructuralRole::SpeakerNote => "speaker_note",
            StructuralRole::Dialogue => "dialogue",
            StructuralRole::ActionStatement => "action_statement",
            StructuralRole::Other => "other",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "scene_header" => StructuralRole::SceneHeader,
            "speaker_label" => StructuralRole::SpeakerLabel,
            "speaker_note" => StructuralRole::SpeakerNote,
            "dialogue" => StructuralRole::Dialogue,
            "action_statement" => StructuralRole::ActionStatement,
            "other" => StructuralRole::Other,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub speaker: String,
    pub note: Option<String>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Element {
    Turn(Turn),
    Background { text: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scene {
    pub index: usize,
    pub header: String,
    pub elements: Vec<Element>,
}

impl Scene {
    pub fn turns(&self) -> impl Iterator<Item = &Turn> {
        self.elements.iter().filter_map(|e| match e {
            Element::Turn(t) => Some(t),
            Element::Background { .. } => None,
        })
    }

    /// Distinct speakers in order of first appearance.
    pub fn speakers(&self) -> Vec<&str> {
        let mut seen = Vec::new();
        for t in self.turns() {
            if !seen.contains(&t.speaker.as_str()) {
                seen.push(t.speaker.as_str());
            }
        }
        seen
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
    #[default]
    Unassigned,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
            Split::Unassigned => "unassigned",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            "unassigned" => Ok(Split::Unassigned),
            _ => Err(Error::Invalid(format!("unknown split `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Teleplay {
    pub title_id: String,
    pub split: Split,
    pub scenes: Vec<Scene>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationRecord {
    pub title_id: String,
    pub head: String,
    pub tail: String,
    pub relations: BTreeSet<RelationType>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EpisodeMeta {
    pub season: u32,
    pub episode: u32,
}

/// Identifies one classification example.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct InstanceKey {
    pub title_id: String,
    pub scene_index: usize,
    pub head: String,
    pub tail: String,
}

impl fmt::Display for InstanceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}:{}->{}", self.title_id, self.scene_index, self.head, self.tail)
    }
}

/// One (scene, head, tail, label) example with its serialized scene.
///
/// `attribution[j]` names the speaker whose turn produced `tokens[j]`, or is
/// `None` for markers, the scene header and background text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadInstance {
    pub title_id: String,
    pub scene_index: usize,
    pub head: String,
    pub tail: String,
    pub label: RelationType,
    pub tokens: Vec<String>,
    pub attribution: Vec<Option<String>>,
    pub season: Option<u32>,
    pub episode: Option<u32>,
}

impl DyadInstance {
    pub fn key(&self) -> InstanceKey {
        InstanceKey {
            title_id: self.title_id.clone(),
            scene_index: self.scene_index,
            head: self.head.clone(),
            tail: self.tail.clone(),
        }
    }

    pub fn episode_meta(&self) -> Option<EpisodeMeta> {
        match (self.season, self.episode) {
            (Some(season), Some(episode)) => Some(EpisodeMeta { season, episode }),
            _ => None,
        }
    }
}

/// Probability mass over the taxonomy, indexed by rank order.
///
/// Serialized as a JSON object from label to probability, in rank order.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() != NUM_RELATIONS {
            return Err(Error::Shape(format!(
                "distribution has {} entries, expected {NUM_RELATIONS}",
                probs.len()
            )));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Invalid("distribution has a negative or non-finite entry".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Invalid(format!("distribution sums to {total}, not 1")));
        }
        Ok(Distribution(probs))
    }

    pub fn one_hot(label: RelationType) -> Self {
        let mut probs = vec![0.0; NUM_RELATIONS];
        probs[label.index()] = 1.0;
        Distribution(probs)
    }

    pub fn prob(&self, label: RelationType) -> f64 {
        self.0[label.index()]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Most probable label; ties go to the lowest rank.
    pub fn argmax(&self) -> RelationType {
        let mut best = 0;
        for (i, &p) in self.0.iter().enumerate() {
            if p > self.0[best] {
                best = i;
            }
        }
        RelationType::from_index(best).expect("index within taxonomy")
    }
}

impl Serialize for Distribution {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(NUM_RELATIONS))?;
        for (i, p) in self.0.iter().enumerate() {
            let label = RelationType::from_index(i).expect("index within taxonomy");
            map.serialize_entry(label.label(), p)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for Distribution {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = std::collections::HashMap::<RelationType, f64>::deserialize(deserializer)?;
        let mut probs = vec![0.0; NUM_RELATIONS];
        for (label, p) in raw {
            probs[label.index()] = p;
        }
        Distribution::new(probs).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub title_id: String,
    pub scene_index: usize,
    pub head: String,
    pub tail: String,
    pub predicted: RelationType,
    pub distribution: Distribution,
    pub model_id: String,
}

impl PredictionRecord {
    /// Builds a record whose `predicted` label is the distribution's argmax.
    pub fn new(key: InstanceKey, distribution: Distribution, model_id: impl Into<String>) -> Self {
        PredictionRecord {
            predicted: distribution.argmax(),
            title_id: key.title_id,
            scene_index: key.scene_index,
            head: key.head,
            tail: key.tail,
            distribution,
            model_id: model_id.into(),
        }
    }

    pub fn key(&self) -> InstanceKey {
        InstanceKey {
            title_id: self.title_id.clone(),
            scene_index: self.scene_index,
            head: self.head.clone(),
            tail: self.tail.clone(),
        }
    }
}

fn schema_error(path: &Path, line: usize, err: &serde_json::Error) -> Error {
    let message = err.to_string();
    // serde_json names the offending field in backticks for missing/unknown fields.
    let field = message
        .split('`')
        .nth(1)
        .filter(|_| message.contains("field"))
        .unwrap_or("record")
        .to_string();
    Error::Schema {
        path: path.to_path_buf(),
        line,
        field,
        message,
    }
}

/// Reads one JSON record per non-empty line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| schema_error(path, i + 1, &e))?;
        out.push(record);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(records: &[T], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|e| Error::Invalid(e.to_string()))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_corpus(path: &Path) -> Result<Vec<Teleplay>> {
    let teleplays: Vec<Teleplay> = read_jsonl(path)?;
    let mut ids = std::collections::HashSet::new();
    for (i, t) in teleplays.iter().enumerate() {
        if !ids.insert(t.title_id.as_str()) {
            return Err(Error::Schema {
                path: path.to_path_buf(),
                line: i + 1,
                field: "title_id".into(),
                message: format!("duplicate title_id `{}`", t.title_id),
            });
        }
    }
    Ok(teleplays)
}

pub fn write_corpus(teleplays: &[Teleplay], path: &Path) -> Result<()> {
    write_jsonl(teleplays, path)
}

pub fn read_relations(path: &Path) -> Result<Vec<RelationRecord>> {
    let records: Vec<RelationRecord> = read_jsonl(path)?;
    for (i, r) in records.iter().enumerate() {
        let problem = if r.head == r.tail {
            Some(("tail", "head and tail are the same character"))
        } else if r.relations.is_empty() {
            Some(("relations", "relation set is empty"))
        } else {
            None
        };
        if let Some((field, message)) = problem {
            return Err(Error::Schema {
                path: path.to_path_buf(),
                line: i + 1,
                field: field.into(),
                message: message.into(),
            });
        }
    }
    Ok(records)
}

pub fn read_instances(path: &Path) -> Result<Vec<DyadInstance>> {
    let instances: Vec<DyadInstance> = read_jsonl(path)?;
    for (i, inst) in instances.iter().enumerate() {
        if inst.tokens.len() != inst.attribution.len() {
            return Err(Error::Schema {
                path: path.to_path_buf(),
                line: i + 1,
                field: "attribution".into(),
                message: format!(
                    "{} attributions for {} tokens",
                    inst.attribution.len(),
                    inst.tokens.len()
                ),
            });
        }
    }
    Ok(instances)
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRecord>> {
    read_jsonl(path)
}
