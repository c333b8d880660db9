//! Rule-based teleplay parser.
//!
//! Teleplays lay out their structural elements by indentation: speaker labels
//! sit furthest right, followed by parenthetical speaker notes, dialogue, and
//! flush-left action statements. The parser clusters the indent columns of a
//! script, assigns roles to the clusters, classifies every line and then
//! merges consecutive lines of the same role into scene elements.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::corpus::{Element, Scene, Split, StructuralRole, Teleplay, Turn};
use crate::error::{Error, Result};

pub const DEFAULT_TOLERANCE: usize = 3;
pub const DEFAULT_CHAR_WIDTH: f64 = 7.2;
const MIN_LINES: usize = 10;
const MAX_CLUSTERS: usize = 5;

/// One input line with leading whitespace removed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawLine {
    pub text: String,
    pub indent: usize,
}

impl RawLine {
    pub fn new(text: impl Into<String>, indent: usize) -> Self {
        RawLine {
            text: text.into(),
            indent,
        }
    }

    pub fn is_blank(&self) -> bool {
        self.text.is_empty()
    }
}

/// Splits plain text into lines, measuring leading spaces (tabs stop every 8 columns).
pub fn lines_from_text(content: &str) -> Vec<RawLine> {
    content
        .lines()
        .map(|line| {
            let mut indent = 0;
            for c in line.chars() {
                match c {
                    ' ' => indent += 1,
                    '\t' => indent = (indent / 8 + 1) * 8,
                    _ => break,
                }
            }
            let text = line.trim();
            RawLine::new(text, if text.is_empty() { 0 } else { indent })
        })
        .collect()
}

#[derive(Deserialize)]
struct OcrLine {
    text: String,
    x0: f64,
}

/// Reads OCR output: one `{"text", "x0"}` object per line, where `x0` is the
/// left edge of the line's bounding box.
pub fn lines_from_ocr_jsonl(content: &str, char_width: f64, path: &Path) -> Result<Vec<RawLine>> {
    let mut out = Vec::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: OcrLine = serde_json::from_str(line).map_err(|e| Error::Schema {
            path: path.to_path_buf(),
            line: i + 1,
            field: "x0".into(),
            message: e.to_string(),
        })?;
        let text = rec.text.trim();
        let indent = if text.is_empty() {
            0
        } else {
            (rec.x0 / char_width).round().max(0.0) as usize
        };
        out.push(RawLine::new(text, indent));
    }
    Ok(out)
}

/// Column centers for each indentation-defined role.
///
/// Scripts with fewer than four indent clusters have no note column, and
/// with only two clusters no action column either.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndentProfile {
    pub speaker_col: usize,
    pub note_col: Option<usize>,
    pub dialogue_col: usize,
    pub action_col: Option<usize>,
    pub tolerance: usize,
}

#[derive(Debug, Clone)]
struct Cluster {
    count: usize,
    weighted_sum: usize,
}

impl Cluster {
    fn center(&self) -> f64 {
        self.weighted_sum as f64 / self.count as f64
    }

    fn absorb(&mut self, other: &Cluster) {
        self.count += other.count;
        self.weighted_sum += other.weighted_sum;
    }
}

fn merge_closest(clusters: &mut Vec<Cluster>, below: Option<f64>) -> bool {
    let best = clusters
        .windows(2)
        .enumerate()
        .map(|(i, w)| (i, w[1].center() - w[0].center()))
        .min_by(|a, b| a.1.total_cmp(&b.1));
    match best {
        Some((i, gap)) if below.is_none_or(|t| gap < t) => {
            let right = clusters.remove(i + 1);
            clusters[i].absorb(&right);
            true
        }
        _ => false,
    }
}

pub fn is_scene_header(text: &str) -> bool {
    let upper = text.trim_start().to_uppercase();
    if upper.starts_with("INT.") || upper.starts_with("EXT.") || upper.starts_with("INT/EXT") {
        return true;
    }
    upper
        .strip_prefix("SCENE")
        .is_some_and(|rest| !rest.starts_with(|c: char| c.is_alphabetic()))
}

fn is_parenthetical(text: &str) -> bool {
    text.starts_with('(') || text.ends_with(')')
}

/// Infers role columns from the indentation of a script's lines.
pub fn infer_indent_profile(lines: &[RawLine], tolerance: usize) -> Result<IndentProfile> {
    let content: Vec<&RawLine> = lines.iter().filter(|l| !l.is_blank()).collect();
    if content.len() < MIN_LINES {
        return Err(Error::Unstructured(format!(
            "{} non-blank lines; at least {MIN_LINES} are needed to infer indentation",
            content.len()
        )));
    }
    let mut histogram = BTreeMap::new();
    for line in content.iter().filter(|l| !is_scene_header(&l.text)) {
        *histogram.entry(line.indent).or_insert(0usize) += 1;
    }
    let mut clusters: Vec<Cluster> = histogram
        .into_iter()
        .map(|(indent, count)| Cluster {
            count,
            weighted_sum: indent * count,
        })
        .collect();
    while merge_closest(&mut clusters, Some(tolerance as f64)) {}
    while clusters.len() > MAX_CLUSTERS {
        merge_closest(&mut clusters, None);
    }
    if clusters.len() < 2 {
        return Err(Error::Unstructured(format!(
            "{} indentation cluster(s); at least 2 are needed",
            clusters.len()
        )));
    }

    if clusters.len() > 4 {
        // Keep the four most populated columns; sparse extras (transitions,
        // page numbers) fall outside every role.
        let mut order: Vec<usize> = (0..clusters.len()).collect();
        order.sort_by(|&a, &b| {
            clusters[b]
                .count
                .cmp(&clusters[a].count)
                .then(clusters[b].center().total_cmp(&clusters[a].center()))
        });
        order.truncate(4);
        order.sort_unstable();
        clusters = order.into_iter().map(|i| clusters[i].clone()).collect();
    }
    let cols: Vec<usize> = clusters.iter().rev().map(|c| c.center().round() as usize).collect();
    let profile = match cols.as_slice() {
        [speaker, note, dialogue, action] => IndentProfile {
            speaker_col: *speaker,
            note_col: Some(*note),
            dialogue_col: *dialogue,
            action_col: Some(*action),
            tolerance,
        },
        [speaker, dialogue, action] => IndentProfile {
            speaker_col: *speaker,
            note_col: None,
            dialogue_col: *dialogue,
            action_col: Some(*action),
            tolerance,
        },
        [speaker, dialogue] => IndentProfile {
            speaker_col: *speaker,
            note_col: None,
            dialogue_col: *dialogue,
            action_col: None,
            tolerance,
        },
        _ => unreachable!("between 2 and 4 clusters"),
    };
    Ok(profile)
}

pub fn classify_line(line: &RawLine, profile: &IndentProfile) -> StructuralRole {
    if line.is_blank() {
        return StructuralRole::Other;
    }
    if is_scene_header(&line.text) {
        return StructuralRole::SceneHeader;
    }
    let mut columns = vec![
        (profile.speaker_col, StructuralRole::SpeakerLabel),
        (profile.dialogue_col, StructuralRole::Dialogue),
    ];
    if let Some(c) = profile.note_col {
        columns.push((c, StructuralRole::SpeakerNote));
    }
    if let Some(c) = profile.action_col {
        columns.push((c, StructuralRole::ActionStatement));
    }
    columns.sort_by_key(|(col, _)| col.abs_diff(line.indent));
    columns
        .into_iter()
        .filter(|(col, _)| col.abs_diff(line.indent) <= profile.tolerance)
        .find(|(_, role)| *role != StructuralRole::SpeakerNote || is_parenthetical(&line.text))
        .map_or(StructuralRole::Other, |(_, role)| role)
}

#[derive(Default)]
struct Assembler {
    scenes: Vec<Scene>,
    current: Option<Scene>,
    speaker: Option<String>,
    note: Option<String>,
    dialogue: Vec<String>,
    action: Vec<String>,
    last_role: Option<StructuralRole>,
}

impl Assembler {
    fn scene(&mut self) -> &mut Scene {
        let index = self.scenes.len();
        self.current.get_or_insert_with(|| Scene {
            index,
            header: String::new(),
            elements: Vec::new(),
        })
    }

    fn flush_turn(&mut self) {
        if self.dialogue.is_empty() {
            return;
        }
        let text = std::mem::take(&mut self.dialogue).join(" ");
        let turn = Turn {
            speaker: self.speaker.clone().expect("dialogue only buffered under a speaker"),
            note: self.note.take(),
            text,
        };
        self.scene().elements.push(Element::Turn(turn));
    }

    fn flush_action(&mut self) {
        if self.action.is_empty() {
            return;
        }
        let text = std::mem::take(&mut self.action).join(" ");
        self.scene().elements.push(Element::Background { text });
    }

    fn flush(&mut self) {
        self.flush_turn();
        self.flush_action();
    }

    fn finish_scene(&mut self) {
        self.flush();
        if let Some(scene) = self.current.take() {
            self.scenes.push(scene);
        }
    }

    fn push(&mut self, line: &RawLine, role: StructuralRole) {
        if line.is_blank() {
            self.flush();
            self.last_role = None;
            return;
        }
        let text = line.text.clone();
        match role {
            StructuralRole::SceneHeader => {
                self.finish_scene();
                self.current = Some(Scene {
                    index: self.scenes.len(),
                    header: text,
                    elements: Vec::new(),
                });
                self.speaker = None;
                self.note = None;
            }
            StructuralRole::SpeakerLabel => {
                self.flush();
                self.scene();
                self.speaker = Some(text);
                self.note = None;
            }
            StructuralRole::SpeakerNote => {
                self.flush_action();
                self.flush_turn();
                self.scene();
                if self.speaker.is_some() {
                    match (&mut self.note, self.last_role) {
                        (Some(note), Some(StructuralRole::SpeakerNote)) => {
                            note.push(' ');
                            note.push_str(&text);
                        }
                        _ => self.note = Some(text),
                    }
                }
            }
            StructuralRole::Dialogue => {
                self.flush_action();
                self.scene();
                if self.speaker.is_some() {
                    self.dialogue.push(text);
                }
            }
            StructuralRole::ActionStatement => {
                self.flush_turn();
                self.note = None;
                self.scene();
                self.action.push(text);
            }
            StructuralRole::Other => return,
        }
        self.last_role = Some(role);
    }
}

/// Classifies every line; blank lines map to `None`.
pub fn classify_lines(lines: &[RawLine], profile: &IndentProfile) -> Vec<Option<StructuralRole>> {
    lines
        .iter()
        .map(|l| (!l.is_blank()).then(|| classify_line(l, profile)))
        .collect()
}

/// Assembles scenes from lines whose roles are already known.
pub fn assemble(title_id: &str, lines: &[RawLine], profile: &IndentProfile) -> Teleplay {
    let mut asm = Assembler::default();
    for line in lines {
        let role = if line.is_blank() {
            StructuralRole::Other
        } else {
            classify_line(line, profile)
        };
        asm.push(line, role);
    }
    asm.finish_scene();
    Teleplay {
        title_id: title_id.to_string(),
        split: Split::Unassigned,
        scenes: asm.scenes,
    }
}

/// Infers the indentation profile and parses a script into scenes.
pub fn parse_teleplay(title_id: &str, lines: &[RawLine], tolerance: usize) -> Result<Teleplay> {
    if lines.is_empty() {
        return Err(Error::Invalid(format!("{title_id}: no input lines")));
    }
    let profile = infer_indent_profile(lines, tolerance)?;
    Ok(assemble(title_id, lines, &profile))
}
