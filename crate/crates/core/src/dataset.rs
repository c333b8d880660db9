//! Dyad instances: enumeration, labeling, anonymization and serialization.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{read_jsonl, DyadInstance, Element, EpisodeMeta, RelationRecord, Scene, Split, Teleplay};
use crate::error::{Error, Result};
use crate::taxonomy::{most_specific, RelationType};
use crate::tokenize::tokenize;

pub const BOS: &str = "<s>";
pub const SCENE: &str = "<scene>";
pub const SPEAKER: &str = "<speaker>";
pub const LINE: &str = "<line>";
pub const BACKGROUND: &str = "<background>";
pub const PAD: &str = "<pad>";

/// The structural markers, in vocabulary order.
pub const MARKERS: [&str; 6] = [PAD, BOS, SCENE, SPEAKER, LINE, BACKGROUND];

pub fn is_marker(token: &str) -> bool {
    MARKERS.contains(&token)
}

const ENTITY_ID_RANGE: u32 = 100;

/// All ordered pairs of distinct speakers, heads in first-appearance order.
pub fn enumerate_dyads(scene: &Scene) -> Vec<(String, String)> {
    let speakers = scene.speakers();
    let mut out = Vec::with_capacity(speakers.len() * speakers.len().saturating_sub(1));
    for head in &speakers {
        for tail in &speakers {
            if head != tail {
                out.push((head.to_string(), tail.to_string()));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NameKind {
    ProperName,
    ContentWord,
}

/// Marks which name tokens are proper names (anonymized) and which are
/// content words such as job titles (left in place).
#[derive(Debug, Clone, Default)]
pub struct NameLexicon {
    kinds: HashMap<String, NameKind>,
}

impl NameLexicon {
    pub fn new() -> Self {
        NameLexicon::default()
    }

    pub fn insert(&mut self, token: &str, kind: NameKind) {
        self.kinds.insert(token.to_lowercase(), kind);
    }

    /// Tokens missing from the lexicon count as proper names.
    pub fn is_proper(&self, token: &str) -> bool {
        self.kinds.get(&token.to_lowercase()) != Some(&NameKind::ContentWord)
    }

    /// Parses `token<TAB>proper|content` lines.
    pub fn parse(content: &str, path: &Path) -> Result<Self> {
        let mut lex = NameLexicon::new();
        for (i, line) in content.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |message: &str| Error::Schema {
                path: path.to_path_buf(),
                line: i + 1,
                field: "kind".into(),
                message: message.into(),
            };
            let (token, kind) = line.split_once('\t').ok_or_else(|| bad("expected token<TAB>kind"))?;
            let kind = match kind.trim() {
                "proper" => NameKind::ProperName,
                "content" => NameKind::ContentWord,
                other => return Err(bad(&format!("unknown kind `{other}`"))),
            };
            lex.insert(token.trim(), kind);
        }
        Ok(lex)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&content, path)
    }
}

fn name_tokens(name: &str) -> Vec<String> {
    name.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Which string of a scene element a replacement applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Note,
    Text,
}

/// One mention replaced by anonymization, recorded so it can be undone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Replacement {
    pub element: usize,
    pub field: Field,
    /// Byte range of the entity string in the anonymized text.
    pub start: usize,
    pub end: usize,
    pub original: String,
}

/// Per-scene bijection between canonical names and entity ids.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EntityMap {
    entries: Vec<(String, u32)>,
    pub replacements: Vec<Replacement>,
}

pub fn entity_label(id: u32) -> String {
    format!("ENTITY {id}")
}

impl EntityMap {
    pub fn id_of(&self, name: &str) -> Option<u32> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, id)| *id)
    }

    pub fn name_of(&self, id: u32) -> Option<&str> {
        self.entries.iter().find(|(_, i)| *i == id).map(|(n, _)| n.as_str())
    }

    /// Canonical name for an anonymized speaker string (`ENTITY k`).
    pub fn name_of_label(&self, label: &str) -> Option<&str> {
        label
            .strip_prefix("ENTITY ")
            .and_then(|k| k.parse().ok())
            .and_then(|id| self.name_of(id))
    }

    pub fn entries(&self) -> &[(String, u32)] {
        &self.entries
    }
}

/// Seed for one scene, independent of processing order.
pub fn scene_seed(global_seed: u64, title_id: &str, scene_index: usize) -> u64 {
    let mut key = title_id.as_bytes().to_vec();
    key.push(0);
    key.extend_from_slice(&(scene_index as u64).to_le_bytes());
    global_seed ^ crate::fnv1a(&key)
}

struct Word {
    start: usize,
    end: usize,
    lower: String,
}

fn words(text: &str) -> Vec<Word> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (c.is_alphanumeric(), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push(Word {
                    start: s,
                    end: i,
                    lower: text[s..i].to_lowercase(),
                });
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(Word {
            start: s,
            end: text.len(),
            lower: text[s..].to_lowercase(),
        });
    }
    out
}

/// Replaces proper-name mentions in `text`; returns the new text and the
/// replacements as (start, end, original) in new-text byte offsets.
fn replace_mentions(
    text: &str,
    name_index: &HashMap<String, BTreeSet<usize>>,
    ids: &[u32],
) -> (String, Vec<(usize, usize, String)>) {
    let ws = words(text);
    let mut out = String::with_capacity(text.len());
    let mut spans = Vec::new();
    let mut cursor = 0;
    let mut i = 0;
    while i < ws.len() {
        let Some(first) = name_index.get(&ws[i].lower) else {
            i += 1;
            continue;
        };
        let mut cands = first.clone();
        let mut j = i;
        while j + 1 < ws.len() {
            let gap = &text[ws[j].end..ws[j + 1].start];
            if gap.is_empty() || !gap.chars().all(char::is_whitespace) {
                break;
            }
            let Some(next) = name_index.get(&ws[j + 1].lower) else {
                break;
            };
            let meet: BTreeSet<usize> = cands.intersection(next).copied().collect();
            if meet.is_empty() {
                break;
            }
            cands = meet;
            j += 1;
        }
        if cands.len() == 1 {
            let who = *cands.iter().next().expect("one candidate");
            let (start, end) = (ws[i].start, ws[j].end);
            out.push_str(&text[cursor..start]);
            let label = entity_label(ids[who]);
            spans.push((out.len(), out.len() + label.len(), text[start..end].to_string()));
            out.push_str(&label);
            cursor = end;
        }
        i = j + 1;
    }
    out.push_str(&text[cursor..]);
    (out, spans)
}

/// Replaces speakers with scene-local `ENTITY k` ids and anonymizes their
/// proper-name mentions in notes, dialogue and background text.
pub fn anonymize_scene(scene: &Scene, lexicon: &NameLexicon, seed: u64) -> (Scene, EntityMap) {
    let speakers = scene.speakers();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<u32> = (1..=ENTITY_ID_RANGE.max(speakers.len() as u32)).collect();
    pool.shuffle(&mut rng);
    let ids: Vec<u32> = pool[..speakers.len()].to_vec();

    let mut name_index: HashMap<String, BTreeSet<usize>> = HashMap::new();
    for (who, name) in speakers.iter().enumerate() {
        for tok in name_tokens(name) {
            if lexicon.is_proper(&tok) {
                name_index.entry(tok).or_default().insert(who);
            }
        }
    }

    let mut map = EntityMap {
        entries: speakers.iter().zip(&ids).map(|(n, id)| (n.to_string(), *id)).collect(),
        replacements: Vec::new(),
    };
    let mut out = scene.clone();
    for (ei, element) in out.elements.iter_mut().enumerate() {
        let mut rewrite = |s: &mut String, field: Field| {
            let (new, spans) = replace_mentions(s, &name_index, &ids);
            *s = new;
            map.replacements
                .extend(spans.into_iter().map(|(start, end, original)| Replacement {
                    element: ei,
                    field,
                    start,
                    end,
                    original,
                }));
        };
        match element {
            Element::Turn(turn) => {
                let who = speakers
                    .iter()
                    .position(|s| *s == turn.speaker)
                    .expect("speaker listed");
                if let Some(note) = turn.note.as_mut() {
                    rewrite(note, Field::Note);
                }
                rewrite(&mut turn.text, Field::Text);
                turn.speaker = entity_label(ids[who]);
            }
            Element::Background { text } => rewrite(text, Field::Text),
        }
    }
    (out, map)
}

/// Undoes [`anonymize_scene`].
pub fn deanonymize_scene(scene: &Scene, map: &EntityMap) -> Result<Scene> {
    let mut out = scene.clone();
    for r in map.replacements.iter().rev() {
        let element = out
            .elements
            .get_mut(r.element)
            .ok_or_else(|| Error::Invalid(format!("replacement refers to element {}", r.element)))?;
        let target = match (element, r.field) {
            (Element::Turn(t), Field::Note) => t.note.as_mut(),
            (Element::Turn(t), Field::Text) => Some(&mut t.text),
            (Element::Background { text }, Field::Text) => Some(text),
            (Element::Background { .. }, Field::Note) => None,
        }
        .ok_or_else(|| Error::Invalid("replacement field missing".into()))?;
        if target.get(r.start..r.end).is_none() {
            return Err(Error::Invalid("replacement span out of range".into()));
        }
        target.replace_range(r.start..r.end, &r.original);
    }
    for element in &mut out.elements {
        if let Element::Turn(t) = element {
            t.speaker = map
                .name_of_label(&t.speaker)
                .ok_or_else(|| Error::Invalid(format!("unmapped speaker `{}`", t.speaker)))?
                .to_string();
        }
    }
    Ok(out)
}

/// A scene as a marker-delimited token stream with per-token speakers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SerializedScene {
    pub tokens: Vec<String>,
    pub attribution: Vec<Option<String>>,
}

impl SerializedScene {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

impl fmt::Display for SerializedScene {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tokens.join(" "))
    }
}

/// Serializes a scene as
/// `<s> <scene> header (<background> text | <speaker> name <line> note text)*`.
pub fn serialize_scene(scene: &Scene) -> SerializedScene {
    let mut tokens = Vec::new();
    let mut attribution = Vec::new();
    let mut push = |toks: Vec<String>, who: Option<&str>| {
        attribution.extend(std::iter::repeat_n(who.map(str::to_string), toks.len()));
        tokens.extend(toks);
    };
    push(vec![BOS.into(), SCENE.into()], None);
    push(tokenize(&scene.header), None);
    for element in &scene.elements {
        match element {
            Element::Background { text } => {
                push(vec![BACKGROUND.into()], None);
                push(tokenize(text), None);
            }
            Element::Turn(turn) => {
                let who = Some(turn.speaker.as_str());
                push(vec![SPEAKER.into()], None);
                push(tokenize(&turn.speaker), who);
                push(vec![LINE.into()], None);
                if let Some(note) = &turn.note {
                    push(tokenize(note), who);
                }
                push(tokenize(&turn.text), who);
            }
        }
    }
    SerializedScene { tokens, attribution }
}

/// Relation sets keyed by (title, head, tail); duplicate records are merged.
pub fn relation_index(records: &[RelationRecord]) -> HashMap<(String, String, String), BTreeSet<RelationType>> {
    let mut index: HashMap<_, BTreeSet<RelationType>> = HashMap::new();
    for r in records {
        index
            .entry((r.title_id.clone(), r.head.clone(), r.tail.clone()))
            .or_default()
            .extend(r.relations.iter().copied());
    }
    index
}

#[derive(Debug, Clone, Default)]
pub struct BuildOptions {
    /// Lexicon and global seed; `None` leaves names in place.
    pub anonymize: Option<(NameLexicon, u64)>,
    pub episodes: HashMap<String, EpisodeMeta>,
}

/// Builds one instance per labeled dyad in every scene of a teleplay.
pub fn build_instances(
    teleplay: &Teleplay,
    relations: &HashMap<(String, String, String), BTreeSet<RelationType>>,
    options: &BuildOptions,
) -> Vec<DyadInstance> {
    let episode = options.episodes.get(&teleplay.title_id).copied();
    let mut out = Vec::new();
    for scene in &teleplay.scenes {
        let labeled: Vec<(String, String, RelationType)> = enumerate_dyads(scene)
            .into_iter()
            .filter_map(|(h, t)| {
                let key = (teleplay.title_id.clone(), h, t);
                let label = relations.get(&key).and_then(|set| most_specific(set.iter().copied()))?;
                Some((key.1, key.2, label))
            })
            .collect();
        if labeled.is_empty() {
            continue;
        }
        let serialized = match &options.anonymize {
            Some((lexicon, seed)) => {
                let seed = scene_seed(*seed, &teleplay.title_id, scene.index);
                let (anon, map) = anonymize_scene(scene, lexicon, seed);
                let mut s = serialize_scene(&anon);
                for who in s.attribution.iter_mut().flatten() {
                    *who = map.name_of_label(who).expect("entity from this map").to_string();
                }
                s
            }
            None => serialize_scene(scene),
        };
        for (head, tail, label) in labeled {
            out.push(DyadInstance {
                title_id: teleplay.title_id.clone(),
                scene_index: scene.index,
                head,
                tail,
                label,
                tokens: serialized.tokens.clone(),
                attribution: serialized.attribution.clone(),
                season: episode.map(|e| e.season),
                episode: episode.map(|e| e.episode),
            });
        }
    }
    out
}

/// Labels dyads without anonymization.
pub fn attach_labels(teleplay: &Teleplay, relations: &[RelationRecord]) -> Vec<DyadInstance> {
    build_instances(teleplay, &relation_index(relations), &BuildOptions::default())
}

/// Builds instances for a whole corpus; output order follows the corpus.
pub fn build_corpus_instances(
    corpus: &[Teleplay],
    relations: &[RelationRecord],
    options: &BuildOptions,
) -> Vec<DyadInstance> {
    let index = relation_index(relations);
    corpus
        .par_iter()
        .map(|t| build_instances(t, &index, options))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

#[derive(Deserialize)]
struct EpisodeRecord {
    title_id: String,
    season: u32,
    episode: u32,
}

/// Reads the `{"title_id", "season", "episode"}` sidecar.
pub fn read_episode_map(path: &Path) -> Result<HashMap<String, EpisodeMeta>> {
    let records: Vec<EpisodeRecord> = read_jsonl(path)?;
    let mut map = HashMap::new();
    for (i, r) in records.into_iter().enumerate() {
        if r.season < 1 || r.episode < 1 {
            return Err(Error::Schema {
                path: path.to_path_buf(),
                line: i + 1,
                field: "season".into(),
                message: "season and episode start at 1".into(),
            });
        }
        map.insert(
            r.title_id,
            EpisodeMeta {
                season: r.season,
                episode: r.episode,
            },
        );
    }
    Ok(map)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitStats {
    pub split: Split,
    pub titles: usize,
    pub scenes: usize,
    pub labeled_dyads: usize,
    pub scene_tokens: usize,
    pub utterances: usize,
    pub utterance_tokens: usize,
}

impl SplitStats {
    fn empty(split: Split) -> Self {
        SplitStats {
            split,
            titles: 0,
            scenes: 0,
            labeled_dyads: 0,
            scene_tokens: 0,
            utterances: 0,
            utterance_tokens: 0,
        }
    }

    pub fn avg_tokens_per_scene(&self) -> f64 {
        ratio(self.scene_tokens, self.scenes)
    }

    pub fn avg_tokens_per_utterance(&self) -> f64 {
        ratio(self.utterance_tokens, self.utterances)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsTable {
    pub rows: Vec<SplitStats>,
}

impl StatsTable {
    pub fn get(&self, split: Split) -> &SplitStats {
        self.rows
            .iter()
            .find(|r| r.split == split)
            .expect("every split has a row")
    }
}

impl fmt::Display for StatsTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<26}", "")?;
        for r in &self.rows {
            write!(f, "{:>12}", r.split.as_str())?;
        }
        writeln!(f)?;
        let line = |f: &mut fmt::Formatter<'_>, name: &str, vals: Vec<String>| -> fmt::Result {
            write!(f, "{name:<26}")?;
            for v in vals {
                write!(f, "{v:>12}")?;
            }
            writeln!(f)
        };
        line(f, "# titles", self.rows.iter().map(|r| r.titles.to_string()).collect())?;
        line(f, "# scenes", self.rows.iter().map(|r| r.scenes.to_string()).collect())?;
        line(
            f,
            "# labeled dyads",
            self.rows.iter().map(|r| r.labeled_dyads.to_string()).collect(),
        )?;
        line(
            f,
            "avg tokens per scene",
            self.rows
                .iter()
                .map(|r| format!("{:.1}", r.avg_tokens_per_scene()))
                .collect(),
        )?;
        line(
            f,
            "avg tokens per utterance",
            self.rows
                .iter()
                .map(|r| format!("{:.1}", r.avg_tokens_per_utterance()))
                .collect(),
        )
    }
}

/// Tokens in a scene: header, speaker labels, notes, dialogue and background.
pub fn scene_token_count(scene: &Scene) -> usize {
    serialize_scene(scene).tokens.iter().filter(|t| !is_marker(t)).count()
}

/// Per-split title, scene, labeled-dyad and token counts.
pub fn corpus_stats(corpus: &[Teleplay], instances: &[DyadInstance]) -> StatsTable {
    let splits = [Split::Train, Split::Dev, Split::Test, Split::Unassigned];
    let mut rows: Vec<SplitStats> = splits.iter().map(|s| SplitStats::empty(*s)).collect();
    let row = |split: Split| splits.iter().position(|s| *s == split).expect("known split");
    let mut title_split = HashMap::new();
    for t in corpus {
        title_split.insert(t.title_id.as_str(), t.split);
        let i = row(t.split);
        let r = &mut rows[i];
        r.titles += 1;
        for scene in &t.scenes {
            r.scenes += 1;
            r.scene_tokens += scene_token_count(scene);
            for turn in scene.turns() {
                r.utterances += 1;
                r.utterance_tokens += tokenize(&turn.text).len();
            }
        }
    }
    for inst in instances {
        let split = title_split
            .get(inst.title_id.as_str())
            .copied()
            .unwrap_or(Split::Unassigned);
        let i = row(split);
        rows[i].labeled_dyads += 1;
    }
    StatsTable { rows }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Turn;

    fn turn(speaker: &str, text: &str) -> Element {
        Element::Turn(Turn {
            speaker: speaker.into(),
            note: None,
            text: text.into(),
        })
    }

    fn scene(elements: Vec<Element>) -> Scene {
        Scene {
            index: 0,
            header: "INT. HOSPITAL - DAY".into(),
            elements,
        }
    }

    #[test]
    fn dyads_are_two_permutations() {
        let s = scene(vec![turn("A", "x"), turn("B", "y"), turn("A", "z"), turn("C", "w")]);
        let d = enumerate_dyads(&s);
        assert_eq!(d.len(), 6);
        assert_eq!(d[0], ("A".into(), "B".into()));
        assert_eq!(d[5], ("C".into(), "B".into()));
        assert!(enumerate_dyads(&scene(vec![turn("A", "x")])).is_empty());
        let d = enumerate_dyads(&scene(vec![turn("Raj", "x"), turn("Howard", "y")]));
        assert_eq!(
            d,
            vec![
                ("Raj".to_string(), "Howard".to_string()),
                ("Howard".to_string(), "Raj".to_string())
            ]
        );
    }

    fn teleplay() -> Teleplay {
        Teleplay {
            title_id: "t".into(),
            split: Split::Train,
            scenes: vec![
                Scene {
                    index: 0,
                    header: "".into(),
                    elements: vec![turn("A", "hi"), turn("B", "yo"), turn("C", "hm")],
                },
                Scene {
                    index: 1,
                    header: "".into(),
                    elements: vec![turn("B", "hi"), turn("A", "yo")],
                },
            ],
        }
    }

    fn rec(head: &str, tail: &str, rels: &[RelationType]) -> RelationRecord {
        RelationRecord {
            title_id: "t".into(),
            head: head.into(),
            tail: tail.into(),
            relations: rels.iter().copied().collect(),
        }
    }

    #[test]
    fn labels_follow_records_and_direction() {
        let records = vec![
            rec("A", "B", &[RelationType::PARENT_OF]),
            rec("B", "A", &[RelationType::CHILD_OF, RelationType::FRIEND_OF]),
        ];
        let inst = attach_labels(&teleplay(), &records);
        assert_eq!(inst.len(), 4);
        for i in &inst {
            let expected = if i.head == "A" {
                RelationType::PARENT_OF
            } else {
                RelationType::CHILD_OF
            };
            assert_eq!(i.label, expected);
            assert_ne!(i.head, "C");
        }
        assert!(attach_labels(&teleplay(), &[rec("A", "D", &[RelationType::OTHER])]).is_empty());
    }

    #[test]
    fn anonymization_replaces_proper_names_only() {
        let mut lex = NameLexicon::new();
        lex.insert("coach", NameKind::ContentWord);
        lex.insert("taylor", NameKind::ProperName);
        let s = scene(vec![
            turn("Coach Taylor", "the coach said Taylor left"),
            turn("Tami Taylor", "I was expecting you"),
        ]);
        let (anon, map) = anonymize_scene(&s, &lex, 7);
        let id_coach = map.id_of("Coach Taylor").unwrap();
        let id_tami = map.id_of("Tami Taylor").unwrap();
        assert_ne!(id_coach, id_tami);
        match &anon.elements[0] {
            // "Taylor" alone is shared by both speakers and stays ambiguous.
            Element::Turn(t) => {
                assert_eq!(t.speaker, entity_label(id_coach));
                assert_eq!(t.text, "the coach said Taylor left");
            }
            _ => unreachable!(),
        }
        match &anon.elements[1] {
            Element::Turn(t) => assert_eq!(t.text, "I was expecting you"),
            _ => unreachable!(),
        }

        let solo = scene(vec![
            turn("Coach Taylor", "the coach said Taylor left"),
            turn("Matt", "Coach Taylor? Matt Saracen here."),
        ]);
        let (anon, map) = anonymize_scene(&solo, &lex, 7);
        let k = map.id_of("Coach Taylor").unwrap();
        let m = map.id_of("Matt").unwrap();
        match (&anon.elements[0], &anon.elements[1]) {
            (Element::Turn(a), Element::Turn(b)) => {
                assert_eq!(a.text, format!("the coach said ENTITY {k} left"));
                assert_eq!(b.text, format!("Coach ENTITY {k}? ENTITY {m} Saracen here."));
            }
            _ => unreachable!(),
        }
        assert_eq!(deanonymize_scene(&anon, &map).unwrap(), solo);
    }

    #[test]
    fn multi_token_names_collapse_and_substrings_survive() {
        let lex = NameLexicon::new();
        let s = scene(vec![
            turn("Gregory House", "Robinson met Gregory House at House's place."),
            turn("Robin", "Hi."),
        ]);
        let (anon, map) = anonymize_scene(&s, &lex, 1);
        let h = map.id_of("Gregory House").unwrap();
        match &anon.elements[0] {
            Element::Turn(t) => assert_eq!(t.text, format!("Robinson met ENTITY {h} at ENTITY {h}'s place.")),
            _ => unreachable!(),
        }
        assert_eq!(deanonymize_scene(&anon, &map).unwrap(), s);
    }

    #[test]
    fn serialization_layout() {
        let s = Scene {
            index: 0,
            header: "INT. LOBBY".into(),
            elements: vec![
                Element::Background {
                    text: "Briefcase in hand, ENTITY 5 waits.".into(),
                },
                Element::Turn(Turn {
                    speaker: "ENTITY 6".into(),
                    note: Some("(dry)".into()),
                    text: "Really?".into(),
                }),
            ],
        };
        let ser = serialize_scene(&s);
        assert_eq!(
            ser.to_string(),
            "<s> <scene> INT . LOBBY <background> Briefcase in hand , ENTITY 5 waits . \
             <speaker> ENTITY 6 <line> ( dry ) Really ?"
        );
        let who: Vec<Option<&str>> = ser.attribution.iter().map(|a| a.as_deref()).collect();
        let six = Some("ENTITY 6");
        assert_eq!(&who[who.len() - 9..], &[None, six, six, None, six, six, six, six, six]);
        assert_eq!(ser.tokens.len(), ser.attribution.len());
    }

    #[test]
    fn stats_count_per_split() {
        let mut a = teleplay();
        a.title_id = "a".into();
        let mut b = teleplay();
        b.title_id = "b".into();
        b.scenes.push(Scene {
            index: 2,
            header: "".into(),
            elements: vec![],
        });
        let mut c = teleplay();
        c.title_id = "c".into();
        c.split = Split::Test;
        let instances: Vec<DyadInstance> = attach_labels(
            &a,
            &[RelationRecord {
                title_id: "a".into(),
                ..rec("A", "B", &[RelationType::OTHER])
            }],
        )
        .into_iter()
        .chain(attach_labels(
            &b,
            &[RelationRecord {
                title_id: "b".into(),
                ..rec("A", "C", &[RelationType::OTHER])
            }],
        ))
        .collect();
        assert_eq!(instances.len(), 3);
        let stats = corpus_stats(&[a, b, c], &instances);
        let train = stats.get(Split::Train);
        assert_eq!((train.titles, train.scenes, train.labeled_dyads), (2, 5, 3));
        assert_eq!(train.utterances, 10);
        assert_eq!(train.avg_tokens_per_utterance(), 1.0);
        assert_eq!(train.avg_tokens_per_scene(), 10.0 * 2.0 / 5.0);
        let dev = stats.get(Split::Dev);
        assert_eq!((dev.titles, dev.scenes, dev.labeled_dyads), (0, 0, 0));
        assert_eq!(dev.avg_tokens_per_scene(), 0.0);
        assert_eq!(stats.get(Split::Test).labeled_dyads, 0);
    }

    #[test]
    fn lexicon_file_format() {
        let lex = NameLexicon::parse("coach\tcontent\ntaylor\tproper\n", Path::new("l.tsv")).unwrap();
        assert!(!lex.is_proper("Coach"));
        assert!(lex.is_proper("taylor"));
        assert!(lex.is_proper("unlisted"));
        assert!(NameLexicon::parse("coach content\n", Path::new("l.tsv")).is_err());
    }
}
