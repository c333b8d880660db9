//! Speaker-label canonicalization against a cast roster.
//!
//! A noisy label such as `DR. HOUSE (V.O.)` resolves to a roster name when
//! the two share at least one normalized token; among such candidates the
//! one with the smallest edit distance to the whole label wins. Labels with
//! no overlapping candidate are discarded along with their turns.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::corpus::{read_jsonl, Element, Teleplay};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RosterEntry {
    pub name: String,
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Roster {
    pub title_id: String,
    pub characters: Vec<RosterEntry>,
}

impl Roster {
    /// Builds a roster, keeping the first occurrence of duplicate names.
    pub fn new<I, S>(title_id: impl Into<String>, names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut characters: Vec<RosterEntry> = Vec::new();
        for name in names {
            let name = name.into();
            let name = name.trim();
            if name.is_empty() || characters.iter().any(|c| c.name == name) {
                continue;
            }
            characters.push(RosterEntry {
                tokens: normalize_label(name),
                name: name.to_string(),
            });
        }
        Roster {
            title_id: title_id.into(),
            characters,
        }
    }

    pub fn len(&self) -> usize {
        self.characters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.characters.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.characters.iter().map(|c| c.name.as_str())
    }
}

/// On-disk roster record: `{"title_id", "characters": [{"name"}]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RosterRecord {
    pub title_id: String,
    pub characters: Vec<CharacterRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CharacterRecord {
    pub name: String,
}

impl From<RosterRecord> for Roster {
    fn from(r: RosterRecord) -> Self {
        Roster::new(r.title_id, r.characters.into_iter().map(|c| c.name))
    }
}

impl From<&Roster> for RosterRecord {
    fn from(r: &Roster) -> Self {
        RosterRecord {
            title_id: r.title_id.clone(),
            characters: r.names().map(|n| CharacterRecord { name: n.to_string() }).collect(),
        }
    }
}

pub fn read_rosters(path: &Path) -> Result<HashMap<String, Roster>> {
    let records: Vec<RosterRecord> = read_jsonl(path)?;
    Ok(records
        .into_iter()
        .map(|r| (r.title_id.clone(), Roster::from(r)))
        .collect())
}

/// Lowercases a label, drops parentheticals and periods, and splits on
/// whitespace.
pub fn normalize_label(label: &str) -> Vec<String> {
    let mut stripped = String::with_capacity(label.len());
    let mut depth = 0usize;
    for c in label.chars() {
        match c {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            _ if depth == 0 => stripped.push(c),
            _ => {}
        }
    }
    stripped
        .to_lowercase()
        .split_whitespace()
        .map(|t| {
            t.chars()
                .filter(|c| *c != '.')
                .collect::<String>()
                .trim_matches(|c: char| matches!(c, ',' | ':' | ';' | '!' | '?' | '"'))
                .to_string()
        })
        .filter(|t| !t.is_empty())
        .collect()
}

/// Unit-cost insert/delete/substitute distance over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Resolves a speaker label to a roster name.
pub fn match_speaker<'r>(label: &str, roster: &'r Roster) -> Option<&'r str> {
    let tokens = normalize_label(label);
    if tokens.is_empty() {
        return None;
    }
    let joined = tokens.join(" ");
    roster
        .characters
        .iter()
        .filter(|c| c.tokens.iter().any(|t| tokens.contains(t)))
        .map(|c| (levenshtein(&joined, &c.tokens.join(" ")), c.name.as_str()))
        .min_by(|a, b| {
            a.0.cmp(&b.0)
                .then(a.1.chars().count().cmp(&b.1.chars().count()))
                .then(a.1.cmp(b.1))
        })
        .map(|(_, name)| name)
}

/// Replaces every turn's speaker with its roster match and drops turns
/// whose speaker has none.
pub fn canonicalize_teleplay(teleplay: &Teleplay, roster: &Roster) -> Teleplay {
    let mut resolved: HashMap<&str, Option<&str>> = HashMap::new();
    let mut out = teleplay.clone();
    for (scene, src) in out.scenes.iter_mut().zip(&teleplay.scenes) {
        scene.elements = src
            .elements
            .iter()
            .filter_map(|e| match e {
                Element::Turn(turn) => {
                    let name = *resolved
                        .entry(turn.speaker.as_str())
                        .or_insert_with(|| match_speaker(&turn.speaker, roster));
                    name.map(|n| {
                        let mut t = turn.clone();
                        t.speaker = n.to_string();
                        Element::Turn(t)
                    })
                }
                bg => Some(bg.clone()),
            })
            .collect();
    }
    out
}

#[derive(Deserialize)]
struct SearchResponse {
    results: Vec<SearchHit>,
}

#[derive(Deserialize)]
struct SearchHit {
    id: u64,
}

#[derive(Deserialize)]
struct CreditsResponse {
    cast: Vec<CastMember>,
}

#[derive(Deserialize)]
struct CastMember {
    #[serde(default)]
    roles: Vec<CastRole>,
    #[serde(default)]
    character: Option<String>,
}

#[derive(Deserialize)]
struct CastRole {
    character: String,
}

/// Client for a TMDb-compatible API with an on-disk roster cache.
pub struct TmdbClient {
    base_url: String,
    api_key: String,
    cache_dir: Option<PathBuf>,
    agent: ureq::Agent,
}

pub const TMDB_DEFAULT_BASE: &str = "https://api.themoviedb.org/3";

impl TmdbClient {
    pub fn new(base_url: impl Into<String>, api_key: impl Into<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(30)))
            .build()
            .into();
        TmdbClient {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            api_key: api_key.into(),
            cache_dir: None,
            agent,
        }
    }

    /// Reads `TMDB_BASE_URL` (optional) and `TMDB_API_KEY`.
    pub fn from_env() -> Result<Self> {
        let key = std::env::var("TMDB_API_KEY").map_err(|_| Error::MissingEnv("TMDB_API_KEY".into()))?;
        let base = std::env::var("TMDB_BASE_URL").unwrap_or_else(|_| TMDB_DEFAULT_BASE.into());
        Ok(TmdbClient::new(base, key))
    }

    pub fn with_cache(mut self, dir: impl Into<PathBuf>) -> Self {
        self.cache_dir = Some(dir.into());
        self
    }

    fn cache_path(&self, query: &str) -> Option<PathBuf> {
        let slug: String = query
            .chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() {
                    c.to_ascii_lowercase()
                } else {
                    '_'
                }
            })
            .take(48)
            .collect();
        let hash = crate::fnv1a(query.as_bytes());
        self.cache_dir
            .as_ref()
            .map(|d| d.join(format!("{slug}-{hash:016x}.json")))
    }

    fn get_json<T: serde::de::DeserializeOwned>(&self, path: &str, query: &[(&str, &str)]) -> Result<T> {
        let url = format!("{}{}", self.base_url, path);
        let mut req = self.agent.get(&url).query("api_key", &self.api_key);
        for (k, v) in query {
            req = req.query(*k, *v);
        }
        let mut resp = req.call().map_err(|e| Error::Http(format!("GET {url}: {e}")))?;
        resp.body_mut()
            .read_json()
            .map_err(|e| Error::MalformedResponse(format!("GET {url}: {e}")))
    }

    /// Looks up a title and maps the first hit's aggregate credits to a roster.
    pub fn fetch_roster(&self, title_query: &str) -> Result<Roster> {
        let cache = self.cache_path(title_query);
        if let Some(path) = cache.as_ref().filter(|p| p.exists()) {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let record: RosterRecord = serde_json::from_str(&text)
                .map_err(|e| Error::MalformedResponse(format!("{}: {e}", path.display())))?;
            return Ok(record.into());
        }

        let search: SearchResponse = self.get_json("/search/tv", &[("query", title_query)])?;
        let hit = search
            .results
            .first()
            .ok_or_else(|| Error::TitleNotFound(title_query.to_string()))?;
        let credits: CreditsResponse = self.get_json(&format!("/tv/{}/aggregate_credits", hit.id), &[])?;
        let names = credits.cast.into_iter().flat_map(|m| {
            let mut names: Vec<String> = m.roles.into_iter().map(|r| r.character).collect();
            names.extend(m.character);
            names
        });
        let roster = Roster::new(title_query, names);

        if let Some(path) = cache {
            if let Some(dir) = path.parent() {
                fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            let json =
                serde_json::to_string(&RosterRecord::from(&roster)).map_err(|e| Error::Invalid(e.to_string()))?;
            fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
        }
        Ok(roster)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Scene, Split, Turn};

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_label("DR. HOUSE (V.O.)"), vec!["dr", "house"]);
        assert_eq!(normalize_label("MAN #1"), vec!["man", "#1"]);
        assert!(normalize_label("").is_empty());
        assert_eq!(normalize_label("LORELAI (CONT'D)"), vec!["lorelai"]);
    }

    #[test]
    fn levenshtein_examples() {
        assert_eq!(levenshtein("house", "house"), 0);
        assert_eq!(levenshtein("house", "horse"), 1);
        assert_eq!(levenshtein("", "abc"), 3);
        assert_eq!(levenshtein("kitten", "sitting"), 3);
    }

    fn roster() -> Roster {
        Roster::new("house", ["Gregory House", "James Wilson", "Lisa Cuddy"])
    }

    #[test]
    fn match_examples() {
        let r = roster();
        assert_eq!(match_speaker("HOUSE", &r), Some("Gregory House"));
        assert_eq!(match_speaker("DR. HOUSE (V.O.)", &r), Some("Gregory House"));
        assert_eq!(match_speaker("Gregory House", &r), Some("Gregory House"));
        assert_eq!(match_speaker("MAN #1", &r), None);
        assert_eq!(match_speaker("", &r), None);
    }

    #[test]
    fn ties_prefer_shorter_then_lexicographic() {
        let r = Roster::new("t", ["Anna Bell", "Anna Bo", "Anna Be"]);
        // "anna" is at distance 4 from "anna bo"/"anna be" and 5 from "anna bell".
        assert_eq!(match_speaker("ANNA", &r), Some("Anna Be"));
    }

    fn teleplay() -> Teleplay {
        let turn = |s: &str| {
            Element::Turn(Turn {
                speaker: s.into(),
                note: None,
                text: "Hi.".into(),
            })
        };
        Teleplay {
            title_id: "house".into(),
            split: Split::Train,
            scenes: vec![Scene {
                index: 0,
                header: "INT. CLINIC".into(),
                elements: vec![
                    turn("HOUSE"),
                    Element::Background { text: "Pause.".into() },
                    turn("WAITRESS"),
                    turn("CUDDY (O.S.)"),
                ],
            }],
        }
    }

    #[test]
    fn canonicalize_drops_unmatched_turns() {
        let out = canonicalize_teleplay(&teleplay(), &roster());
        let speakers = out.scenes[0].speakers();
        assert_eq!(speakers, vec!["Gregory House", "Lisa Cuddy"]);
        assert_eq!(out.scenes[0].elements.len(), 3);
    }

    #[test]
    fn empty_roster_keeps_only_backgrounds() {
        let out = canonicalize_teleplay(&teleplay(), &Roster::new("house", Vec::<String>::new()));
        assert_eq!(
            out.scenes[0].elements,
            vec![Element::Background { text: "Pause.".into() }]
        );
    }
}
