use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::DyadInstance;
use crate::dataset::{is_marker, BACKGROUND, BOS, LINE, PAD, SCENE, SPEAKER};
use crate::error::{Error, Result};

pub const UNK: &str = "<unk>";

const SPECIALS: [&str; 7] = [PAD, UNK, BOS, SCENE, SPEAKER, LINE, BACKGROUND];

/// Token-to-id mapping. Ids 0..7 are the padding, unknown and structural
/// marker tokens; the rest are ordered by descending frequency, then
/// lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl From<Vec<String>> for Vocab {
    fn from(tokens: Vec<String>) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocab { tokens, index }
    }
}

impl From<Vocab> for Vec<String> {
    fn from(v: Vocab) -> Self {
        v.tokens
    }
}

impl Vocab {
    /// Counts tokens once per distinct scene and keeps those seen at least
    /// `min_count` times.
    pub fn build(instances: &[DyadInstance], min_count: usize) -> Result<Self> {
        if instances.is_empty() {
            return Err(Error::Invalid("cannot build a vocabulary from zero instances".into()));
        }
        let mut seen_scenes = HashSet::new();
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for inst in instances {
            if !seen_scenes.insert((inst.title_id.as_str(), inst.scene_index)) {
                continue;
            }
            for tok in &inst.tokens {
                if !is_marker(tok) {
                    *counts.entry(tok.as_str()).or_default() += 1;
                }
            }
        }
        let mut kept: Vec<(&str, usize)> = counts
            .into_iter()
            .filter(|(t, c)| *c >= min_count.max(1) && *t != UNK)
            .collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        let tokens = SPECIALS
            .iter()
            .map(|s| s.to_string())
            .chain(kept.into_iter().map(|(t, _)| t.to_string()))
            .collect::<Vec<_>>();
        Ok(Vocab::from(tokens))
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn unk_id(&self) -> usize {
        self.index[UNK]
    }

    /// Id of `token`, falling back to `<unk>`.
    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or_else(|| self.unk_id())
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(t.as_ref())).collect()
    }

    /// Checks that every special token is present.
    pub fn validate(&self) -> Result<()> {
        for s in SPECIALS {
            if !self.index.contains_key(s) {
                return Err(Error::Shape(format!("vocabulary lacks `{s}`")));
            }
        }
        if self.index.len() != self.tokens.len() {
            return Err(Error::Shape("vocabulary has duplicate tokens".into()));
        }
        Ok(())
    }
}
