//! Synthetic corpora with a planted lexical signature per relation type.
//!
//! Each scene holds a head, a tail and a bystander. Every line is drawn from a
//! shared filler vocabulary, except that one line carries the signature word
//! of the dyad's relation type. Whether the head or the bystander says it
//! decides whether the signal is in the head's own turns or only in the
//! surrounding scene.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{DyadInstance, Element, Scene, Turn};
use crate::dataset::serialize_scene;
use crate::taxonomy::RelationType;

/// Relation types and their planted words.
pub const SIGNATURES: [(RelationType, &str); 5] = [
    (RelationType::SPOUSE_OF, "honey"),
    (RelationType::PARENT_OF, "kids"),
    (RelationType::SIBLING_OF, "brother"),
    (RelationType::COLLEAGUE_OF, "case"),
    (RelationType::FRIEND_OF, "buddy"),
];

const FILLER: &[&str] = &[
    "weather", "coffee", "table", "window", "morning", "street", "paper", "minute", "music", "chair", "garden",
    "letter", "ticket", "bread", "train", "phone", "jacket", "corner", "river", "candle", "sugar", "engine", "pencil",
    "market", "cloud", "bottle", "mirror", "button", "ladder", "basket", "pocket", "carpet", "bridge", "orange",
    "rabbit", "hammer", "violin", "kettle", "blanket", "lantern",
];

const NAMES: &[&str] = &[
    "ADA", "BEN", "CARA", "DEV", "ELLA", "FINN", "GUS", "HANA", "IVO", "JUNE", "KAI", "LENA", "MAX", "NIA", "OTTO",
    "PIA", "QUIN", "RAE", "SAM", "TESS", "UMA", "VIC", "WREN", "XAN", "YARA", "ZED",
];

const HEADERS: &[&str] = &[
    "INT. KITCHEN - DAY",
    "EXT. PARK - NIGHT",
    "INT. OFFICE - DAY",
    "INT. CAR - NIGHT",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    /// The head says the signature word.
    Head,
    /// A third speaker says it; the head and tail never do.
    Bystander,
}

fn filler_line(rng: &mut ChaCha8Rng, planted: Option<&str>) -> String {
    let len = rng.gen_range(4..=7);
    let mut words: Vec<&str> = (0..len).map(|_| *FILLER.choose(rng).expect("non-empty")).collect();
    if let Some(w) = planted {
        let at = rng.gen_range(0..=words.len());
        words.insert(at, w);
    }
    let mut line = words.join(" ");
    line.push('.');
    line
}

/// A scene for one labeled dyad, with the head speaking first.
pub fn planted_scene(
    index: usize,
    relation: RelationType,
    placement: Placement,
    rng: &mut ChaCha8Rng,
) -> (Scene, String, String) {
    let word = SIGNATURES
        .iter()
        .find(|(r, _)| *r == relation)
        .map(|(_, w)| *w)
        .expect("relation has a signature");
    let mut cast: Vec<&str> = NAMES.choose_multiple(rng, 3).copied().collect();
    cast.shuffle(rng);
    let (head, tail, bystander) = (cast[0], cast[1], cast[2]);
    let mut elements = Vec::new();
    let turn = |speaker: &str, text: String| {
        Element::Turn(Turn {
            speaker: speaker.to_string(),
            note: None,
            text,
        })
    };
    let planted_turn = rng.gen_range(0..2);
    for round in 0..2 {
        let head_word = (placement == Placement::Head && round == planted_turn).then_some(word);
        elements.push(turn(head, filler_line(rng, head_word)));
        elements.push(turn(tail, filler_line(rng, None)));
        let by_word = (placement == Placement::Bystander && round == planted_turn).then_some(word);
        elements.push(turn(bystander, filler_line(rng, by_word)));
        if round == 0 {
            elements.push(Element::Background {
                text: filler_line(rng, None),
            });
        }
    }
    let scene = Scene {
        index,
        header: HEADERS.choose(rng).expect("non-empty").to_string(),
        elements,
    };
    (scene, head.to_string(), tail.to_string())
}

/// `n` instances with relation types in equal shares (as far as `n` allows),
/// shuffled.
pub fn planted_corpus(n: usize, placement: Placement, seed: u64) -> Vec<DyadInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels: Vec<RelationType> = (0..n).map(|i| SIGNATURES[i % SIGNATURES.len()].0).collect();
    labels.shuffle(&mut rng);
    labels
        .into_iter()
        .enumerate()
        .map(|(i, relation)| {
            let (scene, head, tail) = planted_scene(i, relation, placement, &mut rng);
            let ser = serialize_scene(&scene);
            DyadInstance {
                title_id: "planted".into(),
                scene_index: i,
                head,
                tail,
                label: relation,
                tokens: ser.tokens,
                attribution: ser.attribution,
                season: None,
                episode: None,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::head_utterance_tokens;

    #[test]
    fn balanced_and_deterministic() {
        let a = planted_corpus(500, Placement::Head, 1);
        assert_eq!(a, planted_corpus(500, Placement::Head, 1));
        for (r, _) in SIGNATURES {
            assert_eq!(a.iter().filter(|i| i.label == r).count(), 100);
        }
    }

    #[test]
    fn signature_location_follows_placement() {
        for inst in planted_corpus(50, Placement::Head, 2) {
            let word = SIGNATURES.iter().find(|(r, _)| *r == inst.label).unwrap().1;
            assert_eq!(head_utterance_tokens(&inst).iter().filter(|t| *t == word).count(), 1);
        }
        for inst in planted_corpus(50, Placement::Bystander, 2) {
            let word = SIGNATURES.iter().find(|(r, _)| *r == inst.label).unwrap().1;
            assert!(!head_utterance_tokens(&inst).iter().any(|t| t == word));
            let owner = inst
                .tokens
                .iter()
                .position(|t| t == word)
                .map(|i| inst.attribution[i].clone());
            let owner = owner.flatten().unwrap();
            assert!(owner != inst.head && owner != inst.tail);
        }
    }
}
