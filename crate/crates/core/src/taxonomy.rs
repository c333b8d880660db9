//! The ranked relationship taxonomy.
//!
//! Ranks order labels by specificity: rank 1 is the most specific label and
//! rank 28 (`other`) the least. Overlapping relations for one dyad resolve
//! to the member with the lowest rank.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

pub const NUM_RELATIONS: usize = 28;

const LABELS: [&str; NUM_RELATIONS] = [
    "grandparent_of",
    "grandchild_of",
    "parent_of",
    "child-in-law_of",
    "child_of",
    "sibling-in-law_of",
    "sibling_of",
    "relative_of",
    "ex-spouse_of",
    "ex-boy/girlfriend_of",
    "ex-love_interest_of",
    "spouse_of",
    "boy/girlfriend_of",
    "love_interest_of",
    "enemy_of",
    "colleague_of",
    "classmate_of",
    "roommate_of",
    "neighbor_of",
    "teacher_of",
    "student_of",
    "boss_of",
    "subordinate_of",
    "trainer_of",
    "trainee_of",
    "acquaintance_of",
    "friend_of",
    "other",
];

/// A relationship label, stored as its specificity rank (1..=28).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelationType(u8);

impl RelationType {
    pub const GRANDPARENT_OF: RelationType = RelationType(1);
    pub const PARENT_OF: RelationType = RelationType(3);
    pub const CHILD_OF: RelationType = RelationType(5);
    pub const SIBLING_OF: RelationType = RelationType(7);
    pub const SPOUSE_OF: RelationType = RelationType(12);
    pub const LOVE_INTEREST_OF: RelationType = RelationType(14);
    pub const COLLEAGUE_OF: RelationType = RelationType(16);
    pub const FRIEND_OF: RelationType = RelationType(27);
    pub const OTHER: RelationType = RelationType(28);

    pub fn from_rank(rank: u8) -> Option<Self> {
        (1..=NUM_RELATIONS as u8).contains(&rank).then_some(RelationType(rank))
    }

    /// Position in [`taxonomy`], i.e. `rank - 1`.
    pub fn from_index(index: usize) -> Option<Self> {
        (index < NUM_RELATIONS).then(|| RelationType(index as u8 + 1))
    }

    pub fn rank(self) -> u8 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn label(self) -> &'static str {
        LABELS[self.index()]
    }

    pub fn from_label(label: &str) -> Option<Self> {
        LABELS.iter().position(|l| *l == label).and_then(Self::from_index)
    }
}

/// All 28 relationship types in rank order.
pub fn taxonomy() -> Vec<RelationType> {
    (1..=NUM_RELATIONS as u8).map(RelationType).collect()
}

/// The most specific (lowest-rank) member of a relation set.
pub fn most_specific<I>(relations: I) -> Option<RelationType>
where
    I: IntoIterator<Item = RelationType>,
{
    relations.into_iter().min()
}

impl fmt::Display for RelationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for RelationType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RelationType::from_label(s).ok_or_else(|| Error::UnknownLabel(s.to_string()))
    }
}

impl Serialize for RelationType {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for RelationType {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        RelationType::from_label(&s)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown relationship label `{s}`")))
    }
}
