//! Teleplay parsing, dyad dataset construction and a small trainable
//! classifier that predicts the stereotypic relationship a scene's dialogue
//! performs between two characters.

pub mod adapter;
pub mod analysis;
pub mod canonicalize;
pub mod corpus;
pub mod dataset;
pub mod error;
pub mod metrics;
pub mod parser;
pub mod reader;
pub mod synth;
pub mod taxonomy;
pub mod tokenize;

pub use error::{Error, Result};

/// 64-bit FNV-1a, used for stable seeds and cache file names.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
