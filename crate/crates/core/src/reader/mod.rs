//! The stereotyping reader: a dyad relation classifier over serialized scenes.
//!
//! Head and tail are each represented by the `<s>` state of a shared
//! one-block self-attention encoder run over all of that speaker's turns in
//! the scene. With scene pooling enabled, the whole scene is encoded as well
//! and its token states are pooled by a learned attention vector that is
//! masked away from the head's and tail's own tokens; the pooled vector is
//! appended to the head and tail summaries before a linear softmax head.

mod gradcheck;
mod model;
mod train;
mod vocab;

use serde::{Deserialize, Serialize};

pub use gradcheck::{gradient_check, gradient_check_with, GradCheckReport};
pub use model::{
    attentive_pool, full_representation, pair_representation, speaker_sequence, token_mask, Encoded, ModelInput,
    Pooled, ReaderParams, GROUP_NAMES,
};
pub use train::{majority_baseline, train, MajorityBaseline, Model, TrainReport};
pub use vocab::{Vocab, UNK};

/// How the token mask enters the pooling softmax.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskMode {
    /// Masked positions are excluded (logit -inf) and receive weight 0.
    #[default]
    Additive,
    /// Logits are multiplied by the mask, so masked positions keep logit 0.
    Multiplicative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    #[default]
    Sgd,
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReaderConfig {
    pub d_model: usize,
    pub max_len: usize,
    pub use_scene_pooling: bool,
    pub mask_mode: MaskMode,
    pub learning_rate: f64,
    pub warmup_steps: usize,
    pub weight_decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: Optimizer,
    /// Standard deviation of the initial embeddings and attention maps.
    pub init_scale: f64,
    pub min_count: usize,
    pub seed: u64,
}

impl Default for ReaderConfig {
    fn default() -> Self {
        ReaderConfig {
            d_model: 64,
            max_len: 4096,
            use_scene_pooling: true,
            mask_mode: MaskMode::Additive,
            learning_rate: 5e-5,
            warmup_steps: 100,
            weight_decay: 0.0,
            epochs: 10,
            batch_size: 8,
            optimizer: Optimizer::Sgd,
            init_scale: 0.1,
            min_count: 1,
            seed: 0,
        }
    }
}

impl ReaderConfig {
    pub fn validate(&self) -> crate::Result<()> {
        let bad = |m: &str| Err(crate::Error::Invalid(format!("reader config: {m}")));
        if self.d_model < 2 {
            return bad("d_model must be at least 2");
        }
        if self.max_len < 8 {
            return bad("max_len must be at least 8");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        Ok(())
    }

    /// Width of the classifier input.
    pub fn repr_width(&self) -> usize {
        if self.use_scene_pooling {
            3 * self.d_model
        } else {
            2 * self.d_model
        }
    }
}
