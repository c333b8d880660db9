use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{ModelInput, ReaderParams};
use super::vocab::Vocab;
use super::{Optimizer, ReaderConfig};
use crate::corpus::{Distribution, DyadInstance, PredictionRecord};
use crate::error::{Error, Result};
use crate::taxonomy::{RelationType, NUM_RELATIONS};

/// A trained reader: configuration, vocabulary and parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub config: ReaderConfig,
    pub vocab: Vocab,
    pub params: ReaderParams,
}

impl Model {
    pub fn input(&self, inst: &DyadInstance) -> Result<ModelInput> {
        ModelInput::from_instance(inst, &self.vocab, self.config.max_len)
    }

    pub fn distribution(&self, inst: &DyadInstance) -> Result<Distribution> {
        let probs = self.params.probabilities(&self.input(inst)?, &self.config)?;
        // Renormalize so rounding in the softmax never trips the sum check.
        let sum = probs.sum();
        Distribution::new(probs.iter().map(|p| p / sum).collect())
    }

    pub fn model_id(&self) -> String {
        if self.config.use_scene_pooling {
            "reader".into()
        } else {
            "reader-nopool".into()
        }
    }

    pub fn predict(&self, inst: &DyadInstance) -> Result<PredictionRecord> {
        Ok(PredictionRecord::new(
            inst.key(),
            self.distribution(inst)?,
            self.model_id(),
        ))
    }

    /// Predictions in input order.
    pub fn predict_all(&self, instances: &[DyadInstance]) -> Result<Vec<PredictionRecord>> {
        instances.par_iter().map(|i| self.predict(i)).collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer(std::io::BufWriter::new(file), self)
            .map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: Model = serde_json::from_str(&text).map_err(|e| Error::Schema {
            path: path.to_path_buf(),
            line: e.line(),
            field: String::new(),
            message: e.to_string(),
        })?;
        model.config.validate()?;
        model.vocab.validate()?;
        model.params.validate(model.vocab.len(), &model.config)?;
        Ok(model)
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub model: Model,
    /// Mean loss over the training set before the first update.
    pub initial_loss: f64,
    /// Mean loss of the updates made in each epoch.
    pub epoch_losses: Vec<f64>,
    pub steps: usize,
}

struct Adam {
    m: ReaderParams,
    v: ReaderParams,
    t: i32,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

fn apply_update(params: &mut ReaderParams, grads: &ReaderParams, adam: Option<&mut Adam>, lr: f64, weight_decay: f64) {
    match adam {
        None => {
            for ((_, p), (_, g)) in params.groups_mut().into_iter().zip(grads.groups()) {
                for (p, g) in p.iter_mut().zip(g) {
                    *p -= lr * (g + weight_decay * *p);
                }
            }
        }
        Some(state) => {
            state.t += 1;
            let c1 = 1.0 - BETA1.powi(state.t);
            let c2 = 1.0 - BETA2.powi(state.t);
            let groups = params
                .groups_mut()
                .into_iter()
                .zip(grads.groups())
                .zip(state.m.groups_mut())
                .zip(state.v.groups_mut());
            for ((((_, p), (_, g)), (_, m)), (_, v)) in groups {
                for (((p, g), m), v) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                    let g = g + weight_decay * *p;
                    *m = BETA1 * *m + (1.0 - BETA1) * g;
                    *v = BETA2 * *v + (1.0 - BETA2) * g * g;
                    *p -= lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPS);
                }
            }
        }
    }
}

fn batch_gradient(
    params: &ReaderParams,
    batch: &[&(ModelInput, usize)],
    config: &ReaderConfig,
) -> Result<(f64, ReaderParams)> {
    // Per-example gradients are computed in parallel but summed in batch
    // order so results do not depend on thread scheduling.
    let parts = batch
        .par_iter()
        .map(|(input, label)| {
            let mut g = params.zeros_like();
            let loss = params.loss_and_grad(input, *label, config, &mut g)?;
            Ok((loss, g))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut loss = 0.0;
    let mut grads = params.zeros_like();
    for (l, g) in parts {
        loss += l;
        for ((_, a), (_, b)) in grads.groups_mut().into_iter().zip(g.groups()) {
            a.iter_mut().zip(b).for_each(|(a, b)| *a += b);
        }
    }
    let n = batch.len() as f64;
    for (_, g) in grads.groups_mut() {
        g.iter_mut().for_each(|v| *v /= n);
    }
    Ok((loss / n, grads))
}

/// Mini-batch training with cross-entropy on the gold labels.
pub fn train(instances: &[DyadInstance], config: &ReaderConfig) -> Result<TrainReport> {
    config.validate()?;
    let vocab = Vocab::build(instances, config.min_count)?;
    let mut params = ReaderParams::init(vocab.len(), config);
    let examples: Vec<(ModelInput, usize)> = instances
        .iter()
        .map(|inst| {
            Ok((
                ModelInput::from_instance(inst, &vocab, config.max_len)?,
                inst.label.index(),
            ))
        })
        .collect::<Result<_>>()?;

    let initial_loss = examples
        .par_iter()
        .map(|(input, label)| params.loss(input, *label, config))
        .collect::<Result<Vec<_>>>()?
        .iter()
        .sum::<f64>()
        / examples.len() as f64;

    let mut adam = (config.optimizer == Optimizer::Adam).then(|| Adam {
        m: params.zeros_like(),
        v: params.zeros_like(),
        t: 0,
    });
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut step = 0usize;
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&(ModelInput, usize)> = chunk.iter().map(|&i| &examples[i]).collect();
            let (loss, grads) = batch_gradient(&params, &batch, config)?;
            if !loss.is_finite() {
                return Err(Error::Diverged { step, loss });
            }
            let warm = if config.warmup_steps == 0 {
                1.0
            } else {
                ((step + 1) as f64 / config.warmup_steps as f64).min(1.0)
            };
            apply_update(
                &mut params,
                &grads,
                adam.as_mut(),
                config.learning_rate * warm,
                config.weight_decay,
            );
            if !params.is_finite() {
                return Err(Error::Diverged { step, loss: f64::NAN });
            }
            total += loss;
            batches += 1;
            step += 1;
        }
        let mean = total / batches.max(1) as f64;
        log::debug!("epoch {epoch}: mean loss {mean:.4}");
        epoch_losses.push(mean);
    }
    Ok(TrainReport {
        model: Model {
            config: config.clone(),
            vocab,
            params,
        },
        initial_loss,
        epoch_losses,
        steps: step,
    })
}

/// Always predicts the most frequent training label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MajorityBaseline {
    pub label: RelationType,
}

impl MajorityBaseline {
    pub fn predict(&self, inst: &DyadInstance) -> PredictionRecord {
        PredictionRecord::new(inst.key(), Distribution::one_hot(self.label), "majority")
    }
}

/// Most frequent gold label; ties go to the lower rank.
pub fn majority_baseline(instances: &[DyadInstance]) -> Result<MajorityBaseline> {
    if instances.is_empty() {
        return Err(Error::Invalid("majority baseline needs at least one instance".into()));
    }
    let mut counts = [0usize; NUM_RELATIONS];
    for inst in instances {
        counts[inst.label.index()] += 1;
    }
    let best = counts.iter().copied().max().unwrap_or(0);
    let index = counts.iter().position(|&c| c == best).unwrap_or(0);
    Ok(MajorityBaseline {
        label: RelationType::from_index(index).expect("index in range"),
    })
}
