use ndarray::{concatenate, s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal};
use serde::{Deserialize, Serialize};

use super::vocab::Vocab;
use super::{MaskMode, ReaderConfig};
use crate::corpus::DyadInstance;
use crate::dataset::{BACKGROUND, BOS, SPEAKER};
use crate::error::{Error, Result};
use crate::taxonomy::NUM_RELATIONS;

pub const GROUP_NAMES: [&str; 8] = [
    "embeddings",
    "query",
    "key",
    "value",
    "output",
    "pool",
    "classifier",
    "bias",
];

/// All learnable tensors. Row-vector convention: a token state `x` maps to
/// `x · query`, and the classifier computes `classifier · h + bias`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReaderParams {
    pub embeddings: Array2<f64>,
    pub query: Array2<f64>,
    pub key: Array2<f64>,
    pub value: Array2<f64>,
    pub output: Array2<f64>,
    pub pool: Array1<f64>,
    pub classifier: Array2<f64>,
    pub bias: Array1<f64>,
}

fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, std: f64) -> Array2<f64> {
    if std == 0.0 {
        return Array2::zeros((rows, cols));
    }
    let normal = Normal::new(0.0, std).expect("positive std");
    Array2::from_shape_simple_fn((rows, cols), || normal.sample(rng))
}

impl ReaderParams {
    /// Random embeddings and attention maps; zero pooling vector and head.
    pub fn init(vocab_size: usize, config: &ReaderConfig) -> Self {
        let d = config.d_model;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let std = config.init_scale;
        ReaderParams {
            embeddings: normal_matrix(&mut rng, vocab_size, d, std),
            query: normal_matrix(&mut rng, d, d, std),
            key: normal_matrix(&mut rng, d, d, std),
            value: normal_matrix(&mut rng, d, d, std),
            output: normal_matrix(&mut rng, d, d, std),
            pool: Array1::zeros(d),
            classifier: Array2::zeros((NUM_RELATIONS, config.repr_width())),
            bias: Array1::zeros(NUM_RELATIONS),
        }
    }

    /// Every tensor drawn from N(0, std²), including the pooling vector and head.
    pub fn random(vocab_size: usize, config: &ReaderConfig, std: f64) -> Self {
        let d = config.d_model;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        ReaderParams {
            embeddings: normal_matrix(&mut rng, vocab_size, d, std),
            query: normal_matrix(&mut rng, d, d, std),
            key: normal_matrix(&mut rng, d, d, std),
            value: normal_matrix(&mut rng, d, d, std),
            output: normal_matrix(&mut rng, d, d, std),
            pool: normal_matrix(&mut rng, 1, d, std).row(0).to_owned(),
            classifier: normal_matrix(&mut rng, NUM_RELATIONS, config.repr_width(), std),
            bias: normal_matrix(&mut rng, 1, NUM_RELATIONS, std).row(0).to_owned(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        ReaderParams {
            embeddings: Array2::zeros(self.embeddings.raw_dim()),
            query: Array2::zeros(self.query.raw_dim()),
            key: Array2::zeros(self.key.raw_dim()),
            value: Array2::zeros(self.value.raw_dim()),
            output: Array2::zeros(self.output.raw_dim()),
            pool: Array1::zeros(self.pool.raw_dim()),
            classifier: Array2::zeros(self.classifier.raw_dim()),
            bias: Array1::zeros(self.bias.raw_dim()),
        }
    }

    pub fn d_model(&self) -> usize {
        self.query.nrows()
    }

    pub fn groups(&self) -> [(&'static str, &[f64]); 8] {
        fn slice(a: Option<&[f64]>) -> &[f64] {
            a.expect("standard layout")
        }
        [
            (GROUP_NAMES[0], slice(self.embeddings.as_slice())),
            (GROUP_NAMES[1], slice(self.query.as_slice())),
            (GROUP_NAMES[2], slice(self.key.as_slice())),
            (GROUP_NAMES[3], slice(self.value.as_slice())),
            (GROUP_NAMES[4], slice(self.output.as_slice())),
            (GROUP_NAMES[5], slice(self.pool.as_slice())),
            (GROUP_NAMES[6], slice(self.classifier.as_slice())),
            (GROUP_NAMES[7], slice(self.bias.as_slice())),
        ]
    }

    pub fn groups_mut(&mut self) -> [(&'static str, &mut [f64]); 8] {
        fn slice(a: Option<&mut [f64]>) -> &mut [f64] {
            a.expect("standard layout")
        }
        [
            (GROUP_NAMES[0], slice(self.embeddings.as_slice_mut())),
            (GROUP_NAMES[1], slice(self.query.as_slice_mut())),
            (GROUP_NAMES[2], slice(self.key.as_slice_mut())),
            (GROUP_NAMES[3], slice(self.value.as_slice_mut())),
            (GROUP_NAMES[4], slice(self.output.as_slice_mut())),
            (GROUP_NAMES[5], slice(self.pool.as_slice_mut())),
            (GROUP_NAMES[6], slice(self.classifier.as_slice_mut())),
            (GROUP_NAMES[7], slice(self.bias.as_slice_mut())),
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.groups().iter().all(|(_, g)| g.iter().all(|v| v.is_finite()))
    }

    /// Checks tensor shapes against a configuration and vocabulary size.
    pub fn validate(&self, vocab_size: usize, config: &ReaderConfig) -> Result<()> {
        let d = config.d_model;
        let expect = |name: &str, got: &[usize], want: &[usize]| {
            if got == want {
                Ok(())
            } else {
                Err(Error::Shape(format!("{name}: got {got:?}, expected {want:?}")))
            }
        };
        expect("embeddings", self.embeddings.shape(), &[vocab_size, d])?;
        for (name, m) in [
            ("query", &self.query),
            ("key", &self.key),
            ("value", &self.value),
            ("output", &self.output),
        ] {
            expect(name, m.shape(), &[d, d])?;
        }
        expect("pool", self.pool.shape(), &[d])?;
        expect(
            "classifier",
            self.classifier.shape(),
            &[NUM_RELATIONS, config.repr_width()],
        )?;
        expect("bias", self.bias.shape(), &[NUM_RELATIONS])?;
        if !self.is_finite() {
            return Err(Error::Invalid("parameters contain non-finite values".into()));
        }
        Ok(())
    }
}

/// Fixed sinusoidal position encodings for positions `0..len`.
pub(crate) fn positions(len: usize, d: usize) -> Array2<f64> {
    Array2::from_shape_fn((len, d), |(pos, i)| {
        let rate = 10000f64.powf((2 * (i / 2)) as f64 / d as f64);
        let angle = pos as f64 / rate;
        if i % 2 == 0 {
            angle.sin()
        } else {
            angle.cos()
        }
    })
}

fn softmax_in_place(mut row: ndarray::ArrayViewMut1<f64>) {
    let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    row.mapv_inplace(|v| (v - max).exp());
    let sum = row.sum();
    row.mapv_inplace(|v| v / sum);
}

pub(crate) fn softmax(logits: ArrayView1<f64>) -> Array1<f64> {
    let mut out = logits.to_owned();
    softmax_in_place(out.view_mut());
    out
}

/// Hidden states of one encoded sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoded {
    /// State at the leading `<s>` position.
    pub summary: Array1<f64>,
    pub hidden: Array2<f64>,
}

/// Intermediate values kept for the backward pass.
#[derive(Debug, Clone)]
pub(crate) struct EncoderTrace {
    ids: Vec<usize>,
    rows: Vec<usize>,
    x: Array2<f64>,
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    attn: Array2<f64>,
    z: Array2<f64>,
    /// Output states for `rows`.
    pub(crate) h: Array2<f64>,
}

/// Attention-pooled scene vector and the weights that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Pooled {
    pub vector: Array1<f64>,
    pub weights: Array1<f64>,
}

/// Pools token states with `softmax(w_A · h_j)` restricted by the mask.
pub fn attentive_pool(hidden: ArrayView2<f64>, mask: &[f64], pool: ArrayView1<f64>, mode: MaskMode) -> Result<Pooled> {
    if hidden.nrows() == 0 {
        return Err(Error::Invalid("cannot pool an empty sequence".into()));
    }
    if mask.len() != hidden.nrows() {
        return Err(Error::Shape(format!(
            "mask has {} entries for {} positions",
            mask.len(),
            hidden.nrows()
        )));
    }
    let logits = hidden.dot(&pool);
    let weights = match mode {
        MaskMode::Additive => {
            let max = logits
                .iter()
                .zip(mask)
                .filter(|(_, m)| **m != 0.0)
                .map(|(l, _)| *l)
                .fold(f64::NEG_INFINITY, f64::max);
            if max == f64::NEG_INFINITY {
                return Err(Error::EmptyContext);
            }
            let mut w: Array1<f64> = logits
                .iter()
                .zip(mask)
                .map(|(l, m)| if *m != 0.0 { (l - max).exp() } else { 0.0 })
                .collect();
            let sum = w.sum();
            w /= sum;
            w
        }
        MaskMode::Multiplicative => {
            let masked: Array1<f64> = logits.iter().zip(mask).map(|(l, m)| l * m).collect();
            softmax(masked.view())
        }
    };
    Ok(Pooled {
        vector: hidden.t().dot(&weights),
        weights,
    })
}

/// `[head; tail]`.
pub fn pair_representation(head: ArrayView1<f64>, tail: ArrayView1<f64>) -> Array1<f64> {
    concatenate(Axis(0), &[head, tail]).expect("1-d concatenation")
}

/// `[head; tail; pooled]`.
pub fn full_representation(pair: ArrayView1<f64>, pooled: ArrayView1<f64>) -> Array1<f64> {
    concatenate(Axis(0), &[pair, pooled]).expect("1-d concatenation")
}

/// `<s>` followed by every turn span (`<speaker> name <line> text`) of `who`.
pub fn speaker_sequence(tokens: &[String], attribution: &[Option<String>], who: &str) -> Vec<String> {
    let mut out = vec![BOS.to_string()];
    let mut i = 0;
    while i < tokens.len() {
        let owned = tokens[i] == SPEAKER && attribution.get(i + 1).and_then(|a| a.as_deref()) == Some(who);
        if !owned {
            i += 1;
            continue;
        }
        let end = (i + 1..tokens.len())
            .find(|&j| tokens[j] == SPEAKER || tokens[j] == BACKGROUND)
            .unwrap_or(tokens.len());
        out.extend_from_slice(&tokens[i..end]);
        i = end;
    }
    out
}

/// 0 where a token belongs to the head's or tail's turns, 1 elsewhere.
pub fn token_mask(attribution: &[Option<String>], head: &str, tail: &str) -> Vec<f64> {
    attribution
        .iter()
        .map(|a| match a.as_deref() {
            Some(w) if w == head || w == tail => 0.0,
            _ => 1.0,
        })
        .collect()
}

/// Token ids and mask for one instance, truncated to `max_len` from the right.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelInput {
    pub head: Vec<usize>,
    pub tail: Vec<usize>,
    pub scene: Vec<usize>,
    pub mask: Vec<f64>,
}

impl ModelInput {
    pub fn from_instance(inst: &DyadInstance, vocab: &Vocab, max_len: usize) -> Result<Self> {
        if inst.tokens.len() != inst.attribution.len() {
            return Err(Error::Shape(format!(
                "{}: {} tokens but {} attributions",
                inst.key(),
                inst.tokens.len(),
                inst.attribution.len()
            )));
        }
        let seq = |who: &str| -> Result<Vec<usize>> {
            let toks = speaker_sequence(&inst.tokens, &inst.attribution, who);
            if toks.len() == 1 {
                return Err(Error::Invalid(format!(
                    "{}: `{who}` has no turns in the scene",
                    inst.key()
                )));
            }
            let mut ids = vocab.encode(&toks);
            ids.truncate(max_len);
            Ok(ids)
        };
        let mut scene = vocab.encode(&inst.tokens);
        scene.truncate(max_len);
        let mut mask = token_mask(&inst.attribution, &inst.head, &inst.tail);
        mask.truncate(max_len);
        Ok(ModelInput {
            head: seq(&inst.head)?,
            tail: seq(&inst.tail)?,
            scene,
            mask,
        })
    }
}

pub(crate) struct PoolTrace {
    encoder: EncoderTrace,
    weights: Array1<f64>,
}

pub(crate) struct ForwardTrace {
    head: EncoderTrace,
    tail: EncoderTrace,
    scene: Option<PoolTrace>,
    repr: Array1<f64>,
    pub(crate) probs: Array1<f64>,
}

impl ReaderParams {
    fn encode_rows(&self, ids: &[usize], all_rows: bool) -> Result<EncoderTrace> {
        if ids.is_empty() {
            return Err(Error::Invalid("cannot encode an empty sequence".into()));
        }
        if let Some(bad) = ids.iter().find(|&&i| i >= self.embeddings.nrows()) {
            return Err(Error::Shape(format!("token id {bad} outside the embedding table")));
        }
        let d = self.d_model();
        let scale = 1.0 / (d as f64).sqrt();
        let mut x = self.embeddings.select(Axis(0), ids);
        x += &positions(ids.len(), d);
        let rows: Vec<usize> = if all_rows { (0..ids.len()).collect() } else { vec![0] };
        let xr = if all_rows {
            x.clone()
        } else {
            x.slice(s![0..1, ..]).to_owned()
        };
        let q = xr.dot(&self.query);
        let k = x.dot(&self.key);
        let v = x.dot(&self.value);
        let mut attn = q.dot(&k.t()) * scale;
        for row in attn.rows_mut() {
            softmax_in_place(row);
        }
        let z = attn.dot(&v);
        let h = &xr + &z.dot(&self.output);
        Ok(EncoderTrace {
            ids: ids.to_vec(),
            rows,
            x,
            q,
            k,
            v,
            attn,
            z,
            h,
        })
    }

    fn encode_backward(&self, tr: &EncoderTrace, dh: &Array2<f64>, g: &mut ReaderParams) {
        let d = self.d_model();
        let scale = 1.0 / (d as f64).sqrt();
        let mut dx = Array2::<f64>::zeros(tr.x.raw_dim());
        for (r, &row) in tr.rows.iter().enumerate() {
            let mut dst = dx.row_mut(row);
            dst += &dh.row(r);
        }
        let dz = dh.dot(&self.output.t());
        g.output += &tr.z.t().dot(dh);
        let da = dz.dot(&tr.v.t());
        let dv = tr.attn.t().dot(&dz);
        let mut ds = da;
        for (mut ds_row, a_row) in ds.rows_mut().into_iter().zip(tr.attn.rows()) {
            let dot = ds_row.dot(&a_row);
            ds_row.zip_mut_with(&a_row, |g, &a| *g = a * (*g - dot) * scale);
        }
        let dq = ds.dot(&tr.k);
        let dk = ds.t().dot(&tr.q);
        let xr = tr.x.select(Axis(0), &tr.rows);
        g.query += &xr.t().dot(&dq);
        g.key += &tr.x.t().dot(&dk);
        g.value += &tr.x.t().dot(&dv);
        let dxq = dq.dot(&self.query.t());
        for (r, &row) in tr.rows.iter().enumerate() {
            let mut dst = dx.row_mut(row);
            dst += &dxq.row(r);
        }
        dx += &dk.dot(&self.key.t());
        dx += &dv.dot(&self.value.t());
        for (j, &id) in tr.ids.iter().enumerate() {
            let mut dst = g.embeddings.row_mut(id);
            dst += &dx.row(j);
        }
    }

    /// Embeds, adds positions and applies the self-attention block with a
    /// residual connection.
    pub fn encode_sequence(&self, ids: &[usize]) -> Result<Encoded> {
        let tr = self.encode_rows(ids, true)?;
        Ok(Encoded {
            summary: tr.h.row(0).to_owned(),
            hidden: tr.h,
        })
    }

    /// The `<s>` state only; equals `encode_sequence(ids).summary`.
    pub fn summarize(&self, ids: &[usize]) -> Result<Array1<f64>> {
        Ok(self.encode_rows(ids, false)?.h.row(0).to_owned())
    }

    /// Softmax of the linear head.
    pub fn classify(&self, h: ArrayView1<f64>) -> Result<Array1<f64>> {
        if h.len() != self.classifier.ncols() {
            return Err(Error::Shape(format!(
                "representation width {} but classifier expects {}",
                h.len(),
                self.classifier.ncols()
            )));
        }
        let logits = self.classifier.dot(&h) + &self.bias;
        Ok(softmax(logits.view()))
    }

    pub(crate) fn forward(&self, input: &ModelInput, config: &ReaderConfig) -> Result<ForwardTrace> {
        let head = self.encode_rows(&input.head, false)?;
        let tail = self.encode_rows(&input.tail, false)?;
        let mut repr = pair_representation(head.h.row(0), tail.h.row(0));
        let scene = if config.use_scene_pooling {
            let encoder = self.encode_rows(&input.scene, true)?;
            let pooled = attentive_pool(encoder.h.view(), &input.mask, self.pool.view(), config.mask_mode)?;
            repr = full_representation(repr.view(), pooled.vector.view());
            Some(PoolTrace {
                encoder,
                weights: pooled.weights,
            })
        } else {
            None
        };
        let probs = self.classify(repr.view())?;
        Ok(ForwardTrace {
            head,
            tail,
            scene,
            repr,
            probs,
        })
    }

    pub fn probabilities(&self, input: &ModelInput, config: &ReaderConfig) -> Result<Array1<f64>> {
        Ok(self.forward(input, config)?.probs)
    }

    pub fn loss(&self, input: &ModelInput, label: usize, config: &ReaderConfig) -> Result<f64> {
        let probs = self.probabilities(input, config)?;
        Ok(-probs[label].ln())
    }

    /// Cross-entropy for one example; gradients are added into `grads`.
    pub fn loss_and_grad(
        &self,
        input: &ModelInput,
        label: usize,
        config: &ReaderConfig,
        grads: &mut ReaderParams,
    ) -> Result<f64> {
        let tr = self.forward(input, config)?;
        let loss = -tr.probs[label].ln();

        let mut dlogits = tr.probs.clone();
        dlogits[label] -= 1.0;
        let dlogits_col = dlogits.view().insert_axis(Axis(1));
        let repr_row = tr.repr.view().insert_axis(Axis(0));
        grads.classifier += &dlogits_col.dot(&repr_row);
        grads.bias += &dlogits;
        let drepr = self.classifier.t().dot(&dlogits);

        let d = self.d_model();
        let dhead = drepr.slice(s![0..d]).to_owned().insert_axis(Axis(0));
        let dtail = drepr.slice(s![d..2 * d]).to_owned().insert_axis(Axis(0));
        self.encode_backward(&tr.head, &dhead, grads);
        self.encode_backward(&tr.tail, &dtail, grads);

        if let Some(pt) = &tr.scene {
            let dpooled = drepr.slice(s![2 * d..3 * d]);
            let hidden = &pt.encoder.h;
            let alpha = &pt.weights;
            let mut dh = alpha.view().insert_axis(Axis(1)).dot(&dpooled.insert_axis(Axis(0)));
            let dalpha = hidden.dot(&dpooled);
            let mean = dalpha.dot(alpha);
            let mut dlogit: Array1<f64> = alpha.iter().zip(&dalpha).map(|(a, da)| a * (da - mean)).collect();
            if config.mask_mode == MaskMode::Multiplicative {
                for (g, m) in dlogit.iter_mut().zip(&input.mask) {
                    *g *= m;
                }
            }
            grads.pool += &hidden.t().dot(&dlogit);
            dh += &dlogit
                .view()
                .insert_axis(Axis(1))
                .dot(&self.pool.view().insert_axis(Axis(0)));
            self.encode_backward(&pt.encoder, &dh, grads);
        }
        Ok(loss)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn config(pooling: bool) -> ReaderConfig {
        ReaderConfig {
            d_model: 8,
            max_len: 32,
            use_scene_pooling: pooling,
            seed: 3,
            ..ReaderConfig::default()
        }
    }

    #[test]
    fn pooling_uniform_logits_average_unmasked_states() {
        let hidden = Array2::from_shape_fn((4, 3), |(i, j)| (i * 3 + j) as f64);
        let pool = Array1::zeros(3);
        let p = attentive_pool(hidden.view(), &[1.0, 0.0, 1.0, 1.0], pool.view(), MaskMode::Additive).unwrap();
        assert_eq!(p.weights.to_vec(), vec![1.0 / 3.0, 0.0, 1.0 / 3.0, 1.0 / 3.0]);
        let mean = (hidden.row(0).to_owned() + hidden.row(2) + hidden.row(3)) / 3.0;
        for (a, b) in p.vector.iter().zip(mean.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn pooling_softmax_oracle() {
        // One-dimensional states so that the logits equal the states.
        let hidden = Array2::from_shape_vec((3, 1), vec![2.0, 1.0, 0.0]).unwrap();
        let pool = Array1::from(vec![1.0]);
        let p = attentive_pool(hidden.view(), &[1.0, 1.0, 0.0], pool.view(), MaskMode::Additive).unwrap();
        let e2 = 2f64.exp();
        let e1 = 1f64.exp();
        assert_abs_diff_eq!(p.weights[0], e2 / (e2 + e1), epsilon = 1e-15);
        assert_abs_diff_eq!(p.weights[1], e1 / (e2 + e1), epsilon = 1e-15);
        assert_eq!(p.weights[2], 0.0);
        assert_abs_diff_eq!(p.weights[0], 0.731, epsilon = 5e-4);
    }

    #[test]
    fn multiplicative_mask_keeps_weight_on_masked_positions() {
        let hidden = Array2::from_shape_vec((3, 1), vec![2.0, 1.0, 0.5]).unwrap();
        let pool = Array1::from(vec![1.0]);
        let p = attentive_pool(hidden.view(), &[1.0, 0.0, 0.0], pool.view(), MaskMode::Multiplicative).unwrap();
        let z = 2f64.exp() + 2.0;
        assert_abs_diff_eq!(p.weights[1], 1.0 / z, epsilon = 1e-15);
        assert_abs_diff_eq!(p.weights[2], 1.0 / z, epsilon = 1e-15);
        assert_abs_diff_eq!(p.weights.sum(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn all_masked_additive_is_empty_context() {
        let hidden = Array2::ones((2, 2));
        let pool = Array1::zeros(2);
        assert!(matches!(
            attentive_pool(hidden.view(), &[0.0, 0.0], pool.view(), MaskMode::Additive),
            Err(Error::EmptyContext)
        ));
    }

    #[test]
    fn zero_attention_maps_pass_embeddings_plus_positions() {
        let cfg = ReaderConfig {
            init_scale: 0.0,
            ..config(false)
        };
        let mut p = ReaderParams::init(10, &cfg);
        p.embeddings = Array2::from_shape_fn((10, 8), |(i, j)| (i as f64) * 0.1 + j as f64 * 0.01);
        let ids = [2, 5, 7];
        let enc = p.encode_sequence(&ids).unwrap();
        let pos = positions(3, 8);
        for (j, id) in ids.iter().enumerate() {
            for c in 0..8 {
                assert_abs_diff_eq!(
                    enc.hidden[[j, c]],
                    p.embeddings[[*id, c]] + pos[[j, c]],
                    epsilon = 1e-15
                );
            }
        }
        assert!(enc.summary.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn summary_matches_full_encoding_and_positions_matter() {
        let p = ReaderParams::random(12, &config(true), 0.3);
        let ids = [2, 7, 8, 9];
        let full = p.encode_sequence(&ids).unwrap();
        let summary = p.summarize(&ids).unwrap();
        for (a, b) in summary.iter().zip(full.summary.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        let swapped = p.encode_sequence(&[2, 8, 7, 9]).unwrap();
        assert_ne!(full.hidden.row(1), swapped.hidden.row(2));
        assert_ne!(full.hidden.row(1), swapped.hidden.row(1));

        let single = p.encode_sequence(&[2]).unwrap();
        assert_eq!(single.hidden.nrows(), 1);
        assert_eq!(single.summary, single.hidden.row(0));
    }

    #[test]
    fn representations_concatenate_in_order() {
        let a = Array1::from(vec![1.0, 2.0]);
        let b = Array1::from(vec![3.0, 4.0]);
        assert_eq!(
            pair_representation(a.view(), b.view()).to_vec(),
            vec![1.0, 2.0, 3.0, 4.0]
        );
        assert_eq!(
            pair_representation(b.view(), a.view()).to_vec(),
            vec![3.0, 4.0, 1.0, 2.0]
        );
        let pooled = Array1::zeros(2);
        let full = full_representation(pair_representation(a.view(), b.view()).view(), pooled.view());
        assert_eq!(full.to_vec(), vec![1.0, 2.0, 3.0, 4.0, 0.0, 0.0]);
    }

    #[test]
    fn zero_head_is_uniform() {
        let p = ReaderParams::init(10, &config(true));
        let probs = p.classify(Array1::ones(24).view()).unwrap();
        for v in probs.iter() {
            assert_abs_diff_eq!(*v, 1.0 / 28.0, epsilon = 1e-15);
        }
        assert!(p.classify(Array1::ones(16).view()).is_err());
    }

    #[test]
    fn bias_spike_sets_argmax() {
        let mut p = ReaderParams::random(10, &config(false), 0.1);
        p.bias[11] = 50.0;
        let probs = p.classify(Array1::ones(16).view()).unwrap();
        let argmax = probs.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert_eq!(argmax, 11);
        assert_abs_diff_eq!(probs.sum(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn speaker_sequences_and_mask() {
        let tokens: Vec<String> =
            "<s> <scene> X <background> A waits <speaker> A <line> hi <speaker> B <line> yo <speaker> A <line> bye"
                .split(' ')
                .map(String::from)
                .collect();
        let who = |s: &str| Some(s.to_string());
        let attribution = vec![
            None,
            None,
            None,
            None,
            None,
            None,
            None,
            who("A"),
            None,
            who("A"),
            None,
            who("B"),
            None,
            who("B"),
            None,
            who("A"),
            None,
            who("A"),
        ];
        assert_eq!(
            speaker_sequence(&tokens, &attribution, "A").join(" "),
            "<s> <speaker> A <line> hi <speaker> A <line> bye"
        );
        assert_eq!(
            speaker_sequence(&tokens, &attribution, "B").join(" "),
            "<s> <speaker> B <line> yo"
        );
        assert_eq!(speaker_sequence(&tokens, &attribution, "C"), vec!["<s>"]);
        let m = token_mask(&attribution, "A", "C");
        assert_eq!(m.iter().filter(|v| **v == 0.0).count(), 4);
        assert_eq!(m[4], 1.0);
    }
}
