//! LSTM encoder and LSTM decoder with dot-product global attention and input feeding.
//!
//! One decoder step, for previous state `s` and word `w`:
//!
//! ```text
//! x0      = [emb(w); s.input_feed]
//! h_l     = LSTM_l(x_l, s.h_l, s.c_l)       x_l = mask_l * h_{l-1} for l > 0
//! a_j     = softmax_j(h_top . enc_j)
//! ctx     = sum_j a_j enc_j
//! attn    = tanh(W_c [ctx; h_top])
//! f(., s) = W_out attn + b_out              (g = log_softmax(f))
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::ModelConfig;
use super::state::{DecoderState, EncodedSource, StateGrad, StepOutput};
use crate::error::{BsoError, Result};
use crate::nn::ops::{add_assign, dot};
use crate::nn::softmax::{log_softmax, softmax, softmax_backward};
use crate::nn::{Affine, LstmCache, LstmCell, ParamGroup, ParamSlot, ParamStore, SequenceMasks, SlotId, Tensor};

#[derive(Debug, Clone)]
pub struct Seq2Seq {
    config: ModelConfig,
    params: ParamStore,
    src_embedding: SlotId,
    tgt_embedding: SlotId,
    encoder: Vec<LstmCell>,
    decoder: Vec<LstmCell>,
    attn_combine: Affine,
    output: Affine,
}

/// Per-step intermediates of the encoder.
#[derive(Debug, Clone)]
pub struct EncoderCache {
    tokens: Vec<usize>,
    steps: Vec<Vec<LstmCache>>,
    masks: Vec<Vec<Option<Vec<f64>>>>,
}

/// Intermediates of one [`Seq2Seq::decode_step`]; consumed by the backward pass.
#[derive(Debug, Clone)]
pub struct StepCache {
    word: usize,
    lstm: Vec<LstmCache>,
    masks: Vec<Option<Vec<f64>>>,
    top: Vec<f64>,
    attn_weights: Vec<f64>,
    context: Vec<f64>,
    attn_hidden: Vec<f64>,
}

impl StepCache {
    pub fn word(&self) -> usize {
        self.word
    }

    /// Dropout mask applied to the input of each decoder layer (none for layer 0).
    pub fn layer_masks(&self) -> &[Option<Vec<f64>>] {
        &self.masks
    }
}

/// Which per-word score a decoder exposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreKind {
    /// Log-probabilities (`g`).
    LogProb,
    /// Unnormalized scores (`f`).
    Raw,
}

impl Seq2Seq {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamStore::new();
        let s = config.init_scale;
        let (e, h) = (config.emb_dim, config.hidden_dim);

        let src_embedding = params.add(ParamSlot::new(
            "encoder.embedding",
            ParamGroup::Recurrent,
            Tensor::uniform(&[config.src_vocab, e], s, &mut rng),
        ));
        let encoder = (0..config.layers)
            .map(|l| {
                let d_in = if l == 0 { e } else { h };
                LstmCell::new(&mut params, &format!("encoder.lstm{l}"), d_in, h, s, &mut rng)
            })
            .collect();
        let tgt_embedding = params.add(ParamSlot::new(
            "decoder.embedding",
            ParamGroup::Recurrent,
            Tensor::uniform(&[config.tgt_vocab, e], s, &mut rng),
        ));
        let decoder = (0..config.layers)
            .map(|l| {
                let d_in = if l == 0 { e + h } else { h };
                LstmCell::new(&mut params, &format!("decoder.lstm{l}"), d_in, h, s, &mut rng)
            })
            .collect();
        let attn_combine = Affine::new(
            &mut params,
            "decoder.attn_combine",
            ParamGroup::Recurrent,
            2 * h,
            h,
            false,
            s,
            &mut rng,
        );
        let output = Affine::new(
            &mut params,
            "output",
            ParamGroup::Output,
            h,
            config.tgt_vocab,
            true,
            s,
            &mut rng,
        );
        Ok(Self {
            config,
            params,
            src_embedding,
            tgt_embedding,
            encoder,
            decoder,
            attn_combine,
            output,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    pub fn output_layer(&self) -> &Affine {
        &self.output
    }

    fn embed(&self, table: SlotId, vocab: usize, token: usize, side: &str) -> Result<Vec<f64>> {
        if token >= vocab {
            return Err(BsoError::Input(format!(
                "{side} token id {token} outside vocabulary of size {vocab}"
            )));
        }
        Ok(self.params.get(table).value.row(token).iter().map(|&v| v as f64).collect())
    }

    fn embed_backward(&mut self, table: SlotId, token: usize, grad: &[f64]) {
        let e = self.config.emb_dim;
        let slot = self.params.get_mut(table);
        add_assign(&mut slot.grad[token * e..(token + 1) * e], grad);
    }

    /// Runs the stacked encoder left to right over `source`.
    pub fn encode(&self, source: &[usize], masks: &SequenceMasks) -> Result<(EncodedSource, EncoderCache)> {
        if source.is_empty() {
            return Err(BsoError::Input("empty source sequence".into()));
        }
        let (layers, h) = (self.config.layers, self.config.hidden_dim);
        let mut state: Vec<(Vec<f64>, Vec<f64>)> = vec![(vec![0.0; h], vec![0.0; h]); layers];
        let mut annotations = Vec::with_capacity(source.len());
        let mut cache = EncoderCache {
            tokens: source.to_vec(),
            steps: Vec::with_capacity(source.len()),
            masks: Vec::with_capacity(source.len()),
        };

        for (t, &tok) in source.iter().enumerate() {
            let mut x = self.embed(self.src_embedding, self.config.src_vocab, tok, "source")?;
            let mut step_caches = Vec::with_capacity(layers);
            let mut step_masks = Vec::with_capacity(layers);
            for (l, cell) in self.encoder.iter().enumerate() {
                let mask = if l > 0 {
                    match &masks.encoder {
                        Some(table) => {
                            let m = table.get(l - 1, t)?.to_vec();
                            x.iter_mut().zip(&m).for_each(|(v, k)| *v *= k);
                            Some(m)
                        }
                        None => None,
                    }
                } else {
                    None
                };
                let (hn, cn, c) = cell.forward(&self.params, &x, &state[l].0, &state[l].1)?;
                state[l] = (hn.clone(), cn);
                step_caches.push(c);
                step_masks.push(mask);
                x = hn;
            }
            annotations.push(x);
            cache.steps.push(step_caches);
            cache.masks.push(step_masks);
        }

        let init_state = DecoderState {
            layers: state,
            input_feed: vec![0.0; h],
        };
        Ok((EncodedSource { annotations, init_state }, cache))
    }

    /// Back-propagates gradients on the annotations and on the decoder's
    /// initial state through the encoder.
    pub fn encode_backward(
        &mut self,
        cache: EncoderCache,
        d_annotations: &[Vec<f64>],
        d_init: &StateGrad,
    ) -> Result<()> {
        let h = self.config.hidden_dim;
        let layers = self.config.layers;
        if d_annotations.len() != cache.tokens.len() {
            return Err(BsoError::Shape {
                what: "annotation gradients",
                expected: cache.tokens.len(),
                got: d_annotations.len(),
            });
        }
        // Carried (dh, dc) into each layer from the following time-step.
        let mut carry: Vec<(Vec<f64>, Vec<f64>)> = d_init.layers.clone();
        let steps = cache.steps.into_iter().zip(cache.masks).zip(cache.tokens).rev();
        for (t, ((step_caches, step_masks), tok)) in (0..d_annotations.len()).rev().zip(steps) {
            let mut dh_out = d_annotations[t].clone();
            let mut layer_caches = step_caches;
            for l in (0..layers).rev() {
                let c = layer_caches.pop().ok_or_else(|| BsoError::Internal("missing encoder cache".into()))?;
                let mut dh = carry[l].0.clone();
                add_assign(&mut dh, &dh_out);
                let cell = self.encoder[l];
                let g = c.backward(&cell, &mut self.params, &dh, &carry[l].1)?;
                carry[l] = (g.dh_prev, g.dc_prev);
                dh_out = g.d_input;
                if let Some(m) = &step_masks[l] {
                    dh_out.iter_mut().zip(m).for_each(|(v, k)| *v *= k);
                }
            }
            self.embed_backward(self.src_embedding, tok, &dh_out);
        }
        debug_assert!(carry.iter().all(|(a, b)| a.len() == h && b.len() == h));
        Ok(())
    }

    /// Advances `prev` by one target word.
    ///
    /// `step` is the number of target words consumed before `word` (0 for BOS)
    /// and selects the decoder dropout mask.
    pub fn decode_step(
        &self,
        prev: &DecoderState,
        word: usize,
        enc: &EncodedSource,
        masks: &SequenceMasks,
        step: usize,
    ) -> Result<(StepOutput, StepCache)> {
        let layers = self.config.layers;
        let mut x = self.embed(self.tgt_embedding, self.config.tgt_vocab, word, "target")?;
        x.extend_from_slice(&prev.input_feed);

        let mut new_layers = Vec::with_capacity(layers);
        let mut lstm = Vec::with_capacity(layers);
        let mut step_masks = Vec::with_capacity(layers);
        for (l, cell) in self.decoder.iter().enumerate() {
            let mask = if l > 0 {
                match &masks.decoder {
                    Some(table) => {
                        let m = table.get(l - 1, step)?.to_vec();
                        x.iter_mut().zip(&m).for_each(|(v, k)| *v *= k);
                        Some(m)
                    }
                    None => None,
                }
            } else {
                None
            };
            let (hn, cn, c) = cell.forward(&self.params, &x, &prev.layers[l].0, &prev.layers[l].1)?;
            new_layers.push((hn.clone(), cn));
            lstm.push(c);
            step_masks.push(mask);
            x = hn;
        }
        let top = x;

        let scores: Vec<f64> = enc.annotations.iter().map(|a| dot(&top, a)).collect();
        let attn_weights = softmax(&scores);
        let mut context = vec![0.0; top.len()];
        for (w, a) in attn_weights.iter().zip(&enc.annotations) {
            context.iter_mut().zip(a).for_each(|(c, v)| *c += w * v);
        }
        let mut combined = context.clone();
        combined.extend_from_slice(&top);
        let attn_hidden: Vec<f64> = self
            .attn_combine
            .forward(&self.params, &combined)?
            .into_iter()
            .map(f64::tanh)
            .collect();

        let out = StepOutput {
            state: DecoderState {
                layers: new_layers,
                input_feed: attn_hidden.clone(),
            },
            attn_weights: attn_weights.clone(),
            attn_hidden: attn_hidden.clone(),
        };
        let cache = StepCache {
            word,
            lstm,
            masks: step_masks,
            top,
            attn_weights,
            context,
            attn_hidden,
        };
        Ok((out, cache))
    }

    /// Back-propagates a gradient on a step's output state (its input-feed
    /// entry carries every gradient on `attn_hidden`). Annotation gradients
    /// are added into `d_annotations`; the gradient on the previous state is returned.
    pub fn decode_step_backward(
        &mut self,
        cache: StepCache,
        enc: &EncodedSource,
        d_out: &StateGrad,
        d_annotations: &mut [Vec<f64>],
    ) -> Result<StateGrad> {
        let h = self.config.hidden_dim;
        let layers = self.config.layers;

        let dz: Vec<f64> = d_out
            .input_feed
            .iter()
            .zip(&cache.attn_hidden)
            .map(|(d, a)| d * (1.0 - a * a))
            .collect();
        let mut combined = cache.context.clone();
        combined.extend_from_slice(&cache.top);
        let d_combined = self.attn_combine.backward(&mut self.params, &combined, &dz)?;
        let (d_context, d_top_direct) = d_combined.split_at(h);

        let mut d_top = d_top_direct.to_vec();
        let d_weights: Vec<f64> = enc.annotations.iter().map(|a| dot(d_context, a)).collect();
        let d_scores = softmax_backward(&cache.attn_weights, &d_weights);
        for (j, a) in enc.annotations.iter().enumerate() {
            let dj = &mut d_annotations[j];
            let (w, ds) = (cache.attn_weights[j], d_scores[j]);
            for k in 0..h {
                dj[k] += w * d_context[k] + ds * cache.top[k];
                d_top[k] += ds * a[k];
            }
        }

        let mut d_prev = StateGrad::zeros(layers, h);
        let mut dh_above = d_top;
        let mut lstm = cache.lstm;
        for l in (0..layers).rev() {
            let c = lstm.pop().ok_or_else(|| BsoError::Internal("missing decoder cache".into()))?;
            let mut dh = d_out.layers[l].0.clone();
            add_assign(&mut dh, &dh_above);
            let cell = self.decoder[l];
            let g = c.backward(&cell, &mut self.params, &dh, &d_out.layers[l].1)?;
            d_prev.layers[l] = (g.dh_prev, g.dc_prev);
            dh_above = g.d_input;
            if let Some(m) = &cache.masks[l] {
                dh_above.iter_mut().zip(m).for_each(|(v, k)| *v *= k);
            }
        }
        let e = self.config.emb_dim;
        self.embed_backward(self.tgt_embedding, cache.word, &dh_above[..e]);
        d_prev.input_feed = dh_above[e..].to_vec();
        Ok(d_prev)
    }

    /// Unnormalized next-word scores `f`.
    pub fn score_f(&self, out: &StepOutput) -> Vec<f64> {
        self.output
            .forward(&self.params, &out.attn_hidden)
            .expect("attention output has the hidden size")
    }

    /// Next-word log-probabilities `g`.
    pub fn score_g(&self, out: &StepOutput) -> Vec<f64> {
        log_softmax(&self.score_f(out))
    }

    pub fn scores(&self, out: &StepOutput, kind: ScoreKind) -> Vec<f64> {
        match kind {
            ScoreKind::Raw => self.score_f(out),
            ScoreKind::LogProb => self.score_g(out),
        }
    }

    /// Gradient of `sum_w d_scores[w] * f(w)` into the output layer; returns
    /// the gradient on `attn_hidden`.
    pub fn score_backward(&mut self, attn_hidden: &[f64], d_scores: &[f64]) -> Result<Vec<f64>> {
        self.output.backward(&mut self.params, attn_hidden, d_scores)
    }

    /// Sparse variant of [`Self::score_backward`] for a single word with coefficient `coef`.
    pub fn score_backward_word(&mut self, attn_hidden: &[f64], word: usize, coef: f64) -> Vec<f64> {
        let h = self.config.hidden_dim;
        let w = self.params.get_mut(self.output.weight);
        let row = &mut w.grad[word * h..(word + 1) * h];
        row.iter_mut().zip(attn_hidden).for_each(|(g, a)| *g += coef * a);
        let d: Vec<f64> = w.value.row(word).iter().map(|&v| coef * v as f64).collect();
        if let Some(b) = self.output.bias {
            self.params.get_mut(b).grad[word] += coef;
        }
        d
    }

    pub fn zero_state_grad(&self) -> StateGrad {
        StateGrad::zeros(self.config.layers, self.config.hidden_dim)
    }

    pub fn zero_annotation_grads(&self, src_len: usize) -> Vec<Vec<f64>> {
        vec![vec![0.0; self.config.hidden_dim]; src_len]
    }

    /// Gradient on the decoder's initial state becomes the gradient on the
    /// encoder's final state (the input feed starts at a constant zero).
    pub fn init_state_grad(&self, d: &StateGrad) -> StateGrad {
        let mut g = d.clone();
        g.input_feed.iter_mut().for_each(|v| *v = 0.0);
        g
    }

    /// Rebuilds a model around an existing parameter store with the same layout.
    pub fn from_parts(config: ModelConfig, params: ParamStore) -> Result<Self> {
        let mut m = Self::new(config, 0)?;
        if m.params.slots().len() != params.slots().len() {
            return Err(BsoError::Checkpoint("parameter layout mismatch".into()));
        }
        for (dst, src) in m.params.slots().iter().zip(params.slots()) {
            if dst.name != src.name || dst.value.shape() != src.value.shape() {
                return Err(BsoError::Checkpoint(format!(
                    "parameter {} does not match {}",
                    src.name, dst.name
                )));
            }
        }
        m.params = params;
        Ok(m)
    }
}
