//! Teacher-forced decoding of a fixed token sequence and its backward pass.

use std::io::{Read, Write};

use super::seq2seq::{Seq2Seq, StepCache};
use super::state::{EncodedSource, StateGrad, StepOutput};
use super::ModelConfig;
use crate::error::{BsoError, Result};
use crate::nn::checkpoint::{read_fragment, write_fragment, Fragment};
use crate::nn::{ParamStore, SequenceMasks, Tensor};
use crate::tasks::vocab::BOS;

/// Decoder outputs along a fixed sequence. `outputs[s]` is the state after
/// consuming BOS and `tokens[..s]`, i.e. the state that scores `tokens[s]`.
#[derive(Debug, Clone)]
pub struct ForcedPath {
    pub tokens: Vec<usize>,
    pub outputs: Vec<StepOutput>,
    caches: Vec<Option<StepCache>>,
}

impl ForcedPath {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Takes the cache of step `s`; each cache can be taken once.
    pub fn take_cache(&mut self, s: usize) -> Result<StepCache> {
        self.caches
            .get_mut(s)
            .and_then(Option::take)
            .ok_or_else(|| BsoError::Usage(format!("decoder cache for step {s} missing or already consumed")))
    }
}

/// Gradient on the scores emitted at one step.
#[derive(Debug, Clone, PartialEq)]
pub enum ScoreGrad {
    None,
    Dense(Vec<f64>),
    Word(usize, f64),
}

impl Seq2Seq {
    /// Runs the decoder on `tokens` from `enc.init_state`.
    pub fn run_forced(&self, enc: &EncodedSource, tokens: &[usize], masks: &SequenceMasks) -> Result<ForcedPath> {
        let mut outputs = Vec::with_capacity(tokens.len());
        let mut caches = Vec::with_capacity(tokens.len());
        let mut prev = enc.init_state.clone();
        for s in 0..tokens.len() {
            let word = if s == 0 { BOS } else { tokens[s - 1] };
            let (out, cache) = self.decode_step(&prev, word, enc, masks, s)?;
            prev = out.state.clone();
            outputs.push(out);
            caches.push(Some(cache));
        }
        Ok(ForcedPath {
            tokens: tokens.to_vec(),
            outputs,
            caches,
        })
    }

    /// Sum of `f(tokens[s])` along the path (or of `g` for [`super::ScoreKind::LogProb`]).
    pub fn path_scores(&self, path: &ForcedPath, kind: super::ScoreKind) -> Vec<f64> {
        path.outputs
            .iter()
            .zip(&path.tokens)
            .map(|(o, &w)| self.scores(o, kind)[w])
            .collect()
    }

    /// Back-propagates per-step score gradients through a forced path and
    /// returns the gradient on the decoder's initial state. `score_grads[s]`
    /// applies to the scores computed from `path.outputs[s]`.
    pub fn backprop_forced(
        &mut self,
        path: &mut ForcedPath,
        enc: &EncodedSource,
        score_grads: &[ScoreGrad],
        d_annotations: &mut [Vec<f64>],
    ) -> Result<StateGrad> {
        let mut carry = self.zero_state_grad();
        for s in (0..path.len()).rev() {
            let attn_hidden = &path.outputs[s].attn_hidden;
            let d_attn = match score_grads.get(s).unwrap_or(&ScoreGrad::None) {
                ScoreGrad::None => None,
                ScoreGrad::Dense(d) => Some(self.score_backward(attn_hidden, d)?),
                ScoreGrad::Word(w, c) => Some(self.score_backward_word(attn_hidden, *w, *c)),
            };
            if let Some(d) = d_attn {
                crate::nn::ops::add_assign(&mut carry.input_feed, &d);
            }
            let cache = path.take_cache(s)?;
            carry = self.decode_step_backward(cache, enc, &carry, d_annotations)?;
        }
        Ok(carry)
    }

    pub fn save<W: Write>(&self, w: &mut W) -> Result<()> {
        let mut tensors = Vec::with_capacity(2 * self.params().slots().len());
        for slot in self.params().slots() {
            tensors.push((slot.name.clone(), slot.value.clone()));
        }
        for slot in self.params().slots() {
            let acc: Vec<f32> = slot.accum.iter().map(|&a| a as f32).collect();
            tensors.push((format!("{}@adagrad", slot.name), Tensor::from_vec(slot.value.shape(), acc)?));
        }
        write_fragment(
            w,
            &Fragment {
                header: self.config().to_header(),
                tensors,
            },
        )
    }

    pub fn load<R: Read>(r: &mut R) -> Result<Self> {
        let frag = read_fragment(r)?;
        let config = ModelConfig::from_header(&frag.header)?;
        let mut params: ParamStore = Seq2Seq::new(config.clone(), 0)?.params().clone();
        for slot in params.slots_mut() {
            let value = frag
                .get(&slot.name)
                .ok_or_else(|| BsoError::Checkpoint(format!("missing tensor {}", slot.name)))?;
            if value.shape() != slot.value.shape() {
                return Err(BsoError::Checkpoint(format!("shape mismatch for {}", slot.name)));
            }
            slot.value = value.clone();
            if let Some(acc) = frag.get(&format!("{}@adagrad", slot.name)) {
                slot.accum = acc.data().iter().map(|&a| a as f64).collect();
            }
        }
        Seq2Seq::from_parts(config, params)
    }
}
