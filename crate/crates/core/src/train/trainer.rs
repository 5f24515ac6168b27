//! Epoch loops for cross-entropy pretraining and BSO training.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::bso::{bso_backward, bso_forward, BsoOptions, DeltaKind, MarginScore};
use super::schedule::BatchPlan;
use super::xent::{xent_loss_weighted, xent_value};
use crate::error::Result;
use crate::model::{ScoreKind, Seq2Seq};
use crate::nn::{clipped_adagrad_update, LearningRates, SequenceMasks};
use crate::search::{beam_decode, DecodeOptions, Successors};
use crate::tasks::vocab::PAD;

/// A training pair in id space. `output_words` are the source words as
/// target-vocabulary ids, used by the output constraints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub source: Vec<usize>,
    pub target: Vec<usize>,
    pub output_words: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Constraint {
    None,
    Permutation,
    ArcStandard { reduce_actions: Vec<usize> },
}

impl Constraint {
    pub fn successors(&self, ex: &Example, tgt_vocab: usize) -> Successors {
        match self {
            Constraint::None => Successors::unconstrained(tgt_vocab),
            Constraint::Permutation => Successors::permutation(&ex.output_words),
            Constraint::ArcStandard { reduce_actions } => Successors::arc_standard(&ex.output_words, reduce_actions),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    pub batch_size: usize,
    pub rates: LearningRates,
    pub clip: f64,
    pub seed: u64,
    pub margin: MarginScore,
    pub delta: DeltaKind,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            batch_size: 16,
            rates: LearningRates::default(),
            clip: 5.0,
            seed: 1,
            margin: MarginScore::Cumulative,
            delta: DeltaKind::ZeroOne,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    /// Training beam; 0 for cross-entropy epochs.
    pub beam: usize,
    pub loss: f64,
    pub violations: usize,
    /// Violations per target token.
    pub violation_rate: f64,
    pub sentences: usize,
    pub tokens: usize,
    pub seconds: f64,
    pub tokens_per_sec: f64,
}

impl EpochStats {
    fn finish(epoch: usize, beam: usize, loss: f64, violations: usize, examples: &[Example], start: Instant) -> Self {
        let tokens: usize = examples.iter().map(|e| e.target.len()).sum();
        let seconds = start.elapsed().as_secs_f64();
        Self {
            epoch,
            beam,
            loss,
            violations,
            violation_rate: if tokens == 0 { 0.0 } else { violations as f64 / tokens as f64 },
            sentences: examples.len(),
            tokens,
            seconds,
            tokens_per_sec: if seconds > 0.0 { tokens as f64 / seconds } else { f64::INFINITY },
        }
    }
}

fn mix(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed ^ a.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ b.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Dropout masks for one example in one epoch.
pub fn example_masks(model: &Seq2Seq, ex: &Example, seed: u64, epoch: usize, index: usize) -> SequenceMasks {
    let cfg = model.config();
    SequenceMasks::between_layers(
        cfg.dropout,
        cfg.layers,
        cfg.hidden_dim,
        ex.source.len(),
        ex.target.len(),
        mix(seed, epoch as u64, index as u64),
    )
}

fn batches(examples: &[Example], opts: &TrainOptions, epoch: usize) -> Vec<BatchPlan> {
    let lengths: Vec<usize> = examples.iter().map(|e| e.target.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(mix(opts.seed, epoch as u64, u64::MAX));
    BatchPlan::shuffled(&lengths, opts.batch_size, &mut rng)
}

/// One epoch of mini-batch cross-entropy training.
pub fn pretrain_epoch(model: &mut Seq2Seq, examples: &[Example], opts: &TrainOptions, epoch: usize) -> Result<EpochStats> {
    let start = Instant::now();
    let mut loss = 0.0;
    for plan in batches(examples, opts, epoch) {
        for (i, &idx) in plan.indices.iter().enumerate() {
            let ex = &examples[idx];
            let masks = example_masks(model, ex, opts.seed, epoch, idx);
            let padded = plan.pad(&ex.target, PAD);
            loss += xent_loss_weighted(model, &ex.source, &padded, &plan.mask(i), &masks)?;
        }
        clipped_adagrad_update(model.params_mut(), opts.rates, opts.clip);
    }
    Ok(EpochStats::finish(epoch, 0, loss, 0, examples, start))
}

/// One epoch of BSO training at a fixed beam. Each batch is searched to
/// completion before any gradient is computed, and parameters change only
/// once per batch.
pub fn train_bso_epoch(
    model: &mut Seq2Seq,
    examples: &[Example],
    constraint: &Constraint,
    opts: &TrainOptions,
    epoch: usize,
    beam: usize,
) -> Result<EpochStats> {
    let start = Instant::now();
    let bso = BsoOptions {
        beam,
        margin: opts.margin,
        delta: opts.delta,
    };
    let vocab = model.config().tgt_vocab;
    let (mut loss, mut violations) = (0.0, 0);
    for plan in batches(examples, opts, epoch) {
        let mut passes = Vec::with_capacity(plan.indices.len());
        for &idx in &plan.indices {
            let ex = &examples[idx];
            let masks = example_masks(model, ex, opts.seed, epoch, idx);
            let succ = constraint.successors(ex, vocab);
            let pass = bso_forward(model, &ex.source, &ex.target, &succ, &bso, &masks)?;
            loss += pass.loss();
            violations += pass.records.len();
            passes.push(pass);
        }
        for pass in passes {
            bso_backward(model, pass)?;
        }
        clipped_adagrad_update(model.params_mut(), opts.rates, opts.clip);
    }
    Ok(EpochStats::finish(epoch, beam, loss, violations, examples, start))
}

/// Per-token perplexity without dropout.
pub fn perplexity(model: &Seq2Seq, examples: &[Example]) -> Result<f64> {
    let (mut nll, mut tokens) = (0.0, 0);
    for ex in examples {
        nll += xent_value(model, &ex.source, &ex.target, &SequenceMasks::none())?;
        tokens += ex.target.len();
    }
    Ok((nll / tokens.max(1) as f64).exp())
}

/// Longest output considered when decoding `ex`.
pub fn max_output_len(succ: &Successors, ex: &Example) -> usize {
    succ.fixed_length().unwrap_or(2 * ex.source.len() + 2)
}

/// Beam-decodes every example; outputs keep their final EOS when one was produced.
pub fn decode_examples(
    model: &Seq2Seq,
    examples: &[Example],
    constraint: &Constraint,
    beam: usize,
    score: ScoreKind,
) -> Result<Vec<Vec<usize>>> {
    let vocab = model.config().tgt_vocab;
    examples
        .iter()
        .map(|ex| {
            let succ = constraint.successors(ex, vocab);
            let (enc, _) = model.encode(&ex.source, &SequenceMasks::none())?;
            let opts = DecodeOptions {
                beam,
                max_len: max_output_len(&succ, ex),
                score,
            };
            Ok(beam_decode(model, &enc, &succ, opts)?.tokens)
        })
        .collect()
}
