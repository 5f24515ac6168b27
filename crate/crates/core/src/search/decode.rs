//! Test-time beam search.

use super::beam::{child, expand, top_k, Expansion, Hypothesis};
use super::constraint::Successors;
use crate::error::{BsoError, Result};
use crate::model::{EncodedSource, ScoreKind, Seq2Seq};
use crate::nn::SequenceMasks;
use crate::tasks::vocab::{BOS, EOS};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeOptions {
    pub beam: usize,
    pub max_len: usize,
    pub score: ScoreKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    /// Output tokens, including the final EOS when `finished`.
    pub tokens: Vec<usize>,
    pub score: f64,
    pub finished: bool,
}

/// Beam search from `enc.init_state`.
///
/// Completed hypotheses stay on the beam and compete with longer prefixes
/// (their score no longer changes). Search stops once every hypothesis on
/// the beam has emitted EOS or `max_len` steps were taken. The best completed
/// hypothesis is returned, or the best incomplete one if none completed.
pub fn beam_decode(model: &Seq2Seq, enc: &EncodedSource, succ: &Successors, opts: DecodeOptions) -> Result<Decoded> {
    if opts.beam == 0 {
        return Err(BsoError::Config("beam size must be at least 1".into()));
    }
    let masks = SequenceMasks::none();
    let (out, _) = model.decode_step(&enc.init_state, BOS, enc, &masks, 0)?;
    let mut beam = vec![Hypothesis::root(succ.initial_state(), Some(out))];

    for t in 1..=opts.max_len {
        if beam.iter().all(Hypothesis::is_finished) {
            break;
        }
        let mut cands: Vec<Expansion> = Vec::new();
        for (rank, h) in beam.iter().enumerate() {
            if h.is_finished() {
                cands.push(Expansion {
                    parent: rank,
                    word: EOS,
                    step_score: 0.0,
                    score: h.cum_score,
                });
                continue;
            }
            let output = h
                .output
                .as_ref()
                .ok_or_else(|| BsoError::Internal("unfinished hypothesis without decoder output".into()))?;
            let scores = model.scores(output, opts.score);
            expand(succ, h, rank, &scores, &mut cands)?;
        }
        if cands.is_empty() {
            let stuck = beam.first().map(|h| h.tokens.clone()).unwrap_or_default();
            return Err(BsoError::Decode { prefix: stuck });
        }

        let mut next = Vec::with_capacity(opts.beam);
        for e in top_k(cands, opts.beam) {
            let parent = &beam[e.parent];
            if parent.is_finished() {
                next.push(parent.clone());
                continue;
            }
            let mut h = child(succ, parent, &e)?;
            if !h.is_finished() && t < opts.max_len {
                let prev = &parent.output.as_ref().expect("checked above").state;
                let (out, _) = model.decode_step(prev, e.word, enc, &masks, t)?;
                h.output = Some(out);
            }
            next.push(h);
        }
        beam = next;
    }

    let best_finished = beam
        .iter()
        .filter(|h| h.is_finished())
        .max_by(|a, b| a.cum_score.total_cmp(&b.cum_score).then(b.tokens.cmp(&a.tokens)));
    let best = best_finished.or_else(|| beam.first()).expect("beam is never empty");
    Ok(Decoded {
        tokens: best.tokens.clone(),
        score: best.cum_score,
        finished: best.is_finished(),
    })
}
