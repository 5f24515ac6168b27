//! Hypotheses, expansions and deterministic top-K selection.

use std::cmp::Ordering;

use super::constraint::{ConstraintState, Successors};
use crate::error::Result;
use crate::model::StepOutput;

/// A candidate prefix on the beam.
#[derive(Debug, Clone)]
pub struct Hypothesis {
    pub tokens: Vec<usize>,
    /// Sum of the per-step scores of `tokens`.
    pub cum_score: f64,
    /// Score of the last token alone.
    pub last_score: f64,
    pub constraint: ConstraintState,
    /// `(parent rank in the previous beam, appended word)`; `None` for the empty prefix.
    pub backpointer: Option<(usize, usize)>,
    /// Decoder output after consuming the last token; absent until computed.
    pub output: Option<StepOutput>,
}

impl Hypothesis {
    pub fn root(constraint: ConstraintState, output: Option<StepOutput>) -> Self {
        Self {
            tokens: Vec::new(),
            cum_score: 0.0,
            last_score: 0.0,
            constraint,
            backpointer: None,
            output,
        }
    }

    /// Replaces the token sequence (used for roots that start mid-sequence).
    pub fn with_tokens(mut self, tokens: Vec<usize>) -> Self {
        self.tokens = tokens;
        self
    }

    pub fn last(&self) -> Option<usize> {
        self.tokens.last().copied()
    }

    pub fn is_finished(&self) -> bool {
        self.last() == Some(crate::tasks::vocab::EOS)
    }
}

/// One scored way of extending the beam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Expansion {
    pub parent: usize,
    pub word: usize,
    pub step_score: f64,
    pub score: f64,
}

/// Ranking order: higher cumulative score first, then lower word id, then lower parent rank.
pub fn expansion_order(a: &Expansion, b: &Expansion) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.word.cmp(&b.word))
        .then(a.parent.cmp(&b.parent))
}

/// The `k` best expansions, sorted by [`expansion_order`].
pub fn top_k(mut expansions: Vec<Expansion>, k: usize) -> Vec<Expansion> {
    assert!(k >= 1, "beam size must be at least 1");
    if expansions.len() > k {
        expansions.select_nth_unstable_by(k - 1, expansion_order);
        expansions.truncate(k);
    }
    expansions.sort_by(expansion_order);
    expansions
}

/// Expands `parent` (at rank `parent_rank`) with every allowed word, given its next-word scores.
pub fn expand(
    succ: &Successors,
    parent: &Hypothesis,
    parent_rank: usize,
    scores: &[f64],
    out: &mut Vec<Expansion>,
) -> Result<()> {
    for w in succ.allowed(&parent.constraint, parent.last())? {
        out.push(Expansion {
            parent: parent_rank,
            word: w,
            step_score: scores[w],
            score: parent.cum_score + scores[w],
        });
    }
    Ok(())
}

/// Builds the child hypothesis for an expansion (without its decoder output).
pub fn child(succ: &Successors, parent: &Hypothesis, e: &Expansion) -> Result<Hypothesis> {
    let mut tokens = Vec::with_capacity(parent.tokens.len() + 1);
    tokens.extend_from_slice(&parent.tokens);
    tokens.push(e.word);
    Ok(Hypothesis {
        tokens,
        cum_score: e.score,
        last_score: e.step_score,
        constraint: succ.advance(&parent.constraint, e.word)?,
        backpointer: Some((e.parent, e.word)),
        output: None,
    })
}
