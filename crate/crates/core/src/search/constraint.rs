//! Successor functions: which words may extend a prefix.

use std::collections::BTreeMap;

use crate::error::{BsoError, Result};
use crate::tasks::vocab::{BOS, EOS, PAD};

/// Per-hypothesis bookkeeping for the active constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConstraintState {
    None,
    /// Words of the source not yet emitted, with multiplicities.
    Permutation { remaining: BTreeMap<usize, usize> },
    ArcStandard {
        stack_depth: usize,
        next_word: usize,
        reduces: usize,
    },
}

/// The successor function shared by every hypothesis of one decode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Successors {
    /// Any word except padding and BOS.
    Unconstrained { vocab_size: usize },
    /// Only unused source words; EOS once all are used.
    Permutation { source: Vec<usize> },
    /// Source words in order (shift) interleaved with reduce actions.
    ArcStandard {
        source: Vec<usize>,
        /// Ids of every `@L_*` / `@R_*` action, ascending.
        reduce_actions: Vec<usize>,
    },
}

impl Successors {
    pub fn unconstrained(vocab_size: usize) -> Self {
        Successors::Unconstrained { vocab_size }
    }

    pub fn permutation(source: &[usize]) -> Self {
        Successors::Permutation {
            source: source.to_vec(),
        }
    }

    pub fn arc_standard(source: &[usize], reduce_actions: &[usize]) -> Self {
        let mut reduce_actions = reduce_actions.to_vec();
        reduce_actions.sort_unstable();
        reduce_actions.dedup();
        Successors::ArcStandard {
            source: source.to_vec(),
            reduce_actions,
        }
    }

    pub fn initial_state(&self) -> ConstraintState {
        match self {
            Successors::Unconstrained { .. } => ConstraintState::None,
            Successors::Permutation { source } => {
                let mut remaining = BTreeMap::new();
                for &w in source {
                    *remaining.entry(w).or_insert(0) += 1;
                }
                ConstraintState::Permutation { remaining }
            }
            Successors::ArcStandard { .. } => ConstraintState::ArcStandard {
                stack_depth: 0,
                next_word: 0,
                reduces: 0,
            },
        }
    }

    /// Length of every complete output under this constraint, EOS included,
    /// when it is fixed.
    pub fn fixed_length(&self) -> Option<usize> {
        match self {
            Successors::Unconstrained { .. } => None,
            Successors::Permutation { source } => Some(source.len() + 1),
            Successors::ArcStandard { source, .. } => Some(2 * source.len()),
        }
    }

    /// Allowed next words in ascending id order. A prefix ending in EOS has none.
    pub fn allowed(&self, state: &ConstraintState, last: Option<usize>) -> Result<Vec<usize>> {
        if last == Some(EOS) {
            return Ok(Vec::new());
        }
        match (self, state) {
            (Successors::Unconstrained { vocab_size }, ConstraintState::None) => {
                Ok((0..*vocab_size).filter(|&w| w != PAD && w != BOS).collect())
            }
            (Successors::Permutation { .. }, ConstraintState::Permutation { remaining }) => {
                if remaining.is_empty() {
                    Ok(vec![EOS])
                } else {
                    Ok(remaining.keys().copied().collect())
                }
            }
            (
                Successors::ArcStandard {
                    source,
                    reduce_actions,
                },
                ConstraintState::ArcStandard {
                    stack_depth,
                    next_word,
                    ..
                },
            ) => {
                let mut out = Vec::new();
                if *next_word < source.len() {
                    out.push(source[*next_word]);
                }
                if *stack_depth >= 2 {
                    out.extend_from_slice(reduce_actions);
                }
                if *next_word == source.len() && *stack_depth == 1 {
                    out.push(EOS);
                }
                out.sort_unstable();
                out.dedup();
                Ok(out)
            }
            _ => Err(wrong_variant()),
        }
    }

    /// State after appending `word`, or a data error if the word is not allowed.
    pub fn advance(&self, state: &ConstraintState, word: usize) -> Result<ConstraintState> {
        match (self, state) {
            (Successors::Unconstrained { vocab_size }, ConstraintState::None) => {
                if word >= *vocab_size || word == PAD || word == BOS {
                    return Err(BsoError::Data(format!("word {word} is not a valid output")));
                }
                Ok(ConstraintState::None)
            }
            (Successors::Permutation { .. }, ConstraintState::Permutation { remaining }) => {
                let mut remaining = remaining.clone();
                if word == EOS {
                    if !remaining.is_empty() {
                        return Err(BsoError::Data("EOS before every source word was used".into()));
                    }
                    return Ok(ConstraintState::Permutation { remaining });
                }
                match remaining.get_mut(&word) {
                    Some(c) if *c > 1 => *c -= 1,
                    Some(_) => {
                        remaining.remove(&word);
                    }
                    None => return Err(BsoError::Data(format!("word {word} is not an unused source word"))),
                }
                Ok(ConstraintState::Permutation { remaining })
            }
            (
                Successors::ArcStandard {
                    source,
                    reduce_actions,
                },
                ConstraintState::ArcStandard {
                    stack_depth,
                    next_word,
                    reduces,
                },
            ) => {
                let (d, n, r) = (*stack_depth, *next_word, *reduces);
                if n < source.len() && word == source[n] {
                    return Ok(ConstraintState::ArcStandard {
                        stack_depth: d + 1,
                        next_word: n + 1,
                        reduces: r,
                    });
                }
                if reduce_actions.binary_search(&word).is_ok() {
                    if d < 2 {
                        return Err(BsoError::Data("reduce action with fewer than two stack items".into()));
                    }
                    return Ok(ConstraintState::ArcStandard {
                        stack_depth: d - 1,
                        next_word: n,
                        reduces: r + 1,
                    });
                }
                if word == EOS && n == source.len() && d == 1 {
                    return Ok(state.clone());
                }
                Err(BsoError::Data(format!(
                    "word {word} violates the arc-standard constraint (depth {d}, next word {n})"
                )))
            }
            _ => Err(wrong_variant()),
        }
    }

    /// Checks a whole sequence against the constraint, naming the first bad step (1-based).
    pub fn validate(&self, tokens: &[usize]) -> Result<()> {
        let mut state = self.initial_state();
        let mut last = None;
        for (t, &w) in tokens.iter().enumerate() {
            let allowed = self.allowed(&state, last)?;
            if !allowed.contains(&w) {
                return Err(BsoError::Data(format!(
                    "gold token {w} at step {} violates the output constraint",
                    t + 1
                )));
            }
            state = self.advance(&state, w)?;
            last = Some(w);
        }
        Ok(())
    }
}

fn wrong_variant() -> BsoError {
    BsoError::Usage("constraint state does not match the successor function".into())
}
