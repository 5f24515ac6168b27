//! Dependency trees as interleaved word / arc-standard action sequences.
//!
//! A shift emits the next source word. `@L_<label>` makes the stack top the
//! head of the item below it and pops that item; `@R_<label>` makes the item
//! below the head of the stack top and pops the top.

use crate::error::{BsoError, Result};

pub const LEFT_PREFIX: &str = "@L_";
pub const RIGHT_PREFIX: &str = "@R_";
/// Label given to the word attached to the artificial root.
pub const ROOT_LABEL: &str = "root";
/// Label used by [`decode_failure_fallback`] for words it attaches to the root.
pub const FALLBACK_LABEL: &str = "dep";

/// A dependency tree; `heads[i]` is 1-based with 0 for the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseExample {
    pub words: Vec<String>,
    pub heads: Vec<usize>,
    pub labels: Vec<String>,
}

impl ParseExample {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Checks for a single-rooted tree over all words.
    pub fn validate(&self) -> Result<()> {
        let n = self.words.len();
        if n == 0 || self.heads.len() != n || self.labels.len() != n {
            return Err(BsoError::Data("parse needs one head and one label per word".into()));
        }
        if self.heads.iter().any(|&h| h > n) {
            return Err(BsoError::Data("head index out of range".into()));
        }
        if self.heads.iter().filter(|&&h| h == 0).count() != 1 {
            return Err(BsoError::Data("parse must have exactly one root-attached word".into()));
        }
        for start in 1..=n {
            let (mut cur, mut steps) = (start, 0);
            while cur != 0 {
                cur = self.heads[cur - 1];
                steps += 1;
                if steps > n {
                    return Err(BsoError::Data("parse contains a cycle".into()));
                }
            }
        }
        Ok(())
    }

    /// True if no arc crosses another (every word between a head and its
    /// dependent is a descendant of the head).
    pub fn is_projective(&self) -> bool {
        let n = self.words.len();
        let dominated_by = |mut k: usize, h: usize| {
            while k != 0 {
                if k == h {
                    return true;
                }
                k = self.heads[k - 1];
            }
            h == 0
        };
        for d in 1..=n {
            let h = self.heads[d - 1];
            if h == 0 {
                continue;
            }
            let (lo, hi) = (h.min(d), h.max(d));
            if ((lo + 1)..hi).any(|k| !dominated_by(k, h)) {
                return false;
            }
        }
        true
    }
}

pub fn is_action(token: &str) -> bool {
    token.starts_with(LEFT_PREFIX) || token.starts_with(RIGHT_PREFIX)
}

/// Arc-standard oracle sequence for a projective tree (no EOS).
pub fn encode_parse(p: &ParseExample) -> Result<Vec<String>> {
    p.validate()?;
    if !p.is_projective() {
        return Err(BsoError::Data("non-projective tree cannot be encoded".into()));
    }
    let n = p.len();
    let mut pending = vec![0usize; n + 1];
    for &h in &p.heads {
        pending[h] += 1;
    }
    let mut out = Vec::with_capacity(2 * n - 1);
    let mut stack: Vec<usize> = Vec::new();
    let mut next = 1;
    loop {
        if stack.len() >= 2 {
            let s0 = stack[stack.len() - 1];
            let s1 = stack[stack.len() - 2];
            if p.heads[s1 - 1] == s0 {
                out.push(format!("{LEFT_PREFIX}{}", p.labels[s1 - 1]));
                pending[s0] -= 1;
                stack.remove(stack.len() - 2);
                continue;
            }
            if p.heads[s0 - 1] == s1 && pending[s0] == 0 {
                out.push(format!("{RIGHT_PREFIX}{}", p.labels[s0 - 1]));
                pending[s1] -= 1;
                stack.pop();
                continue;
            }
        }
        if next > n {
            break;
        }
        out.push(p.words[next - 1].clone());
        stack.push(next);
        next += 1;
    }
    if stack.len() != 1 {
        return Err(BsoError::Internal("arc-standard oracle did not reduce to one item".into()));
    }
    Ok(out)
}

/// Inverse of [`encode_parse`]. A trailing EOS token (`eos`) is accepted.
pub fn decode_parse<S: AsRef<str>>(words: &[String], seq: &[S], eos: &str) -> Result<ParseExample> {
    let n = words.len();
    let mut heads = vec![usize::MAX; n];
    let mut labels = vec![String::new(); n];
    let mut stack: Vec<usize> = Vec::new();
    let mut next = 1;
    for (t, tok) in seq.iter().map(AsRef::as_ref).enumerate() {
        if tok == eos {
            if t + 1 != seq.len() {
                return Err(BsoError::Data("EOS before the end of the sequence".into()));
            }
            break;
        }
        if let Some(label) = tok.strip_prefix(LEFT_PREFIX) {
            if stack.len() < 2 {
                return Err(BsoError::Data(format!("left reduce at position {t} with fewer than two stack items")));
            }
            let dep = stack.remove(stack.len() - 2);
            heads[dep - 1] = stack[stack.len() - 1];
            labels[dep - 1] = label.to_string();
        } else if let Some(label) = tok.strip_prefix(RIGHT_PREFIX) {
            if stack.len() < 2 {
                return Err(BsoError::Data(format!("right reduce at position {t} with fewer than two stack items")));
            }
            let dep = stack.pop().expect("checked length");
            heads[dep - 1] = stack[stack.len() - 1];
            labels[dep - 1] = label.to_string();
        } else {
            if next > n {
                return Err(BsoError::Data(format!("shift at position {t} with an empty buffer")));
            }
            stack.push(next);
            next += 1;
        }
    }
    if next <= n || stack.len() != 1 {
        return Err(BsoError::Data("incomplete action sequence".into()));
    }
    heads[stack[0] - 1] = 0;
    labels[stack[0] - 1] = ROOT_LABEL.to_string();
    Ok(ParseExample {
        words: words.to_vec(),
        heads,
        labels,
    })
}

/// Best-effort decode that always yields a tree: reduces without two stack
/// items are skipped, shifts past the end of the buffer are ignored, and every
/// word left without a head is attached to the root.
pub fn decode_failure_fallback<S: AsRef<str>>(words: &[String], seq: &[S], eos: &str) -> ParseExample {
    if let Ok(p) = decode_parse(words, seq, eos) {
        return p;
    }
    let n = words.len();
    let mut heads = vec![0usize; n];
    let mut labels = vec![FALLBACK_LABEL.to_string(); n];
    let mut stack: Vec<usize> = Vec::new();
    let mut next = 1;
    for tok in seq.iter().map(AsRef::as_ref) {
        if tok == eos {
            break;
        }
        let (left, label) = match (tok.strip_prefix(LEFT_PREFIX), tok.strip_prefix(RIGHT_PREFIX)) {
            (Some(l), _) => (true, l),
            (_, Some(l)) => (false, l),
            _ => {
                if next <= n {
                    stack.push(next);
                    next += 1;
                }
                continue;
            }
        };
        if stack.len() < 2 {
            continue;
        }
        let dep = if left { stack.remove(stack.len() - 2) } else { stack.pop().expect("checked length") };
        heads[dep - 1] = stack[stack.len() - 1];
        labels[dep - 1] = label.to_string();
    }
    ParseExample {
        words: words.to_vec(),
        heads,
        labels,
    }
}
