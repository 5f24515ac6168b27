use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::error::{BsoError, Result};

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const BOS: usize = 2;
pub const EOS: usize = 3;

/// Surface forms of the reserved ids, in id order.
pub const RESERVED: [&str; 4] = ["<pad>", "<unk>", "<s>", "</s>"];

/// Replaces every ASCII digit with `0`.
pub fn normalize_digits(word: &str) -> String {
    word.chars().map(|c| if c.is_ascii_digit() { '0' } else { c }).collect()
}

/// Bidirectional token/id map with fixed reserved ids 0..4.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Default for Vocab {
    fn default() -> Self {
        let mut v = Self {
            tokens: Vec::new(),
            index: HashMap::new(),
        };
        for r in RESERVED {
            v.add(r);
        }
        v
    }
}

impl Vocab {
    pub fn new() -> Self {
        Self::default()
    }

    /// Words seen fewer than `min_count` times (after digit normalization) are
    /// left out and map to UNK. Kept words are ordered by descending count,
    /// then lexicographically.
    pub fn build<'a, I, S>(sentences: I, min_count: usize) -> Self
    where
        I: IntoIterator<Item = &'a S>,
        S: AsRef<[String]> + 'a + ?Sized,
    {
        let mut counts: HashMap<String, usize> = HashMap::new();
        for sentence in sentences {
            for w in sentence.as_ref() {
                *counts.entry(normalize_digits(w)).or_default() += 1;
            }
        }
        let mut kept: Vec<(String, usize)> = counts
            .into_iter()
            .filter(|(w, c)| *c >= min_count && !RESERVED.contains(&w.as_str()))
            .collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let mut v = Self::new();
        for (w, _) in kept {
            v.add(&w);
        }
        v
    }

    /// Adds `token` verbatim if absent and returns its id.
    pub fn add(&mut self, token: &str) -> usize {
        if let Some(&id) = self.index.get(token) {
            return id;
        }
        let id = self.tokens.len();
        self.tokens.push(token.to_string());
        self.index.insert(token.to_string(), id);
        id
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    /// Id of `word` after digit normalization; unknown words map to UNK.
    pub fn id(&self, word: &str) -> usize {
        if let Some(&id) = self.index.get(word) {
            return id;
        }
        self.index.get(&normalize_digits(word)).copied().unwrap_or(UNK)
    }

    pub fn token(&self, id: usize) -> &str {
        self.tokens.get(id).map(String::as_str).unwrap_or(RESERVED[UNK])
    }

    pub fn encode<S: AsRef<str>>(&self, words: &[S]) -> Vec<usize> {
        words.iter().map(|w| self.id(w.as_ref())).collect()
    }

    /// Maps ids back to tokens, stopping at EOS.
    pub fn decode(&self, ids: &[usize]) -> Vec<String> {
        ids.iter()
            .take_while(|&&i| i != EOS)
            .map(|&i| self.token(i).to_string())
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &str)> {
        self.tokens.iter().enumerate().map(|(i, t)| (i, t.as_str()))
    }

    /// One token per line, in id order.
    pub fn write<W: Write>(&self, w: &mut W) -> Result<()> {
        for t in &self.tokens {
            writeln!(w, "{t}")?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let tokens = r.lines().collect::<std::io::Result<Vec<String>>>()?;
        if tokens.len() < RESERVED.len() || tokens[..RESERVED.len()] != RESERVED {
            return Err(BsoError::Data("vocabulary file does not start with the reserved tokens".into()));
        }
        let mut v = Self::new();
        for t in &tokens[RESERVED.len()..] {
            if v.contains(t) {
                return Err(BsoError::Data(format!("duplicate vocabulary entry {t:?}")));
            }
            v.add(t);
        }
        Ok(v)
    }
}
