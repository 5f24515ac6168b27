//! A small grammar for desk-scale word-ordering experiments.
//!
//! Sentences are `[PP] NP [adv] verb [NP] [adv] [PP]` with `NP = det [adj]
//! noun`. The order is (nearly) a function of the bag of words, but one that
//! has to be learned from the lexicon:
//!
//! - nouns rank by index; the best-ranked noun is the subject, the next the
//!   object and the last the object of the preposition
//! - determiners and adjectives agree in gender (index parity) with their noun
//! - each adverb has a fixed side of the verb, each preposition a fixed side
//!   of the clause
//!
//! The subject's determiner comes first, so even the first decision depends
//! on comparing every noun in the bag. Pairings of same-gender determiners
//! and adjectives stay ambiguous.

use rand::seq::{index, SliceRandom};
use rand::Rng;

const NOUNS: usize = 100;
const ADJS: usize = 50;
const ADVS: usize = 30;
const PREPS: usize = 15;
/// Adverbs below this index precede the verb.
const PRE_VERBAL_ADVS: usize = 15;
/// Prepositions below this index front their phrase.
const FRONTED_PREPS: usize = 4;

struct Lexicon {
    det: Vec<String>,
    noun: Vec<String>,
    adj: Vec<String>,
    verb_t: Vec<String>,
    verb_i: Vec<String>,
    adv: Vec<String>,
    prep: Vec<String>,
}

/// Word forms carry a two-letter index (`nounaa`, `nounab`, ...). Digits
/// would be collapsed by vocabulary normalization.
fn class(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{}{}", letter(i / 26), letter(i % 26))).collect()
}

fn letter(i: usize) -> char {
    char::from(b'a' + i as u8)
}

impl Lexicon {
    fn new() -> Self {
        Self {
            det: class("the", 6),
            noun: class("noun", NOUNS),
            adj: class("adj", ADJS),
            verb_t: class("takes", 50),
            verb_i: class("sleeps", 30),
            adv: class("adv", ADVS),
            prep: class("near", PREPS),
        }
    }

    fn size(&self) -> usize {
        [&self.det, &self.noun, &self.adj, &self.verb_t, &self.verb_i, &self.adv, &self.prep]
            .iter()
            .map(|c| c.len())
            .sum()
    }
}

/// Random member of `class` with the given gender (index parity).
fn of_gender<'a, R: Rng + ?Sized>(rng: &mut R, class: &'a [String], gender: usize) -> &'a String {
    &class[2 * rng.gen_range(0..class.len() / 2) + gender]
}

fn noun_phrase<R: Rng + ?Sized>(rng: &mut R, lex: &Lexicon, noun: usize, out: &mut Vec<String>) {
    let gender = noun % 2;
    out.push(of_gender(rng, &lex.det, gender).clone());
    if rng.gen_bool(0.35) {
        out.push(of_gender(rng, &lex.adj, gender).clone());
    }
    out.push(lex.noun[noun].clone());
}

fn sentence<R: Rng + ?Sized>(rng: &mut R, lex: &Lexicon) -> Vec<String> {
    let transitive = rng.gen_bool(0.6);
    let prep = rng.gen_bool(0.5).then(|| rng.gen_range(0..PREPS));
    let adv = rng.gen_bool(0.4).then(|| rng.gen_range(0..ADVS));
    let n = 1 + usize::from(transitive) + usize::from(prep.is_some());
    let mut nouns = index::sample(rng, NOUNS, n).into_vec();
    nouns.sort_unstable();

    let mut pp = Vec::new();
    if let Some(p) = prep {
        pp.push(lex.prep[p].clone());
        noun_phrase(rng, lex, nouns[n - 1], &mut pp);
    }
    let fronted = prep.is_some_and(|p| p < FRONTED_PREPS);
    let mut s = Vec::with_capacity(12);
    if fronted {
        s.append(&mut pp);
    }
    noun_phrase(rng, lex, nouns[0], &mut s);
    if let Some(a) = adv.filter(|&a| a < PRE_VERBAL_ADVS) {
        s.push(lex.adv[a].clone());
    }
    if transitive {
        s.push(lex.verb_t.choose(rng).expect("nonempty").clone());
        noun_phrase(rng, lex, nouns[1], &mut s);
    } else {
        s.push(lex.verb_i.choose(rng).expect("nonempty").clone());
    }
    if let Some(a) = adv.filter(|&a| a >= PRE_VERBAL_ADVS) {
        s.push(lex.adv[a].clone());
    }
    s.append(&mut pp);
    s
}

/// `n` sentences of 5 to 10 words over a vocabulary of 281 words.
pub fn synthetic_corpus<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Vec<String>> {
    let lex = Lexicon::new();
    debug_assert_eq!(lex.size(), VOCAB_SIZE);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let s = sentence(rng, &lex);
        if (5..=10).contains(&s.len()) {
            out.push(s);
        }
    }
    out
}

pub const VOCAB_SIZE: usize = 281;
