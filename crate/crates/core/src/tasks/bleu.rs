//! Corpus BLEU and add-one smoothed sentence BLEU.

use std::collections::HashMap;
use std::hash::Hash;

fn ngram_counts<T: Eq + Hash>(tokens: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    if n == 0 || tokens.len() < n {
        return counts;
    }
    for w in tokens.windows(n) {
        *counts.entry(w).or_insert(0) += 1;
    }
    counts
}

/// Clipped n-gram matches and the number of hypothesis n-grams.
fn modified_precision<T: Eq + Hash>(hyp: &[T], reference: &[T], n: usize) -> (usize, usize) {
    let h = ngram_counts(hyp, n);
    let r = ngram_counts(reference, n);
    let matched = h.iter().map(|(g, &c)| c.min(r.get(g).copied().unwrap_or(0))).sum();
    (matched, hyp.len().saturating_sub(n - 1))
}

fn brevity_penalty(hyp_len: usize, ref_len: usize) -> f64 {
    if hyp_len == 0 {
        0.0
    } else if hyp_len >= ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    }
}

/// Corpus-level BLEU on a 0-100 scale with one reference per hypothesis.
pub fn corpus_bleu<T: Eq + Hash, S: AsRef<[T]>>(hypotheses: &[S], references: &[S], max_n: usize) -> f64 {
    assert_eq!(hypotheses.len(), references.len(), "one reference per hypothesis");
    let mut matched = vec![0usize; max_n];
    let mut total = vec![0usize; max_n];
    let (mut c, mut r) = (0, 0);
    for (h, rf) in hypotheses.iter().zip(references) {
        let (h, rf) = (h.as_ref(), rf.as_ref());
        c += h.len();
        r += rf.len();
        for n in 1..=max_n {
            let (m, t) = modified_precision(h, rf, n);
            matched[n - 1] += m;
            total[n - 1] += t;
        }
    }
    if matched.iter().any(|&m| m == 0) {
        return 0.0;
    }
    let log_p: f64 = matched
        .iter()
        .zip(&total)
        .map(|(&m, &t)| (m as f64 / t as f64).ln())
        .sum::<f64>()
        / max_n as f64;
    100.0 * brevity_penalty(c, r) * log_p.exp()
}

/// Sentence BLEU in `[0, 1]`. Precisions of order 2 and up get add-one
/// smoothing; unigram precision is unsmoothed. The maximum order is
/// truncated to the hypothesis length.
pub fn sentence_bleu_smoothed<T: Eq + Hash>(hyp: &[T], reference: &[T], max_n: usize) -> f64 {
    let order = max_n.min(hyp.len());
    if order == 0 {
        return 0.0;
    }
    let mut log_p = 0.0;
    for n in 1..=order {
        let (m, t) = modified_precision(hyp, reference, n);
        let p = if n == 1 {
            m as f64 / t as f64
        } else {
            (m as f64 + 1.0) / (t as f64 + 1.0)
        };
        if p == 0.0 {
            return 0.0;
        }
        log_p += p.ln();
    }
    brevity_penalty(hyp.len(), reference.len()) * (log_p / order as f64).exp()
}
