//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use bso::model::{ModelConfig, ScoreGrad, ScoreKind, Seq2Seq};
use bso::nn::SequenceMasks;
use bso::search::Successors;
use bso::train::{MarginScore, ViolationRecord};
use rand::Rng;

pub fn toy_model(vocab: usize, hidden: usize, layers: usize, dropout: f64, scale: f32, seed: u64) -> Seq2Seq {
    let mut cfg = ModelConfig::new(vocab, vocab, 5, hidden, layers);
    cfg.dropout = dropout;
    cfg.init_scale = scale;
    Seq2Seq::new(cfg, seed).unwrap()
}

/// `f` score of each token of `tokens`, recomputed from scratch.
pub fn step_scores(model: &Seq2Seq, src: &[usize], tokens: &[usize], masks: &SequenceMasks) -> Vec<f64> {
    let (enc, _) = model.encode(src, masks).unwrap();
    let path = model.run_forced(&enc, tokens, masks).unwrap();
    model.path_scores(&path, ScoreKind::Raw)
}

/// One violation as found by [`brute_force_search`].
#[derive(Debug, Clone, PartialEq)]
pub struct RefViolation {
    pub t: usize,
    pub r: usize,
    pub comparator: Vec<usize>,
    pub rank: usize,
}

#[derive(Debug, Clone)]
pub struct RefCandidate {
    pub tokens: Vec<usize>,
    pub score: f64,
    pub last: f64,
}

/// Training search that rescores every candidate prefix from scratch at
/// every step instead of carrying decoder states. Returns the violations
/// and the final candidate set.
pub fn brute_force_search(
    model: &Seq2Seq,
    src: &[usize],
    gold: &[usize],
    succ: &Successors,
    k: usize,
    margin: MarginScore,
    masks: &SequenceMasks,
) -> (Vec<RefViolation>, Vec<RefCandidate>) {
    let n = gold.len();
    let segment = |tokens: &[usize], r: usize| -> (f64, f64) {
        let s = step_scores(model, src, tokens, masks);
        (s[r..].iter().fold(0.0, |a, b| a + b), *s.last().unwrap())
    };
    let allowed = |prefix: &[usize]| -> Vec<usize> {
        let mut state = succ.initial_state();
        for &w in prefix {
            state = succ.advance(&state, w).unwrap();
        }
        succ.allowed(&state, prefix.last().copied()).unwrap()
    };
    let mut out = Vec::new();
    let mut r = 0;
    let mut beam: Vec<Vec<usize>> = vec![gold[..0].to_vec()];
    let mut last_set = Vec::new();
    for t in 1..=n {
        // (score, word, parent rank, tokens, last)
        let mut cands: Vec<(f64, usize, usize, Vec<usize>, f64)> = Vec::new();
        for (rank, p) in beam.iter().enumerate() {
            for w in allowed(p) {
                let mut seq = p.clone();
                seq.push(w);
                let (score, last) = segment(&seq, r);
                cands.push((score, w, rank, seq, last));
            }
        }
        cands.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        cands.truncate(k);
        let (gold_seg, gold_last) = segment(&gold[..t], r);
        let non_gold: Vec<usize> = (0..cands.len()).filter(|&i| cands[i].3[..] != gold[..t]).collect();
        let comp = if t < n { non_gold.last() } else { non_gold.first() };
        let mut violated = false;
        if let Some(&i) = comp {
            let (g, v) = match margin {
                MarginScore::Cumulative => (gold_seg, cands[i].0),
                MarginScore::LastStep => (gold_last, cands[i].4),
            };
            if g < v + 1.0 {
                violated = true;
                out.push(RefViolation {
                    t,
                    r,
                    comparator: cands[i].3.clone(),
                    rank: i,
                });
            }
        }
        if t == n {
            last_set = cands
                .iter()
                .map(|c| RefCandidate {
                    tokens: c.3.clone(),
                    score: c.0,
                    last: c.4,
                })
                .collect();
            break;
        }
        if violated {
            r = t;
            beam = vec![gold[..t].to_vec()];
        } else {
            beam = cands
                .into_iter()
                .filter(|c| c.3.last() != Some(&bso::tasks::vocab::EOS))
                .map(|c| c.3)
                .collect();
        }
    }
    (out, last_set)
}

/// Gradient of the frozen margin loss by separate full backpropagation
/// through the gold prefix and the violating sequence of every record.
pub fn naive_backward(model: &mut Seq2Seq, src: &[usize], gold: &[usize], records: &[ViolationRecord], masks: &SequenceMasks) {
    for rec in records {
        if rec.loss() <= 0.0 {
            continue;
        }
        let mut viol = gold[..rec.r].to_vec();
        viol.extend_from_slice(&rec.tokens);
        for (seq, sign) in [(gold[..rec.t].to_vec(), -1.0), (viol, 1.0)] {
            let (enc, cache) = model.encode(src, masks).unwrap();
            let mut path = model.run_forced(&enc, &seq, masks).unwrap();
            let grads: Vec<ScoreGrad> = (0..seq.len())
                .map(|s| {
                    if s + 1 >= rec.scored_from {
                        ScoreGrad::Word(seq[s], sign * rec.delta)
                    } else {
                        ScoreGrad::None
                    }
                })
                .collect();
            let mut d_ann = model.zero_annotation_grads(src.len());
            let d0 = model.backprop_forced(&mut path, &enc, &grads, &mut d_ann).unwrap();
            let d0 = model.init_state_grad(&d0);
            model.encode_backward(cache, &d_ann, &d0).unwrap();
        }
    }
}

/// Margin loss of fixed records, recomputed by teacher forcing.
pub fn frozen_loss(model: &Seq2Seq, src: &[usize], gold: &[usize], records: &[ViolationRecord], masks: &SequenceMasks) -> f64 {
    let mut total = 0.0;
    for rec in records {
        let mut viol = gold[..rec.r].to_vec();
        viol.extend_from_slice(&rec.tokens);
        let g: f64 = step_scores(model, src, &gold[..rec.t], masks)[rec.scored_from - 1..].iter().sum();
        let v: f64 = step_scores(model, src, &viol, masks)[rec.scored_from - 1..].iter().sum();
        total += (rec.delta * (1.0 - g + v)).max(0.0);
    }
    total
}

/// Random gold sequence of `len - 1` words from `words` followed by EOS.
pub fn random_gold<R: Rng>(rng: &mut R, words: &[usize], len: usize) -> Vec<usize> {
    let mut g: Vec<usize> = (0..len - 1).map(|_| words[rng.gen_range(0..words.len())]).collect();
    g.push(bso::tasks::vocab::EOS);
    g
}

/// Largest elementwise relative error between two gradient snapshots.
pub fn max_relative_gap(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for (x, y) in a.iter().zip(b) {
        for (&p, &q) in x.iter().zip(y) {
            let denom = p.abs().max(q.abs()).max(1e-9);
            worst = worst.max((p - q).abs() / denom);
        }
    }
    worst
}

/// A small random training-search problem.
pub struct Instance {
    pub model: Seq2Seq,
    pub src: Vec<usize>,
    pub gold: Vec<usize>,
    pub succ: Successors,
    pub beam: usize,
    pub masks: SequenceMasks,
}

/// Vocabulary of 7 ids (4 real words), gold length at most `max_len`, beam
/// 2 or 3 and an initialization scale that varies with the seed so that both
/// violation-heavy and violation-free searches turn up.
pub fn random_instance(seed: u64, layers: usize, dropout: f64, max_len: usize) -> Instance {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let scales = [0.1f32, 0.5, 1.0, 2.0];
    let scale = scales[rng.gen_range(0..scales.len())];
    let hidden = 4;
    let model = toy_model(7, hidden, layers, dropout, scale, seed);
    let words = [4, 5, 6];
    let src: Vec<usize> = (0..rng.gen_range(2..=4)).map(|_| words[rng.gen_range(0..3)]).collect();
    let len = rng.gen_range(2..=max_len);
    let gold = random_gold(&mut rng, &words, len);
    let masks = if dropout > 0.0 {
        SequenceMasks::between_layers(dropout, layers, hidden, src.len(), gold.len(), seed ^ 0x5eed)
    } else {
        SequenceMasks::none()
    };
    Instance {
        model,
        src,
        gold,
        succ: Successors::unconstrained(7),
        beam: rng.gen_range(2..=3),
        masks,
    }
}
