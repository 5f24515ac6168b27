//! Beam search optimization: violation search with resets and the merged
//! backward pass.

use crate::error::{BsoError, Result};
use crate::model::{EncodedSource, EncoderCache, ForcedPath, Seq2Seq, StateGrad, StepCache, StepOutput};
use crate::nn::ops::add_assign;
use crate::nn::SequenceMasks;
use crate::search::{child, expand, top_k, Hypothesis, Successors};
use crate::tasks::bleu::sentence_bleu_smoothed;

/// Which scores the margin compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginScore {
    /// Sums of step scores since the last reset.
    Cumulative,
    /// Scores of the newest token only.
    LastStep,
}

/// Mistake-specific cost of a violation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeltaKind {
    ZeroOne,
    /// One minus smoothed sentence BLEU of the violating segment against the gold segment.
    SentenceBleu,
}

pub fn delta_01(violated: bool) -> f64 {
    if violated {
        1.0
    } else {
        0.0
    }
}

pub fn delta_sentence_bleu(violating: &[usize], gold: &[usize], violated: bool) -> f64 {
    if !violated {
        return 0.0;
    }
    1.0 - sentence_bleu_smoothed(violating, gold, 4)
}

impl DeltaKind {
    pub fn cost(self, violating: &[usize], gold: &[usize], violated: bool) -> f64 {
        match self {
            DeltaKind::ZeroOne => delta_01(violated),
            DeltaKind::SentenceBleu => delta_sentence_bleu(violating, gold, violated),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BsoOptions {
    pub beam: usize,
    pub margin: MarginScore,
    pub delta: DeltaKind,
}

impl BsoOptions {
    pub fn new(beam: usize) -> Self {
        Self {
            beam,
            margin: MarginScore::Cumulative,
            delta: DeltaKind::ZeroOne,
        }
    }
}

/// One margin violation found during training search.
#[derive(Debug, Clone, PartialEq)]
pub struct ViolationRecord {
    /// Step of the violation (1-based).
    pub t: usize,
    /// Previous reset point; the segment is `(r, t]`.
    pub r: usize,
    /// Violating tokens at positions `r+1..=t`.
    pub tokens: Vec<usize>,
    pub gold_score: f64,
    pub viol_score: f64,
    pub delta: f64,
    /// First position whose score enters the margin: `r+1`, or `t` for last-step margins.
    pub scored_from: usize,
    /// Rank of the comparator in the candidate set at `t`.
    pub comparator_rank: usize,
}

impl ViolationRecord {
    pub fn loss(&self) -> f64 {
        (self.delta * (1.0 - self.gold_score + self.viol_score)).max(0.0)
    }

    fn is_active(&self) -> bool {
        self.loss() > 0.0
    }
}

/// Sum of per-record hinge losses.
pub fn margin_loss(records: &[ViolationRecord]) -> f64 {
    records.iter().map(ViolationRecord::loss).sum()
}

/// Next-word scores for prefixes, addressed by opaque handles.
pub trait BeamScorer {
    type Handle: Clone;

    /// The gold prefix of length `len`.
    fn gold(&mut self, len: usize) -> Result<Self::Handle>;

    /// `parent` extended by `word`, which becomes token number `len` of the prefix.
    fn extend(&mut self, parent: &Self::Handle, word: usize, len: usize) -> Result<Self::Handle>;

    fn next_scores(&self, prefix: &Self::Handle) -> Vec<f64>;
}

/// A record together with the handle of the comparator's parent prefix.
#[derive(Debug, Clone)]
pub struct Violation<H> {
    pub record: ViolationRecord,
    pub parent: H,
}

struct Entry<H> {
    hyp: Hypothesis,
    parent: Option<H>,
    own: Option<H>,
}

/// Runs training-time beam search alongside `gold` and collects violations.
///
/// Before the last step the comparator is the lowest-ranked candidate that
/// is not the gold prefix; at the last step it is the highest-ranked one.
/// After a violation the next candidate set is built from the gold prefix.
pub fn search_violations<S: BeamScorer>(
    scorer: &mut S,
    gold: &[usize],
    succ: &Successors,
    opts: &BsoOptions,
) -> Result<Vec<Violation<S::Handle>>> {
    if opts.beam == 0 {
        return Err(BsoError::Config("training beam must be at least 1".into()));
    }
    let len = gold.len();
    if len == 0 {
        return Err(BsoError::Input("empty gold sequence".into()));
    }
    succ.validate(gold)?;
    let mut gold_states = Vec::with_capacity(len + 1);
    gold_states.push(succ.initial_state());
    for &w in gold {
        let next = succ.advance(gold_states.last().expect("nonempty"), w)?;
        gold_states.push(next);
    }
    let mut gold_step = vec![0.0; len + 1];
    for s in 0..len {
        let h = scorer.gold(s)?;
        gold_step[s + 1] = scorer.next_scores(&h)[gold[s]];
    }

    let root = |scorer: &mut S, r: usize| -> Result<Entry<S::Handle>> {
        Ok(Entry {
            hyp: Hypothesis::root(gold_states[r].clone(), None).with_tokens(gold[..r].to_vec()),
            parent: None,
            own: Some(scorer.gold(r)?),
        })
    };

    let mut out = Vec::new();
    let mut r = 0;
    let mut beam = vec![root(scorer, 0)?];
    for t in 1..=len {
        let mut reset_for_exhaustion = false;
        let cands = loop {
            let mut cands = Vec::new();
            for (rank, e) in beam.iter_mut().enumerate() {
                if e.hyp.is_finished() {
                    continue;
                }
                if e.own.is_none() {
                    let parent = e.parent.as_ref().ok_or_else(|| BsoError::Internal("hypothesis without parent".into()))?;
                    let word = e.hyp.last().expect("non-root hypothesis has a token");
                    e.own = Some(scorer.extend(parent, word, t - 1)?);
                }
                let scores = scorer.next_scores(e.own.as_ref().expect("set above"));
                expand(succ, &e.hyp, rank, &scores, &mut cands)?;
            }
            if !cands.is_empty() {
                break cands;
            }
            if reset_for_exhaustion {
                return Err(BsoError::Internal(format!("gold prefix has no successor at step {t}")));
            }
            // every candidate is finished or stuck: resume from the gold history
            reset_for_exhaustion = true;
            r = t - 1;
            beam = vec![root(scorer, r)?];
        };

        let mut next = Vec::with_capacity(opts.beam);
        for e in top_k(cands, opts.beam) {
            let p = &beam[e.parent];
            next.push(Entry {
                hyp: child(succ, &p.hyp, &e)?,
                parent: p.own.clone(),
                own: None,
            });
        }

        let is_gold = |h: &Hypothesis| h.tokens[..] == gold[..t];
        let comparator = if t < len {
            next.iter().enumerate().rev().find(|(_, e)| !is_gold(&e.hyp))
        } else {
            next.iter().enumerate().find(|(_, e)| !is_gold(&e.hyp))
        };
        let mut violated = false;
        if let Some((rank, c)) = comparator {
            let (g, v, from) = match opts.margin {
                MarginScore::Cumulative => (gold_step[r + 1..=t].iter().sum(), c.hyp.cum_score, r + 1),
                MarginScore::LastStep => (gold_step[t], c.hyp.last_score, t),
            };
            if g < v + 1.0 {
                violated = true;
                let tokens = c.hyp.tokens[r..t].to_vec();
                let delta = opts.delta.cost(&tokens, &gold[r..t], true);
                out.push(Violation {
                    record: ViolationRecord {
                        t,
                        r,
                        tokens,
                        gold_score: g,
                        viol_score: v,
                        delta,
                        scored_from: from,
                        comparator_rank: rank,
                    },
                    parent: c.parent.clone().expect("expanded hypotheses have a parent"),
                });
            }
        }
        if t == len {
            break;
        }
        if violated {
            r = t;
            beam = vec![root(scorer, t)?];
        } else {
            beam = next;
        }
    }
    Ok(out)
}

/// Where a decoder output lives: on the gold path or in the beam arena.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRef {
    Gold(usize),
    Beam(usize),
}

#[derive(Debug)]
struct Node {
    parent: NodeRef,
    /// Decoder step index; only the tests look at it.
    #[cfg_attr(not(test), allow(dead_code))]
    step: usize,
    output: StepOutput,
    cache: Option<StepCache>,
}

/// Scores prefixes with the model's unnormalized `f`, keeping every decoder
/// step's cache for the backward pass.
pub struct NeuralScorer<'a> {
    model: &'a Seq2Seq,
    enc: &'a EncodedSource,
    masks: &'a SequenceMasks,
    gold: &'a ForcedPath,
    nodes: Vec<Node>,
}

impl<'a> NeuralScorer<'a> {
    pub fn new(model: &'a Seq2Seq, enc: &'a EncodedSource, masks: &'a SequenceMasks, gold: &'a ForcedPath) -> Self {
        Self {
            model,
            enc,
            masks,
            gold,
            nodes: Vec::new(),
        }
    }

    fn output(&self, h: &NodeRef) -> &StepOutput {
        match *h {
            NodeRef::Gold(s) => &self.gold.outputs[s],
            NodeRef::Beam(i) => &self.nodes[i].output,
        }
    }

    pub fn arena_len(&self) -> usize {
        self.nodes.len()
    }
}

impl BeamScorer for NeuralScorer<'_> {
    type Handle = NodeRef;

    fn gold(&mut self, len: usize) -> Result<NodeRef> {
        if len >= self.gold.outputs.len() {
            return Err(BsoError::Internal(format!("no gold output after {len} tokens")));
        }
        Ok(NodeRef::Gold(len))
    }

    fn extend(&mut self, parent: &NodeRef, word: usize, len: usize) -> Result<NodeRef> {
        let prev = &self.output(parent).state;
        let (output, cache) = self.model.decode_step(prev, word, self.enc, self.masks, len)?;
        self.nodes.push(Node {
            parent: *parent,
            step: len,
            output,
            cache: Some(cache),
        });
        Ok(NodeRef::Beam(self.nodes.len() - 1))
    }

    fn next_scores(&self, prefix: &NodeRef) -> Vec<f64> {
        self.model.score_f(self.output(prefix))
    }
}

/// Everything the backward pass needs from one training forward pass.
#[derive(Debug)]
pub struct BsoPass {
    pub records: Vec<ViolationRecord>,
    parents: Vec<NodeRef>,
    gold: Vec<usize>,
    enc: EncodedSource,
    enc_cache: EncoderCache,
    path: ForcedPath,
    nodes: Vec<Node>,
}

impl BsoPass {
    pub fn loss(&self) -> f64 {
        margin_loss(&self.records)
    }

    /// Decoder steps run by the search beyond the gold path.
    pub fn beam_steps(&self) -> usize {
        self.nodes.len()
    }
}

/// Encodes `source`, runs the gold path and the training search.
pub fn bso_forward(
    model: &Seq2Seq,
    source: &[usize],
    gold: &[usize],
    succ: &Successors,
    opts: &BsoOptions,
    masks: &SequenceMasks,
) -> Result<BsoPass> {
    let (enc, enc_cache) = model.encode(source, masks)?;
    let path = model.run_forced(&enc, gold, masks)?;
    let (violations, nodes) = {
        let mut scorer = NeuralScorer::new(model, &enc, masks, &path);
        let v = search_violations(&mut scorer, gold, succ, opts)?;
        (v, scorer.nodes)
    };
    let (records, parents) = violations.into_iter().map(|v| (v.record, v.parent)).unzip();
    Ok(BsoPass {
        records,
        parents,
        gold: gold.to_vec(),
        enc,
        enc_cache,
        path,
        nodes,
    })
}

/// Arena nodes producing the violating outputs at steps `r+1..t-1`, in step order.
fn violating_chain(pass: &BsoPass, rec: &ViolationRecord, parent: NodeRef) -> Result<Vec<usize>> {
    let mut chain = Vec::with_capacity(rec.t - rec.r);
    let mut cur = parent;
    loop {
        match cur {
            NodeRef::Gold(s) if s == rec.r => break,
            NodeRef::Gold(s) => {
                return Err(BsoError::Internal(format!(
                    "violating path rejoins gold at {s}, expected {}",
                    rec.r
                )))
            }
            NodeRef::Beam(i) => {
                chain.push(i);
                cur = pass.nodes[i].parent;
            }
        }
    }
    chain.reverse();
    if chain.len() + 1 + rec.r != rec.t {
        return Err(BsoError::Internal("violating path length does not match its record".into()));
    }
    Ok(chain)
}

/// Adds the gradient of [`margin_loss`] to the model's parameter gradients in
/// one reverse sweep over the gold path, folding each violating path into the
/// gold stream at its reset point.
pub fn bso_backward(model: &mut Seq2Seq, mut pass: BsoPass) -> Result<()> {
    let len = pass.gold.len();
    let mut gold_coef = vec![0.0; len];
    // record index covering each step s in [r, t-1]
    let mut owner: Vec<Option<usize>> = vec![None; len];
    let mut chains = Vec::with_capacity(pass.records.len());
    for (i, rec) in pass.records.iter().enumerate() {
        if !rec.is_active() {
            chains.push(Vec::new());
            continue;
        }
        for c in &mut gold_coef[rec.scored_from - 1..rec.t] {
            *c -= rec.delta;
        }
        for o in &mut owner[rec.r..rec.t] {
            if o.is_some() {
                return Err(BsoError::Internal("overlapping violation segments".into()));
            }
            *o = Some(i);
        }
        chains.push(violating_chain(&pass, rec, pass.parents[i])?);
    }

    let mut d_ann = model.zero_annotation_grads(pass.enc.len());
    let mut gold_carry = model.zero_state_grad();
    let mut viol_carry = model.zero_state_grad();
    for s in (0..len).rev() {
        if let Some(i) = owner[s] {
            let rec = &pass.records[i];
            let word = rec.tokens[s - rec.r];
            let coef = if s + 1 >= rec.scored_from { rec.delta } else { 0.0 };
            if s > rec.r {
                let node = chains[i][s - rec.r - 1];
                if coef != 0.0 {
                    let d = model.score_backward_word(&pass.nodes[node].output.attn_hidden, word, coef);
                    add_assign(&mut viol_carry.input_feed, &d);
                }
                let cache = pass.nodes[node]
                    .cache
                    .take()
                    .ok_or_else(|| BsoError::Internal(format!("missing decoder cache for beam node {node}")))?;
                viol_carry = model.decode_step_backward(cache, &pass.enc, &viol_carry, &mut d_ann)?;
            } else {
                if coef != 0.0 {
                    let d = model.score_backward_word(&pass.path.outputs[s].attn_hidden, word, coef);
                    add_assign(&mut gold_carry.input_feed, &d);
                }
                gold_carry.add(&viol_carry);
                viol_carry = model.zero_state_grad();
            }
        }
        if gold_coef[s] != 0.0 {
            let d = model.score_backward_word(&pass.path.outputs[s].attn_hidden, pass.gold[s], gold_coef[s]);
            add_assign(&mut gold_carry.input_feed, &d);
        }
        if !gold_carry.is_zero() {
            let cache = pass.path.take_cache(s)?;
            gold_carry = model.decode_step_backward(cache, &pass.enc, &gold_carry, &mut d_ann)?;
        }
    }
    if gold_carry.is_zero() && d_ann.iter().all(|a| a.iter().all(|&v| v == 0.0)) {
        return Ok(());
    }
    let d_init: StateGrad = model.init_state_grad(&gold_carry);
    model.encode_backward(pass.enc_cache, &d_ann, &d_init)
}
