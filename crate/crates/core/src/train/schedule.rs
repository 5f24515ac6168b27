//! Curriculum beam sizes and mini-batch plans.

use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CurriculumSchedule {
    pub start: usize,
    pub increment: usize,
    pub epochs_per_increment: usize,
    pub target: usize,
}

impl CurriculumSchedule {
    pub fn new(target: usize) -> Self {
        Self {
            start: 2,
            increment: 1,
            epochs_per_increment: 2,
            target,
        }
    }
}

/// Training beam for a 1-based `epoch`.
pub fn curriculum_beam(epoch: usize, sched: &CurriculumSchedule) -> usize {
    assert!(epoch >= 1, "epochs are 1-based");
    let per = sched.epochs_per_increment.max(1);
    let grown = sched.start + sched.increment * ((epoch - 1) / per);
    grown.min(sched.target)
}

/// One mini-batch: example indices padded to a common target length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchPlan {
    pub indices: Vec<usize>,
    pub lengths: Vec<usize>,
    pub padded_len: usize,
}

impl BatchPlan {
    pub fn new(indices: Vec<usize>, lengths: Vec<usize>) -> Self {
        let padded_len = lengths.iter().copied().max().unwrap_or(0);
        Self {
            indices,
            lengths,
            padded_len,
        }
    }

    /// Loss weights for member `i`: 1 on real positions, 0 on padding.
    pub fn mask(&self, i: usize) -> Vec<f64> {
        (0..self.padded_len).map(|s| if s < self.lengths[i] { 1.0 } else { 0.0 }).collect()
    }

    /// `tokens` extended with `pad` to the batch length.
    pub fn pad(&self, tokens: &[usize], pad: usize) -> Vec<usize> {
        let mut out = tokens.to_vec();
        out.resize(self.padded_len.max(tokens.len()), pad);
        out
    }

    /// Shuffles `0..lengths.len()` and cuts it into batches of at most `batch_size`.
    pub fn shuffled<R: Rng + ?Sized>(lengths: &[usize], batch_size: usize, rng: &mut R) -> Vec<BatchPlan> {
        let mut order: Vec<usize> = (0..lengths.len()).collect();
        order.shuffle(rng);
        order
            .chunks(batch_size.max(1))
            .map(|c| BatchPlan::new(c.to_vec(), c.iter().map(|&i| lengths[i]).collect()))
            .collect()
    }
}
