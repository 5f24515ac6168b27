//! Pre-computed inverted-dropout masks, one per (layer boundary, time-step).
//!
//! During beam training every hypothesis alive at step `t` uses the mask for
//! `t`, and the backward pass reuses the same masks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{BsoError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMask {
    pub time_step: usize,
    pub layer: usize,
    /// Entries are `0` or `1 / (1 - rate)`.
    pub mask: Vec<f64>,
}

/// Draws `layers * steps` masks of width `dim`, ordered by step then layer.
pub fn make_dropout_masks(rate: f64, layers: usize, steps: usize, dim: usize, seed: u64) -> Vec<DropoutMask> {
    assert!((0.0..1.0).contains(&rate), "dropout rate must lie in [0, 1)");
    let keep_value = 1.0 / (1.0 - rate);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut masks = Vec::with_capacity(layers * steps);
    for time_step in 0..steps {
        for layer in 0..layers {
            let mask = (0..dim)
                .map(|_| if rate > 0.0 && rng.gen::<f64>() < rate { 0.0 } else { keep_value })
                .collect();
            masks.push(DropoutMask { time_step, layer, mask });
        }
    }
    masks
}

/// Masks for one sequence side (encoder or decoder), indexed by `(layer, step)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskTable {
    layers: usize,
    steps: usize,
    masks: Vec<DropoutMask>,
}

impl MaskTable {
    pub fn new(rate: f64, layers: usize, steps: usize, dim: usize, seed: u64) -> Self {
        Self {
            layers,
            steps,
            masks: make_dropout_masks(rate, layers, steps, dim, seed),
        }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn get(&self, layer: usize, step: usize) -> Result<&[f64]> {
        if layer >= self.layers || step >= self.steps {
            return Err(BsoError::Usage(format!(
                "no dropout mask for layer boundary {layer} at step {step} (table covers {} x {})",
                self.layers, self.steps
            )));
        }
        Ok(&self.masks[step * self.layers + layer].mask)
    }
}

/// Dropout configuration for a single training example. `None` disables dropout.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SequenceMasks {
    pub encoder: Option<MaskTable>,
    pub decoder: Option<MaskTable>,
}

impl SequenceMasks {
    pub fn none() -> Self {
        Self::default()
    }

    /// Masks between stacked recurrent layers (`layers - 1` boundaries) for a
    /// source of `src_len` steps and `dec_steps` decoder steps.
    pub fn between_layers(rate: f64, layers: usize, dim: usize, src_len: usize, dec_steps: usize, seed: u64) -> Self {
        if rate == 0.0 || layers < 2 {
            return Self::none();
        }
        let boundaries = layers - 1;
        Self {
            encoder: Some(MaskTable::new(rate, boundaries, src_len, dim, seed)),
            decoder: Some(MaskTable::new(rate, boundaries, dec_steps, dim, seed ^ 0x9e37_79b9_7f4a_7c15)),
        }
    }
}
