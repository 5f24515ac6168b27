//! Gradient renormalization and Adagrad.

use super::tensor::{ParamGroup, ParamSlot, ParamStore};

pub const ADAGRAD_EPS: f64 = 1e-10;

/// Global L2 norm over every gradient in the store.
pub fn global_grad_norm(store: &ParamStore) -> f64 {
    store
        .slots()
        .iter()
        .flat_map(|s| s.grad.iter())
        .map(|g| g * g)
        .sum::<f64>()
        .sqrt()
}

/// Rescales all gradients so their global norm is at most `max_norm`.
/// Returns the norm measured before clipping.
pub fn clip_global_norm(store: &mut ParamStore, max_norm: f64) -> f64 {
    assert!(max_norm > 0.0, "max_norm must be positive");
    let norm = global_grad_norm(store);
    if norm > max_norm {
        let k = max_norm / norm;
        for slot in store.slots_mut() {
            slot.grad.iter_mut().for_each(|g| *g *= k);
        }
    }
    norm
}

/// One Adagrad update of a single slot; its gradient is reset to zero.
pub fn adagrad_step(slot: &mut ParamSlot, lr: f64) {
    let values = slot.value.data_mut();
    for ((v, g), acc) in values.iter_mut().zip(&mut slot.grad).zip(&mut slot.accum) {
        if *g != 0.0 {
            *acc += *g * *g;
            *v = (*v as f64 - lr * *g / (acc.sqrt() + ADAGRAD_EPS)) as f32;
        }
        *g = 0.0;
    }
}

/// Per-group learning rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearningRates {
    pub recurrent: f64,
    pub output: f64,
}

impl Default for LearningRates {
    fn default() -> Self {
        Self {
            recurrent: 0.02,
            output: 0.1,
        }
    }
}

impl LearningRates {
    pub fn for_group(&self, group: ParamGroup) -> f64 {
        match group {
            ParamGroup::Recurrent => self.recurrent,
            ParamGroup::Output => self.output,
        }
    }
}

/// Clip to `max_norm`, then apply Adagrad to every slot with its group's rate.
/// Returns the pre-clip gradient norm.
pub fn clipped_adagrad_update(store: &mut ParamStore, rates: LearningRates, max_norm: f64) -> f64 {
    let norm = clip_global_norm(store, max_norm);
    for slot in store.slots_mut() {
        let lr = rates.for_group(slot.group);
        adagrad_step(slot, lr);
    }
    norm
}
