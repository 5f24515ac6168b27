use rand::Rng;

use crate::error::{BsoError, Result};

/// Dense row-major array of 32-bit floats.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f32>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; len],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f32>) -> Result<Self> {
        if shape.iter().any(|&d| d == 0) {
            return Err(BsoError::Config(format!("tensor shape {shape:?} has a zero dimension")));
        }
        let len: usize = shape.iter().product();
        if len != data.len() {
            return Err(BsoError::Shape {
                what: "tensor data",
                expected: len,
                got: data.len(),
            });
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn uniform<R: Rng>(shape: &[usize], scale: f32, rng: &mut R) -> Self {
        let len = shape.iter().product();
        let data = (0..len).map(|_| rng.gen_range(-scale..=scale)).collect();
        Self {
            shape: shape.to_vec(),
            data,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    /// True when every entry is finite.
    pub fn is_valid(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Row `i` of a matrix-shaped tensor.
    pub fn row(&self, i: usize) -> &[f32] {
        let cols = self.shape[self.shape.len() - 1];
        &self.data[i * cols..(i + 1) * cols]
    }
}

/// Index of a parameter inside a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SlotId(pub(crate) usize);

/// Learning-rate group of a parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamGroup {
    /// Embeddings, recurrent weights and attention.
    Recurrent,
    /// The final word-prediction layer.
    Output,
}

/// One trainable tensor together with its gradient and Adagrad accumulator.
///
/// Gradients and accumulators are kept in 64-bit precision; only the value
/// (which is what gets checkpointed) is 32-bit.
#[derive(Debug, Clone)]
pub struct ParamSlot {
    pub name: String,
    pub group: ParamGroup,
    pub value: Tensor,
    pub grad: Vec<f64>,
    pub accum: Vec<f64>,
}

impl ParamSlot {
    pub fn new(name: impl Into<String>, group: ParamGroup, value: Tensor) -> Self {
        let n = value.len();
        Self {
            name: name.into(),
            group,
            value,
            grad: vec![0.0; n],
            accum: vec![0.0; n],
        }
    }

    pub fn zero_grad(&mut self) {
        self.grad.iter_mut().for_each(|g| *g = 0.0);
    }
}

/// Flat, ordered collection of every trainable tensor of a model.
#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    slots: Vec<ParamSlot>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, slot: ParamSlot) -> SlotId {
        self.slots.push(slot);
        SlotId(self.slots.len() - 1)
    }

    pub fn get(&self, id: SlotId) -> &ParamSlot {
        &self.slots[id.0]
    }

    pub fn get_mut(&mut self, id: SlotId) -> &mut ParamSlot {
        &mut self.slots[id.0]
    }

    pub fn slots(&self) -> &[ParamSlot] {
        &self.slots
    }

    pub fn slots_mut(&mut self) -> &mut [ParamSlot] {
        &mut self.slots
    }

    pub fn find(&self, name: &str) -> Option<SlotId> {
        self.slots.iter().position(|s| s.name == name).map(SlotId)
    }

    pub fn num_params(&self) -> usize {
        self.slots.iter().map(|s| s.value.len()).sum()
    }

    pub fn zero_grads(&mut self) {
        self.slots.iter_mut().for_each(ParamSlot::zero_grad);
    }

    /// Copies of every gradient buffer, in slot order.
    pub fn grads_snapshot(&self) -> Vec<Vec<f64>> {
        self.slots.iter().map(|s| s.grad.clone()).collect()
    }

    /// Adds another store's gradients into this one. Both stores must share a layout.
    pub fn merge_grads(&mut self, other: &ParamStore) -> Result<()> {
        if self.slots.len() != other.slots.len() {
            return Err(BsoError::Shape {
                what: "parameter store",
                expected: self.slots.len(),
                got: other.slots.len(),
            });
        }
        for (dst, src) in self.slots.iter_mut().zip(&other.slots) {
            if dst.grad.len() != src.grad.len() {
                return Err(BsoError::Shape {
                    what: "gradient buffer",
                    expected: dst.grad.len(),
                    got: src.grad.len(),
                });
            }
            dst.grad.iter_mut().zip(&src.grad).for_each(|(d, s)| *d += s);
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.slots
            .iter()
            .all(|s| s.value.is_valid() && s.grad.iter().all(|g| g.is_finite()))
    }
}
