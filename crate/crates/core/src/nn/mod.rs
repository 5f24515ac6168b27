//! Differentiable building blocks with hand-written backward passes.

pub mod affine;
pub mod checkpoint;
pub mod dropout;
pub mod gradcheck;
pub mod lstm;
pub mod ops;
pub mod optim;
pub mod softmax;
pub mod tensor;

pub use affine::Affine;
pub use dropout::{make_dropout_masks, DropoutMask, MaskTable, SequenceMasks};
pub use lstm::{LstmCache, LstmCell, LstmGrads};
pub use optim::{adagrad_step, clip_global_norm, clipped_adagrad_update, LearningRates};
pub use softmax::log_softmax;
pub use tensor::{ParamGroup, ParamSlot, ParamStore, SlotId, Tensor};
