//! Beam bookkeeping, successor functions and test-time decoding.

mod beam;
mod constraint;
mod decode;

pub use beam::{child, expand, expansion_order, top_k, Expansion, Hypothesis};
pub use constraint::{ConstraintState, Successors};
pub use decode::{beam_decode, DecodeOptions, Decoded};
