//! Attention-based encoder-decoder exposing both the locally normalized
//! word distribution `g` and the unnormalized sequence score `f`.

mod config;
mod forced;
mod seq2seq;
mod state;

pub use config::{ModelConfig, ATTENTION_VARIANT};
pub use forced::{ForcedPath, ScoreGrad};
pub use seq2seq::{EncoderCache, ScoreKind, Seq2Seq, StepCache};
pub use state::{select_states, DecoderState, EncodedSource, StateGrad, StepOutput};
