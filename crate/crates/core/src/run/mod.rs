//! End-to-end commands behind the command-line tool.

mod config;
mod pipeline;

pub use config::{ConstraintChoice, DecodeScore, RunConfig, Task};
pub use pipeline::*;
