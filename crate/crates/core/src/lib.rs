pub mod error;
pub mod model;
pub mod nn;
pub mod run;
pub mod search;
pub mod tasks;
pub mod train;

pub use error::{BsoError, Result};
