//! Dataset generation, prediction-log validation, evaluation and reporting
//! on top of `corruptbench-core`.

pub mod classify;
mod error;
pub mod evaluate;
pub mod generate;
pub mod manifest;
pub mod render;
pub mod sources;
pub mod validate;

pub use error::{core_exit_code, exit, HarnessError, Result};
