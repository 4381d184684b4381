//! Corruption and perturbation benchmark synthesis, and the robustness
//! metric suite used to score classifier prediction logs against a baseline.
//!
//! The crate is organised bottom-up:
//!
//! - [`imaging`]: float RGB buffers, I/O, convolution, resampling, colour
//!   conversion, distortion measures, CLAHE and keyed random streams.
//! - [`corruptions`]: the 15 benchmark and 4 validation corruptions at five
//!   severities, driven by a [`schedule::Schedule`].
//! - [`perturbations`]: noise-mode and temporal-mode frame sequences.
//! - [`metrics`]: error tables, CE/mCE, Relative CE, flip probability and
//!   rate, top-5 distance and their aggregates.
//! - [`corpus`]: a deterministic synthetic image corpus for calibration and
//!   tests.

pub mod corpus;
pub mod corruptions;
mod error;
pub mod imaging;
pub mod metrics;
pub mod perturbations;
pub mod schedule;

pub use error::{Error, Result};
pub use imaging::{ImageBuffer, RandomStream};
