//! Pixel-level substrate shared by every generator.
//!
//! All rasters are [`ImageBuffer`]s: row-major, three interleaved channels,
//! `f32` intensities in `[0, 1]` holding plain sRGB-coded values (no colour
//! management).

mod buffer;
pub mod clahe;
pub mod color;
pub mod distortion;
pub mod field;
pub mod io;
pub mod kernel;
pub mod random;
pub mod resample;
pub mod warp;

pub use buffer::{ImageBuffer, MIN_BENCHMARK_SIDE};
pub use clahe::clahe;
pub use color::{hsv_to_rgb, rgb_to_hsv, HsvBuffer};
pub use distortion::{distortion, mean_l2, ssim, Measure};
pub use field::Field;
pub use io::{load_image, save_image, ImageFormat};
pub use kernel::{convolve2d, convolve_planar, Boundary, Kernel2D};
pub use random::RandomStream;
pub use resample::{resample, Filter};
pub use warp::{warp, Fill};
