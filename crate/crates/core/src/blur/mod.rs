//! Blur kernels, space-invariant convolution and Richardson-Lucy deblurring.

mod convolve;
mod deconv;
mod kernel;

pub use convolve::{circular_grid, convolve, convolve_grid, Boundary};
pub use deconv::{richardson_lucy, DEFAULT_RL_ITERATIONS};
pub use kernel::{gaussian_kernel, load_kernel, motion_kernel, parse_kernel, BlurKernel, KernelSpec};
