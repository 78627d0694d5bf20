use super::convolve::{convolve_grid, Boundary};
use super::kernel::BlurKernel;
use crate::error::{Error, Result};
use crate::image::GrayImage;

pub const DEFAULT_RL_ITERATIONS: usize = 30;

const RATIO_FLOOR: f64 = 1e-12;

/// Richardson-Lucy deconvolution, starting from the blurred image.
///
/// Each step multiplies the estimate by the flipped-kernel correlation of
/// `blurred / (kernel * estimate)`, so nonnegativity is preserved.
pub fn richardson_lucy(
    blurred: &GrayImage,
    kernel: &BlurKernel,
    iterations: usize,
    boundary: Boundary,
) -> Result<GrayImage> {
    if iterations == 0 {
        return Err(Error::invalid("Richardson-Lucy needs at least one iteration"));
    }
    if kernel.weights().iter().sum::<f64>() <= 0.0 {
        return Err(Error::invalid("kernel has zero sum"));
    }
    if blurred.pixels().iter().any(|v| *v < 0.0) {
        return Err(Error::invalid("Richardson-Lucy input must be nonnegative"));
    }
    let (h, w) = blurred.shape();
    let flipped = kernel.flipped();
    let observed = blurred.pixels();
    let mut estimate = observed.to_vec();
    for _ in 0..iterations {
        let predicted = convolve_grid(&estimate, h, w, kernel, boundary)?;
        let ratio: Vec<f64> = observed
            .iter()
            .zip(&predicted)
            .map(|(o, p)| o / p.max(RATIO_FLOOR))
            .collect();
        let correction = convolve_grid(&ratio, h, w, &flipped, boundary)?;
        for (e, c) in estimate.iter_mut().zip(&correction) {
            *e = (*e * c).max(0.0);
        }
    }
    GrayImage::new(h, w, estimate)
}
