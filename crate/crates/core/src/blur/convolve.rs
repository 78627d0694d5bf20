use super::kernel::BlurKernel;
use crate::error::{Error, Result};
use crate::fft;
use crate::image::GrayImage;
use rustfft::num_complex::Complex64;

/// Kernels with more taps than this are applied in the frequency domain.
const DIRECT_MAX_TAPS: usize = 49;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    /// Edge pixels extend outward.
    #[default]
    Replicate,
    /// The image wraps around (circular convolution).
    Periodic,
}

/// Centred 2-D convolution; the output has the input's shape.
pub fn convolve(image: &GrayImage, kernel: &BlurKernel, boundary: Boundary) -> Result<GrayImage> {
    let (h, w) = image.shape();
    let data = convolve_grid(image.pixels(), h, w, kernel, boundary)?;
    GrayImage::new(h, w, data)
}

/// [`convolve`] on a raw row-major `h x w` grid.
pub fn convolve_grid(
    data: &[f64],
    h: usize,
    w: usize,
    kernel: &BlurKernel,
    boundary: Boundary,
) -> Result<Vec<f64>> {
    if data.len() != h * w {
        return Err(Error::mismatch("grid size", h * w, data.len()));
    }
    if kernel.height() > h || kernel.width() > w {
        return Err(Error::invalid(format!(
            "{}x{} kernel larger than {h}x{w} image",
            kernel.height(),
            kernel.width()
        )));
    }
    if kernel.is_delta() {
        return Ok(data.to_vec());
    }
    if kernel.weights().len() <= DIRECT_MAX_TAPS {
        Ok(direct(data, h, w, kernel, boundary))
    } else {
        Ok(spectral(data, h, w, kernel, boundary))
    }
}

fn direct(data: &[f64], h: usize, w: usize, kernel: &BlurKernel, boundary: Boundary) -> Vec<f64> {
    let (ch, cw) = kernel.center();
    let (hi, wi) = (h as isize, w as isize);
    let index = |r: isize, c: isize| -> usize {
        let (r, c) = match boundary {
            Boundary::Replicate => (r.clamp(0, hi - 1), c.clamp(0, wi - 1)),
            Boundary::Periodic => (r.rem_euclid(hi), c.rem_euclid(wi)),
        };
        r as usize * w + c as usize
    };
    let mut out = vec![0.0; h * w];
    for r in 0..hi {
        for c in 0..wi {
            let mut acc = 0.0;
            for i in 0..kernel.height() {
                let rr = r - (i as isize - ch as isize);
                for j in 0..kernel.width() {
                    let k = kernel.get(i, j);
                    if k != 0.0 {
                        acc += k * data[index(rr, c - (j as isize - cw as isize))];
                    }
                }
            }
            out[r as usize * w + c as usize] = acc;
        }
    }
    out
}

fn spectral(data: &[f64], h: usize, w: usize, kernel: &BlurKernel, boundary: Boundary) -> Vec<f64> {
    let (ch, cw) = kernel.center();
    match boundary {
        Boundary::Periodic => circular_grid(data, h, w, kernel),
        Boundary::Replicate => {
            // pad by the kernel radius so wrap-around only touches the margin
            let (ph, pw) = (h + 2 * ch, w + 2 * cw);
            let mut padded = vec![0.0; ph * pw];
            for r in 0..ph {
                let sr = (r as isize - ch as isize).clamp(0, h as isize - 1) as usize;
                for c in 0..pw {
                    let sc = (c as isize - cw as isize).clamp(0, w as isize - 1) as usize;
                    padded[r * pw + c] = data[sr * w + sc];
                }
            }
            let full = circular_grid(&padded, ph, pw, kernel);
            let mut out = Vec::with_capacity(h * w);
            for r in 0..h {
                out.extend_from_slice(&full[(r + ch) * pw + cw..(r + ch) * pw + cw + w]);
            }
            out
        }
    }
}

/// Circular convolution of a raw grid with the kernel centre at the zero shift.
pub fn circular_grid(data: &[f64], h: usize, w: usize, kernel: &BlurKernel) -> Vec<f64> {
    let spec_k = kernel_spectrum(kernel, h, w);
    let mut spec = fft::forward(data, h, w);
    for (s, k) in spec.iter_mut().zip(&spec_k) {
        *s *= k;
    }
    fft::inverse_real(&spec, h, w)
}

/// DFT of the kernel embedded in an `h x w` grid with its centre at (0, 0).
pub(crate) fn kernel_spectrum(kernel: &BlurKernel, h: usize, w: usize) -> Vec<Complex64> {
    let (ch, cw) = kernel.center();
    let mut grid = vec![0.0; h * w];
    for i in 0..kernel.height() {
        let r = (i as isize - ch as isize).rem_euclid(h as isize) as usize;
        for j in 0..kernel.width() {
            let c = (j as isize - cw as isize).rem_euclid(w as isize) as usize;
            grid[r * w + c] += kernel.get(i, j);
        }
    }
    fft::forward(&grid, h, w)
}
