//! Two-dimensional FFT over row-major real grids.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// Unnormalized forward 2-D DFT of a real `h x w` grid.
pub fn forward(data: &[f64], h: usize, w: usize) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform(&mut buf, h, w, false);
    buf
}

/// Inverse 2-D DFT (scaled by `1 / (h w)`), keeping the real part.
pub fn inverse_real(spectrum: &[Complex64], h: usize, w: usize) -> Vec<f64> {
    let mut buf = spectrum.to_vec();
    transform(&mut buf, h, w, true);
    let scale = 1.0 / (h * w) as f64;
    buf.iter().map(|c| c.re * scale).collect()
}

/// In-place 2-D DFT (rows, then columns); the inverse is unscaled.
pub fn transform(buf: &mut [Complex64], h: usize, w: usize, inverse: bool) {
    assert_eq!(buf.len(), h * w);
    let mut planner = FftPlanner::new();
    let (row_fft, col_fft) = if inverse {
        (planner.plan_fft_inverse(w), planner.plan_fft_inverse(h))
    } else {
        (planner.plan_fft_forward(w), planner.plan_fft_forward(h))
    };
    row_fft.process(buf);
    let mut col = vec![Complex64::new(0.0, 0.0); h];
    for c in 0..w {
        for r in 0..h {
            col[r] = buf[r * w + c];
        }
        col_fft.process(&mut col);
        for r in 0..h {
            buf[r * w + c] = col[r];
        }
    }
}
