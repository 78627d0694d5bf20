use crate::blur::BlurKernel;
use crate::error::{Error, Result};
use crate::features::GradientField;
use crate::fft;
use rustfft::num_complex::Complex64;

/// Full-grid minimizer of the periodic objective
/// `||dB_x - k * dX_x||^2 + ||dB_y - k * dX_y||^2 + eta ||k||^2`
/// over kernels the size of the field:
///
/// `k = F^-1[(conj(F dX_x) F dB_x + conj(F dX_y) F dB_y) / (|F dX_x|^2 + |F dX_y|^2 + eta)]`.
///
/// The result is row-major with the zero shift at index `(0, 0)`. Frequencies
/// where the denominator vanishes (only possible with `eta == 0`) get zero.
pub fn solve_kernel_spectrum(grad_b: &GradientField, grad_x: &GradientField, eta: f64) -> Result<Vec<f64>> {
    if grad_b.shape() != grad_x.shape() {
        return Err(Error::invalid("gradient fields differ in shape"));
    }
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::invalid(format!("eta must be finite and >= 0, got {eta}")));
    }
    if eta == 0.0 && grad_x.energy() == 0.0 {
        return Err(Error::numerical("eta = 0 with a zero latent gradient field"));
    }
    let (h, w) = grad_b.shape();
    let bx = fft::forward(&grad_b.dx, h, w);
    let by = fft::forward(&grad_b.dy, h, w);
    let xx = fft::forward(&grad_x.dx, h, w);
    let xy = fft::forward(&grad_x.dy, h, w);
    let quotient: Vec<Complex64> = (0..h * w)
        .map(|i| {
            let num = xx[i].conj() * bx[i] + xy[i].conj() * by[i];
            let den = xx[i].norm_sqr() + xy[i].norm_sqr() + eta;
            if den > 0.0 {
                num / den
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    Ok(fft::inverse_real(&quotient, h, w))
}

fn zero_pad(field: &GradientField, pad: usize) -> GradientField {
    let (h, w) = field.shape();
    let (ph, pw) = (h + pad, w + pad);
    let mut out = GradientField::zeros(ph, pw);
    for r in 0..h {
        out.dx[r * pw..r * pw + w].copy_from_slice(&field.dx[r * w..(r + 1) * w]);
        out.dy[r * pw..r * pw + w].copy_from_slice(&field.dy[r * w..(r + 1) * w]);
    }
    out
}

/// Kernel update step: the frequency-domain solve on the fields zero-padded
/// by `kernel_size`, cropped to `kernel_size x kernel_size` around the zero
/// shift, negative weights clamped and the rest renormalized.
pub fn kernel_update(
    grad_b: &GradientField,
    grad_x: &GradientField,
    eta: f64,
    kernel_size: usize,
) -> Result<BlurKernel> {
    if kernel_size % 2 == 0 {
        return Err(Error::invalid(format!("kernel size must be odd, got {kernel_size}")));
    }
    if grad_b.shape() != grad_x.shape() {
        return Err(Error::invalid("gradient fields differ in shape"));
    }
    let pb = zero_pad(grad_b, kernel_size);
    let px = zero_pad(grad_x, kernel_size);
    let full = solve_kernel_spectrum(&pb, &px, eta)?;
    let (h, w) = pb.shape();
    let radius = (kernel_size / 2) as isize;
    let mut crop = Vec::with_capacity(kernel_size * kernel_size);
    for i in -radius..=radius {
        let r = i.rem_euclid(h as isize) as usize;
        for j in -radius..=radius {
            let c = j.rem_euclid(w as isize) as usize;
            crop.push(full[r * w + c]);
        }
    }
    BlurKernel::from_weights(kernel_size, kernel_size, crop)
}

/// `||dB - k * dX||^2 + eta ||k||^2` on the zero-padded grid used by
/// [`kernel_update`].
pub fn kernel_objective(grad_b: &GradientField, grad_x: &GradientField, kernel: &BlurKernel, eta: f64) -> f64 {
    let pad = kernel.height().max(kernel.width());
    let pb = zero_pad(grad_b, pad);
    let px = zero_pad(grad_x, pad);
    let (h, w) = pb.shape();
    let cx = crate::blur::circular_grid(&px.dx, h, w, kernel);
    let cy = crate::blur::circular_grid(&px.dy, h, w, kernel);
    let fit: f64 = pb
        .dx
        .iter()
        .zip(&cx)
        .chain(pb.dy.iter().zip(&cy))
        .map(|(b, p)| (b - p) * (b - p))
        .sum();
    fit + eta * kernel.weights().iter().map(|v| v * v).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blur::{circular_grid, gaussian_kernel};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(h: usize, w: usize, seed: u64) -> GradientField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = GradientField::zeros(h, w);
        for v in f.dx.iter_mut().chain(f.dy.iter_mut()) {
            *v = rng.random::<f64>() - 0.5;
        }
        f
    }

    #[test]
    fn self_consistency_gives_delta() {
        let f = random_field(24, 20, 1);
        let k = kernel_update(&f, &f, 0.0, 7).unwrap();
        assert!(k.center_mass() > 1.0 - 1e-9);
    }

    #[test]
    fn recovers_synthetic_kernel() {
        let (h, w) = (40, 40);
        let gx = random_field(h, w, 2);
        let truth = gaussian_kernel(5, 1.0).unwrap();
        let gb = GradientField {
            height: h,
            width: w,
            dx: circular_grid(&gx.dx, h, w, &truth),
            dy: circular_grid(&gx.dy, h, w, &truth),
        };
        let full = solve_kernel_spectrum(&gb, &gx, 1e-6).unwrap();
        let mut crop = vec![0.0; 25];
        for i in 0..5 {
            for j in 0..5 {
                let r = (i as isize - 2).rem_euclid(h as isize) as usize;
                let c = (j as isize - 2).rem_euclid(w as isize) as usize;
                crop[i * 5 + j] = full[r * w + c];
            }
        }
        let est = BlurKernel::from_weights(5, 5, crop).unwrap();
        for (a, b) in est.weights().iter().zip(truth.weights()) {
            assert!((a - b).abs() < 1e-3);
        }
    }

    #[test]
    fn zero_eta_zero_field_fails() {
        let f = random_field(8, 8, 3);
        let z = GradientField::zeros(8, 8);
        assert!(kernel_update(&f, &z, 0.0, 3).is_err());
        // any positive eta keeps the quotient defined; the result has no mass
        assert!(solve_kernel_spectrum(&f, &z, 4.0).unwrap().iter().all(|v| *v == 0.0));
        assert!(kernel_update(&f, &f, 1.0, 4).is_err());
    }

    #[test]
    fn objective_is_finite_and_nonnegative() {
        let f = random_field(16, 16, 4);
        let k = kernel_update(&f, &f, 4.0, 5).unwrap();
        let obj = kernel_objective(&f, &f, &k, 4.0);
        assert!(obj.is_finite() && obj >= 0.0);
    }
}
