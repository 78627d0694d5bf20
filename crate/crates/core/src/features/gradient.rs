use super::grid::PatchGrid;
use crate::error::{Error, Result};
use crate::image::GrayImage;
use nalgebra::DMatrix;

/// Horizontal and vertical derivatives of an image.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub height: usize,
    pub width: usize,
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
}

impl GradientField {
    pub fn zeros(height: usize, width: usize) -> Self {
        GradientField {
            height,
            width,
            dx: vec![0.0; height * width],
            dy: vec![0.0; height * width],
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn energy(&self) -> f64 {
        self.dx.iter().chain(&self.dy).map(|v| v * v).sum()
    }

    /// Descriptor layout of the patch at `(row, col)`: `[dx block; dy block]`.
    pub fn patch(&self, row: usize, col: usize, size: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * size * size);
        for plane in [&self.dx, &self.dy] {
            for r in row..row + size {
                let start = r * self.width + col;
                out.extend_from_slice(&plane[start..start + size]);
            }
        }
        out
    }
}

/// Forward differences with a replicated border, so the last column of
/// `dx` and the last row of `dy` are zero.
fn forward_differences(data: &[f64], h: usize, w: usize) -> (Vec<f64>, Vec<f64>) {
    let mut dx = vec![0.0; h * w];
    let mut dy = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            let v = data[r * w + c];
            if c + 1 < w {
                dx[r * w + c] = data[r * w + c + 1] - v;
            }
            if r + 1 < h {
                dy[r * w + c] = data[(r + 1) * w + c] - v;
            }
        }
    }
    (dx, dy)
}

/// Gradient descriptor of a square patch: `[dx; dy]`, length `2 * size^2`.
pub fn gradient_descriptor(patch: &[f64]) -> Result<Vec<f64>> {
    let size = (patch.len() as f64).sqrt().round() as usize;
    if size * size != patch.len() || size == 0 {
        return Err(Error::invalid(format!("patch of {} pixels is not square", patch.len())));
    }
    let (mut dx, dy) = forward_differences(patch, size, size);
    dx.extend(dy);
    Ok(dx)
}

/// Derivatives of the whole image with the same operator as
/// [`gradient_descriptor`].
pub fn image_gradients(image: &GrayImage) -> GradientField {
    let (h, w) = image.shape();
    let (dx, dy) = forward_differences(image.pixels(), h, w);
    GradientField {
        height: h,
        width: w,
        dx,
        dy,
    }
}

/// Gradient descriptors of every grid patch, cut from the whole-image
/// derivatives so patch borders see their true neighbours.
pub fn gradient_descriptors(image: &GrayImage, grid: &PatchGrid) -> Result<DMatrix<f64>> {
    if image.shape() != grid.image_shape {
        return Err(Error::invalid("grid was built for a different image shape"));
    }
    let field = image_gradients(image);
    let p = grid.patch_size;
    let mut out = DMatrix::zeros(2 * p * p, grid.len());
    for (i, &(r, c)) in grid.positions.iter().enumerate() {
        out.column_mut(i).copy_from_slice(&field.patch(r, c, p));
    }
    Ok(out)
}
