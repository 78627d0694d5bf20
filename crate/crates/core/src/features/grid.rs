use crate::error::{Error, Result};
use crate::image::GrayImage;

pub const DEFAULT_PATCH_SIZE: usize = 16;
pub const DEFAULT_STRIDE: usize = 8;

/// Square patches on a regular grid, ordered row-major by top-left corner.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchGrid {
    pub patch_size: usize,
    pub stride: usize,
    pub image_shape: (usize, usize),
    pub positions: Vec<(usize, usize)>,
    pub patches: Vec<Vec<f64>>,
}

impl PatchGrid {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Centre of patch `i` in continuous pixel coordinates.
    pub fn center(&self, i: usize) -> (f64, f64) {
        let (r, c) = self.positions[i];
        let half = self.patch_size as f64 / 2.0;
        (r as f64 + half, c as f64 + half)
    }
}

/// Top-left corners of every `patch_size` patch at multiples of `stride`.
pub fn grid_positions(
    height: usize,
    width: usize,
    patch_size: usize,
    stride: usize,
) -> Result<Vec<(usize, usize)>> {
    if patch_size == 0 || stride == 0 {
        return Err(Error::invalid("patch size and stride must be positive"));
    }
    if height < patch_size || width < patch_size {
        return Err(Error::invalid(format!(
            "{height}x{width} image smaller than {patch_size}x{patch_size} patch"
        )));
    }
    let rows = (0..=height - patch_size).step_by(stride);
    Ok(rows
        .flat_map(|r| (0..=width - patch_size).step_by(stride).map(move |c| (r, c)))
        .collect())
}

/// Extracts the dense overlapping grid of patches from `image`.
pub fn dense_grid(image: &GrayImage, patch_size: usize, stride: usize) -> Result<PatchGrid> {
    let positions = grid_positions(image.height(), image.width(), patch_size, stride)?;
    let patches = positions
        .iter()
        .map(|&(r, c)| image.block(r, c, patch_size))
        .collect();
    Ok(PatchGrid {
        patch_size,
        stride,
        image_shape: image.shape(),
        positions,
        patches,
    })
}
