//! Dense patch grids and the patch descriptors built on them.

mod gradient;
mod grid;
mod joint;
mod pca;
mod sift;

pub use gradient::{gradient_descriptor, gradient_descriptors, image_gradients, GradientField};
pub use grid::{dense_grid, grid_positions, PatchGrid, DEFAULT_PATCH_SIZE, DEFAULT_STRIDE};
pub use joint::{gradient_weight, joint_feature, joint_features};
pub use pca::{covariance_spectrum, pca_fit, PcaModel};
pub use sift::{sift_descriptor, sift_descriptors, SIFT_DIM};

use nalgebra::DMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DescriptorKind {
    Sift,
    Gradient,
    Joint,
}

/// Descriptors for the patches of one grid, one column per patch in grid order.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorSet {
    pub kind: DescriptorKind,
    pub vectors: DMatrix<f64>,
}
