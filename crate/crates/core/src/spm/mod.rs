//! Spatial-pyramid max pooling and the one-vs-rest linear SVM.

mod pool;
mod svm;

pub use pool::{pyramid_cell, spm_pool, SpmFeature, PYRAMID_CELLS};
pub use svm::{support_vector_images, svm_predict, svm_train, LinearSvmModel, SvmConfig};
