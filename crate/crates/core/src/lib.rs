//! Blur-insensitive image classification with kernel-adapted sparse dictionaries.
//!
//! A classifier is trained once on sharp images: dense patch descriptors are
//! sparse-coded against a K-SVD dictionary and the codes are max-pooled over a
//! three-level spatial pyramid into linear-SVM features. A blurred input is
//! classified without deblurring: the dictionary is re-fitted in closed form
//! to the (given or estimated) blur kernel so that blurred descriptors
//! reproduce the sharp codes, and the rescaled codes feed the unchanged SVM.
//!
//! Module map:
//! - [`sparse`]: OMP, K-SVD, the closed-form optimal-directions re-fit and
//!   the atom-norm rescaling between sharp and blurred code spaces.
//! - [`features`]: dense grids, SIFT-style and gradient descriptors, PCA and
//!   the joint descriptor.
//! - [`blur`]: kernel synthesis and I/O, convolution, Richardson-Lucy.
//! - [`psf`]: alternating blind estimation of the kernel and blur-adapted codes.
//! - [`spm`]: spatial-pyramid max pooling and the one-vs-rest linear SVM.
//! - [`pipeline`]: the two end-to-end frameworks and the experiment harness.

pub mod blur;
pub mod container;
pub mod error;
pub mod features;
pub mod fft;
pub mod image;
pub mod pipeline;
pub mod psf;
pub mod sparse;
pub mod spm;
pub mod synth;

pub use error::{Error, Result};
