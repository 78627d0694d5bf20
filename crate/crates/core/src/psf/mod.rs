//! Blind estimation of a space-invariant blur kernel together with
//! blur-adapted sparse codes of the input's gradient patches.
//!
//! The estimator alternates two closed-form steps. Given codes, the latent
//! sharp gradient field is the overlap-average of the decoded patches and
//! the kernel is the Tikhonov-regularized frequency-domain quotient. Given a
//! kernel, the training patches are blurred, the gradient dictionary is
//! re-fitted against their fixed sharp codes, and the input patches are
//! re-encoded and mapped back to the sharp code scale by the atom norms.

mod alternate;
mod kernel_update;
mod model;
mod reconstruct;

pub use alternate::{alternate_minimize, EstimationResult, EstimatorConfig};
pub use kernel_update::{kernel_objective, kernel_update, solve_kernel_spectrum};
pub use model::{adapt_grad_dictionary, init_codes, AdaptationSet, GradientModel, GradientSpace};
pub use reconstruct::{overlap_average, reconstruct_gradients};
