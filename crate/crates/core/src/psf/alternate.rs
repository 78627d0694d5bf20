use super::kernel_update::{kernel_objective, kernel_update};
use super::model::{adapt_grad_dictionary, encode_normalized, init_codes, AdaptationSet, GradientModel};
use super::reconstruct::reconstruct_gradients;
use crate::blur::BlurKernel;
use crate::error::{Error, Result};
use crate::features::{dense_grid, image_gradients, DEFAULT_PATCH_SIZE, DEFAULT_STRIDE};
use crate::image::GrayImage;
use crate::sparse::{rescale_code_blur_to_sharp, CodeMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    /// Tikhonov weight on the kernel.
    pub eta: f64,
    /// Number of alternations.
    pub iterations: usize,
    pub sparsity: usize,
    /// Odd side of the estimated kernel.
    pub kernel_size: usize,
    pub patch_size: usize,
    pub stride: usize,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            eta: 4.0,
            iterations: 5,
            sparsity: 5,
            kernel_size: 21,
            patch_size: DEFAULT_PATCH_SIZE,
            stride: DEFAULT_STRIDE,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::invalid(format!("eta must be >= 0, got {}", self.eta)));
        }
        if self.iterations == 0 {
            return Err(Error::invalid("estimator needs at least one iteration"));
        }
        if self.kernel_size % 2 == 0 {
            return Err(Error::invalid(format!("kernel size must be odd, got {}", self.kernel_size)));
        }
        if self.sparsity == 0 || self.patch_size == 0 || self.stride == 0 {
            return Err(Error::invalid("sparsity, patch size and stride must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    pub kernel: BlurKernel,
    /// Per-patch codes on the scale of the sharp training codes, ready for
    /// pooling with the classifier's dictionary.
    pub final_codes: CodeMatrix,
    /// Regularized data fit after each kernel update.
    pub per_iteration_objective: Vec<f64>,
    pub positions: Vec<(usize, usize)>,
}

/// Jointly estimates the blur kernel of `blurred` and its blur-adapted codes.
///
/// Codes start as the blurred gradient patches encoded against the sharp
/// gradient dictionary. Each iteration then (1) rebuilds the latent gradient
/// field from the current codes, (2) solves for the kernel, (3) re-fits the
/// gradient dictionary to that kernel on the training patches, and (4)
/// re-encodes the blurred patches and divides by the re-fitted atom norms.
/// The final codes are divided by the sharp model's norms to land on the
/// scale of the training codes.
pub fn alternate_minimize(
    blurred: &GrayImage,
    model: &GradientModel,
    training: &AdaptationSet,
    config: &EstimatorConfig,
) -> Result<EstimationResult> {
    config.validate()?;
    if config.patch_size != model.space.patch_size() {
        return Err(Error::mismatch("estimator patch size", model.space.patch_size(), config.patch_size));
    }
    let grid = dense_grid(blurred, config.patch_size, config.stride)?;
    let grad_b = image_gradients(blurred);
    let observed = model.space.describe(blurred, &grid)?;
    let mut codes = init_codes(&observed, model, config.sparsity)?;
    let mut kernel = BlurKernel::delta();
    let mut objective = Vec::with_capacity(config.iterations);

    for n in 1..=config.iterations {
        let step = || -> Result<(BlurKernel, f64, CodeMatrix)> {
            let grad_x = reconstruct_gradients(&codes, model, &grid.positions, blurred.shape())?;
            let k = kernel_update(&grad_b, &grad_x, config.eta, config.kernel_size)?;
            let obj = kernel_objective(&grad_b, &grad_x, &k, config.eta);
            let adapted = adapt_grad_dictionary(&k, training, &model.space)?;
            let blur_codes = encode_normalized(&adapted, &observed, config.sparsity)?;
            let sharp = blur_codes
                .codes()
                .iter()
                .map(|c| rescale_code_blur_to_sharp(c, &adapted.norms))
                .collect::<Result<Vec<_>>>()?;
            Ok((k, obj, CodeMatrix::new(codes.num_atoms(), sharp)?))
        };
        let (k, obj, next) = step().map_err(|e| e.at_iteration(n))?;
        log::debug!("alternation {n}: objective {obj:.6e}, centre mass {:.3}", k.center_mass());
        kernel = k;
        objective.push(obj);
        codes = next;
    }

    let final_codes = codes
        .codes()
        .iter()
        .map(|c| rescale_code_blur_to_sharp(c, model.norms()))
        .collect::<Result<Vec<_>>>()?;
    Ok(EstimationResult {
        kernel,
        final_codes: CodeMatrix::new(codes.num_atoms(), final_codes)?,
        per_iteration_objective: objective,
        positions: grid.positions,
    })
}
