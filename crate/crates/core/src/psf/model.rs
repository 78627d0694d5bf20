use crate::blur::{convolve, BlurKernel, Boundary};
use crate::error::{Error, Result};
use crate::features::{gradient_descriptors, PatchGrid, PcaModel};
use crate::image::GrayImage;
use crate::sparse::{
    normalize_dictionary, rescale_code_sharp_to_blur, CodeMatrix, Dictionary, NormalizedDictionary,
    OmpEncoder, OptimalDirections,
};
use nalgebra::DMatrix;
use rayon::prelude::*;

/// Coordinates in which gradient patches are sparse-coded.
#[derive(Debug, Clone, PartialEq)]
pub enum GradientSpace {
    /// Raw `[dx; dy]` patch gradients.
    Raw { patch_size: usize },
    /// `weight * pca.project(raw)`: the gradient half of the joint descriptor.
    Reduced {
        patch_size: usize,
        pca: PcaModel,
        weight: f64,
    },
}

impl GradientSpace {
    pub fn patch_size(&self) -> usize {
        match self {
            GradientSpace::Raw { patch_size } | GradientSpace::Reduced { patch_size, .. } => {
                *patch_size
            }
        }
    }

    pub fn raw_dim(&self) -> usize {
        2 * self.patch_size() * self.patch_size()
    }

    pub fn dim(&self) -> usize {
        match self {
            GradientSpace::Raw { .. } => self.raw_dim(),
            GradientSpace::Reduced { pca, .. } => pca.output_dim(),
        }
    }

    /// Maps raw gradient columns into coding coordinates.
    pub fn encode_all(&self, raw: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if raw.nrows() != self.raw_dim() {
            return Err(Error::mismatch("raw gradient length", self.raw_dim(), raw.nrows()));
        }
        match self {
            GradientSpace::Raw { .. } => Ok(raw.clone()),
            GradientSpace::Reduced { pca, weight, .. } => Ok(pca.project_all(raw)? * *weight),
        }
    }

    /// Maps coding-coordinate columns back to raw `[dx; dy]` gradients.
    pub fn decode_all(&self, working: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if working.nrows() != self.dim() {
            return Err(Error::mismatch("gradient code space", self.dim(), working.nrows()));
        }
        match self {
            GradientSpace::Raw { .. } => Ok(working.clone()),
            GradientSpace::Reduced { pca, weight, .. } => {
                let mut raw = &pca.basis * (working / *weight);
                for mut col in raw.column_iter_mut() {
                    col += &pca.mean;
                }
                Ok(raw)
            }
        }
    }

    /// Coding-space descriptors of every grid patch of `image`.
    pub fn describe(&self, image: &GrayImage, grid: &PatchGrid) -> Result<DMatrix<f64>> {
        if grid.patch_size != self.patch_size() {
            return Err(Error::mismatch("gradient patch size", self.patch_size(), grid.patch_size));
        }
        self.encode_all(&gradient_descriptors(image, grid)?)
    }
}

/// The sharp gradient dictionary: unit-norm atoms in coding space plus the
/// norms that relate them to the dictionary the sharp codes belong to.
///
/// For a dictionary learned directly on gradients the norms are all one.
/// For the gradient block separated from a joint dictionary they are the
/// block norms, and a joint code `a` decodes the gradient block as
/// `unit_atoms * (a .* norms)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientModel {
    pub normalized: NormalizedDictionary,
    pub space: GradientSpace,
}

impl GradientModel {
    /// Wraps a dictionary whose columns live in `space` (normalizing it).
    pub fn new(atoms: &Dictionary, space: GradientSpace) -> Result<Self> {
        if atoms.dim() != space.dim() {
            return Err(Error::mismatch("gradient dictionary rows", space.dim(), atoms.dim()));
        }
        Ok(GradientModel {
            normalized: normalize_dictionary(atoms)?,
            space,
        })
    }

    pub fn num_slots(&self) -> usize {
        self.normalized.num_slots()
    }

    pub fn norms(&self) -> &[f64] {
        &self.normalized.norms
    }

    /// Unit atoms over all `K` slots (dropped slots are zero columns).
    pub fn unit_atoms(&self) -> DMatrix<f64> {
        let n = &self.normalized;
        let mut out = DMatrix::zeros(n.dictionary.dim(), n.num_slots());
        for (c, &j) in n.retained.iter().enumerate() {
            out.set_column(j, &n.dictionary.atoms().column(c));
        }
        out
    }

    /// Sharp codes of the owning dictionary rescaled onto the unit atoms.
    pub fn to_unit_codes(&self, codes: &CodeMatrix) -> Result<CodeMatrix> {
        let scaled = codes
            .codes()
            .iter()
            .map(|c| rescale_code_sharp_to_blur(c, self.norms()))
            .collect::<Result<Vec<_>>>()?;
        CodeMatrix::new(codes.num_atoms(), scaled)
    }
}

/// OMP codes (over all `K` slots) of coding-space columns against a
/// normalized dictionary.
pub(crate) fn encode_normalized(
    normalized: &NormalizedDictionary,
    signals: &DMatrix<f64>,
    sparsity: usize,
) -> Result<CodeMatrix> {
    let l = sparsity.min(normalized.dictionary.num_atoms()).min(normalized.dictionary.dim());
    let encoder = OmpEncoder::new(&normalized.dictionary, l)?;
    let compact = encoder.encode_all(signals)?;
    let codes = compact.codes().iter().map(|c| normalized.expand(c)).collect();
    CodeMatrix::new(normalized.num_slots(), codes)
}

/// Initial codes: blurred gradient patches encoded against the sharp
/// gradient dictionary.
pub fn init_codes(blurred_patches: &DMatrix<f64>, model: &GradientModel, sparsity: usize) -> Result<CodeMatrix> {
    if blurred_patches.nrows() != model.space.dim() {
        return Err(Error::mismatch("blurred gradient patches", model.space.dim(), blurred_patches.nrows()));
    }
    encode_normalized(&model.normalized, blurred_patches, sparsity)
}

/// Sharp training material for re-fitting the gradient dictionary to a
/// kernel: source images, the patch positions used from each, and the
/// sharp codes of those patches rescaled onto the unit gradient atoms.
#[derive(Debug, Clone)]
pub struct AdaptationSet {
    images: Vec<GrayImage>,
    grids: Vec<PatchGrid>,
    solver: OptimalDirections,
}

impl AdaptationSet {
    /// `grids[i]` lists the patches taken from `images[i]`; `unit_codes`
    /// holds one column per patch in image-then-grid order.
    pub fn new(images: Vec<GrayImage>, grids: Vec<PatchGrid>, unit_codes: CodeMatrix) -> Result<Self> {
        if images.len() != grids.len() {
            return Err(Error::mismatch("adaptation grids", images.len(), grids.len()));
        }
        let total: usize = grids.iter().map(PatchGrid::len).sum();
        if total != unit_codes.num_signals() {
            return Err(Error::mismatch("adaptation codes", total, unit_codes.num_signals()));
        }
        Ok(AdaptationSet {
            images,
            grids,
            solver: OptimalDirections::new(unit_codes)?,
        })
    }

    pub fn num_patches(&self) -> usize {
        self.solver.codes().num_signals()
    }

    pub fn num_images(&self) -> usize {
        self.images.len()
    }

    pub fn codes(&self) -> &CodeMatrix {
        self.solver.codes()
    }

    /// Blurs every source image (replicated border) and returns the
    /// coding-space descriptors of the listed patches.
    pub fn blurred_features(&self, kernel: &BlurKernel, space: &GradientSpace) -> Result<DMatrix<f64>> {
        self.blurred_descriptors(kernel, space.dim(), |img, grid| space.describe(img, grid))
    }

    /// Like [`AdaptationSet::blurred_features`] for any `dim`-row patch
    /// descriptor.
    pub fn blurred_descriptors<F>(&self, kernel: &BlurKernel, dim: usize, describe: F) -> Result<DMatrix<f64>>
    where
        F: Fn(&GrayImage, &PatchGrid) -> Result<DMatrix<f64>> + Sync,
    {
        let blocks = self
            .images
            .par_iter()
            .zip(self.grids.par_iter())
            .map(|(img, grid)| {
                let blurred = convolve(img, kernel, Boundary::Replicate)?;
                describe(&blurred, grid)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut out = DMatrix::zeros(dim, self.num_patches());
        let mut col = 0;
        for b in blocks {
            if b.nrows() != dim {
                return Err(Error::mismatch("adaptation descriptor rows", dim, b.nrows()));
            }
            out.columns_mut(col, b.ncols()).copy_from(&b);
            col += b.ncols();
        }
        Ok(out)
    }

    /// Least-squares dictionary reproducing `features` from the stored codes.
    pub fn refit(&self, features: &DMatrix<f64>) -> Result<Dictionary> {
        self.solver.solve(features)
    }
}

/// Gradient dictionary re-fitted to `kernel`: the training patches are
/// blurred, their gradient descriptors regressed on the fixed sharp codes,
/// and the result normalized. The returned norms map codes over the new
/// unit atoms back to the sharp code scale.
pub fn adapt_grad_dictionary(
    kernel: &BlurKernel,
    training: &AdaptationSet,
    space: &GradientSpace,
) -> Result<NormalizedDictionary> {
    let features = training.blurred_features(kernel, space)?;
    normalize_dictionary(&training.refit(&features)?)
}

