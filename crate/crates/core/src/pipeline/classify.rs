use super::system::{Framework, TrainedSystem};
use crate::blur::BlurKernel;
use crate::error::{Error, Result};
use crate::features::{dense_grid, sift_descriptors, SIFT_DIM};
use crate::image::GrayImage;
use crate::psf::{alternate_minimize, AdaptationSet, GradientModel};
use crate::sparse::{normalize_dictionary, rescale_code_blur_to_sharp, CodeMatrix, NormalizedDictionary, OmpEncoder};
use crate::spm::{support_vector_images, svm_predict};
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: usize,
    pub scores: Vec<f64>,
}

impl Prediction {
    pub fn score(&self) -> f64 {
        self.scores[self.label]
    }
}

fn predict(system: &TrainedSystem, codes: &CodeMatrix, grid: &crate::features::PatchGrid) -> Result<Prediction> {
    let feature = system.pooled(codes, grid)?;
    let (label, scores) = svm_predict(&system.svm, &feature)?;
    Ok(Prediction { label, scores })
}

/// The unadapted pipeline: codes against the sharp dictionary.
pub fn classify_sharp(system: &TrainedSystem, image: &GrayImage) -> Result<Prediction> {
    let grid = system.grid(image)?;
    let features = system.describe(image, &grid)?;
    let codes = OmpEncoder::new(&system.dictionary, system.config.sparsity)?.encode_all(&features)?;
    predict(system, &codes, &grid)
}

/// Blur-adaptation state for one trained system: the support-vector
/// training patches with their fixed sharp codes, and a cache of
/// dictionaries already re-fitted to a kernel.
pub struct Adapter<'a> {
    system: &'a TrainedSystem,
    training: AdaptationSet,
    cache: Mutex<HashMap<u64, Arc<NormalizedDictionary>>>,
}

impl<'a> Adapter<'a> {
    /// Adapts through the patches of the support-vector training images.
    pub fn new(system: &'a TrainedSystem) -> Result<Self> {
        Self::with_images(system, &support_vector_images(&system.svm)?)
    }

    /// Adapts through the patches of the listed training images.
    pub fn with_images(system: &'a TrainedSystem, chosen: &[usize]) -> Result<Self> {
        if chosen.is_empty() {
            return Err(Error::invalid("no training images selected for adaptation"));
        }
        if let Some(&i) = chosen.iter().find(|&&i| i >= system.images.len()) {
            return Err(Error::invalid(format!("training image {i} out of range")));
        }
        let ranges = system.patch_ranges()?;
        let mut images = Vec::with_capacity(chosen.len());
        let mut grids = Vec::with_capacity(chosen.len());
        let mut patches = Vec::new();
        for &i in chosen {
            let img = &system.images[i];
            grids.push(system.grid(img)?);
            images.push(img.clone());
            patches.extend(ranges[i].clone());
        }
        let codes = system.sharp_codes.select(&patches);
        let unit_codes = match system.framework {
            Framework::One => codes,
            Framework::Two => gradient_model(system)?.to_unit_codes(&codes)?,
        };
        log::debug!(
            "adaptation set: {} of {} training images, {} patches",
            chosen.len(),
            system.images.len(),
            patches.len()
        );
        Ok(Adapter {
            system,
            training: AdaptationSet::new(images, grids, unit_codes)?,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn system(&self) -> &TrainedSystem {
        self.system
    }

    pub fn training(&self) -> &AdaptationSet {
        &self.training
    }

    /// SIFT dictionary re-fitted to `kernel`, shared across calls with an
    /// identical kernel.
    pub fn sift_dictionary(&self, kernel: &BlurKernel) -> Result<Arc<NormalizedDictionary>> {
        let key = kernel.fingerprint();
        if let Some(hit) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(Arc::clone(hit));
        }
        let features = self
            .training
            .blurred_descriptors(kernel, SIFT_DIM, |blurred, grid| {
                sift_descriptors(&dense_grid(blurred, grid.patch_size, grid.stride)?)
            })?;
        let adapted = Arc::new(normalize_dictionary(&self.training.refit(&features)?)?);
        if !adapted.dropped().is_empty() {
            log::debug!("adapted dictionary dropped {} degenerate atoms", adapted.dropped().len());
        }
        self.cache.lock().expect("cache lock").insert(key, Arc::clone(&adapted));
        Ok(adapted)
    }
}

fn gradient_model(system: &TrainedSystem) -> Result<&GradientModel> {
    system
        .gradient
        .as_ref()
        .ok_or_else(|| Error::invalid("system has no gradient model"))
}

/// Classifies a blurred image with the SIFT dictionary adapted to the
/// known `kernel`.
pub fn classify_framework1(adapter: &Adapter, blurred: &GrayImage, kernel: &BlurKernel) -> Result<Prediction> {
    let system = adapter.system;
    if system.framework != Framework::One {
        return Err(Error::invalid("framework I classification needs a framework I system"));
    }
    let adapted = adapter.sift_dictionary(kernel)?;
    let grid = dense_grid(blurred, system.config.patch_size, system.config.stride)?;
    let features = sift_descriptors(&grid)?;
    let l = system.config.sparsity.min(adapted.dictionary.num_atoms());
    let compact = OmpEncoder::new(&adapted.dictionary, l)?.encode_all(&features)?;
    let codes = compact
        .codes()
        .iter()
        .map(|c| rescale_code_blur_to_sharp(&adapted.expand(c), &adapted.norms))
        .collect::<Result<Vec<_>>>()?;
    predict(system, &CodeMatrix::new(adapted.num_slots(), codes)?, &grid)
}

/// Classifies a blurred image of unknown blur, returning the estimated
/// kernel with the prediction.
pub fn classify_framework2(adapter: &Adapter, blurred: &GrayImage) -> Result<(Prediction, BlurKernel)> {
    let system = adapter.system;
    if system.framework != Framework::Two {
        return Err(Error::invalid("framework II classification needs a framework II system"));
    }
    let model = gradient_model(system)?;
    let estimate = alternate_minimize(blurred, model, &adapter.training, &system.config.estimator_config())?;
    let grid = system.grid(blurred)?;
    let prediction = predict(system, &estimate.final_codes, &grid)?;
    Ok((prediction, estimate.kernel))
}
