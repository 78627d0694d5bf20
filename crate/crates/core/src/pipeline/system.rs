use crate::container::{read_records, write_records, Persist, Record};
use crate::error::{Error, Result};
use crate::features::{
    dense_grid, gradient_descriptors, gradient_weight, joint_features, pca_fit, sift_descriptors, PatchGrid,
    PcaModel, SIFT_DIM,
};
use crate::image::GrayImage;
use crate::psf::{EstimatorConfig, GradientModel, GradientSpace};
use crate::sparse::{ksvd_learn, CodeMatrix, Dictionary, KsvdConfig, OmpEncoder};
use crate::spm::{spm_pool, support_vector_images, svm_train, LinearSvmModel, SpmFeature, SvmConfig};
use nalgebra::DMatrix;
use rayon::prelude::*;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Framework {
    /// SIFT dictionary, adapted to a supplied kernel.
    One,
    /// Joint SIFT + gradient dictionary with blind kernel estimation.
    Two,
}

impl Framework {
    fn tag(self) -> f64 {
        match self {
            Framework::One => 1.0,
            Framework::Two => 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub num_atoms: usize,
    pub sparsity: usize,
    pub ksvd_iterations: usize,
    pub patch_size: usize,
    pub stride: usize,
    /// Output dimension of the gradient PCA (Framework II).
    pub pca_dim: usize,
    pub svm: SvmConfig,
    pub estimator: EstimatorConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let estimator = EstimatorConfig::default();
        TrainConfig {
            num_atoms: 256,
            sparsity: estimator.sparsity,
            ksvd_iterations: 10,
            patch_size: estimator.patch_size,
            stride: estimator.stride,
            pca_dim: 128,
            svm: SvmConfig::default(),
            estimator,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_atoms == 0 || self.sparsity == 0 || self.ksvd_iterations == 0 || self.pca_dim == 0 {
            return Err(Error::invalid("K, L, K-SVD iterations and PCA dimension must be positive"));
        }
        if self.patch_size != 16 {
            return Err(Error::invalid(format!(
                "SIFT cells need 16-pixel patches, got {}",
                self.patch_size
            )));
        }
        if self.stride == 0 {
            return Err(Error::invalid("stride must be positive"));
        }
        self.estimator.validate()
    }

    /// Estimator settings with patch geometry and sparsity tied to training.
    pub fn estimator_config(&self) -> EstimatorConfig {
        EstimatorConfig {
            sparsity: self.sparsity,
            patch_size: self.patch_size,
            stride: self.stride,
            ..self.estimator
        }
    }
}

/// A trained classifier together with everything needed to adapt it to blur.
#[derive(Debug, Clone)]
pub struct TrainedSystem {
    pub framework: Framework,
    pub config: TrainConfig,
    /// Unit-norm SIFT (Framework I) or joint (Framework II) dictionary.
    pub dictionary: Dictionary,
    /// Framework II: gradient PCA, its balancing weight and the separated
    /// gradient block with its block norms.
    pub gradient: Option<GradientModel>,
    /// Sharp codes of every training patch, image by image in grid order.
    pub sharp_codes: CodeMatrix,
    pub svm: LinearSvmModel,
    pub classes: Vec<String>,
    pub labels: Vec<usize>,
    /// The training images; their dense grids form the patch store.
    pub images: Vec<GrayImage>,
}

impl TrainedSystem {
    pub fn grid(&self, image: &GrayImage) -> Result<PatchGrid> {
        dense_grid(image, self.config.patch_size, self.config.stride)
    }

    pub fn pca(&self) -> Option<&PcaModel> {
        match &self.gradient {
            Some(GradientModel {
                space: GradientSpace::Reduced { pca, .. },
                ..
            }) => Some(pca),
            _ => None,
        }
    }

    /// Sharp-domain descriptors of `image` for this system's dictionary.
    pub fn describe(&self, image: &GrayImage, grid: &PatchGrid) -> Result<DMatrix<f64>> {
        describe(self.framework, self.gradient.as_ref().map(|g| &g.space), image, grid)
    }

    /// Per-image ranges of patch indices into the patch store.
    pub fn patch_ranges(&self) -> Result<Vec<std::ops::Range<usize>>> {
        let mut start = 0;
        self.images
            .iter()
            .map(|img| {
                let n = self.grid(img)?.len();
                start += n;
                Ok(start - n..start)
            })
            .collect()
    }

    /// Max-pooled, L2-normalized classifier feature for codes on `grid`.
    pub fn pooled(&self, codes: &CodeMatrix, grid: &PatchGrid) -> Result<SpmFeature> {
        Ok(spm_pool(codes, grid)?.l2_normalized())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let c = &self.config;
        let e = &c.estimator;
        let settings = [
            self.framework.tag(),
            c.num_atoms as f64,
            c.sparsity as f64,
            c.ksvd_iterations as f64,
            c.patch_size as f64,
            c.stride as f64,
            c.pca_dim as f64,
            c.svm.c,
            c.svm.tolerance,
            c.svm.max_epochs as f64,
            e.eta,
            e.iterations as f64,
            e.kernel_size as f64,
            c.seed as f64,
        ];
        let mut records = vec![Record::column(&settings)];
        records.extend(self.dictionary.to_records());
        if let Some(g) = &self.gradient {
            let GradientSpace::Reduced { pca, weight, .. } = &g.space else {
                return Err(Error::invalid("framework II system without a reduced gradient space"));
            };
            records.extend(pca.to_records());
            records.push(Record::column(&[*weight]));
        }
        records.extend(self.sharp_codes.to_records());
        records.extend(self.svm.to_records());
        records.push(Record::Text(self.classes.join("\n")));
        records.push(Record::column(&self.labels.iter().map(|&l| l as f64).collect::<Vec<_>>()));
        for img in &self.images {
            records.extend(img.to_records());
        }
        write_records(path, &records)
    }

    pub fn load(path: &Path) -> Result<TrainedSystem> {
        let records = read_records(path)?;
        let it = &mut records.into_iter();
        let bad = |m: &str| Error::Format(format!("{}: {m}", path.display()));
        let s = it.next().ok_or_else(|| bad("empty file"))?.into_plain()?;
        if s.len() != 14 {
            return Err(bad("settings block has the wrong length"));
        }
        let framework = match s[0] as u32 {
            1 => Framework::One,
            2 => Framework::Two,
            _ => return Err(bad("unknown framework tag")),
        };
        let config = TrainConfig {
            num_atoms: s[1] as usize,
            sparsity: s[2] as usize,
            ksvd_iterations: s[3] as usize,
            patch_size: s[4] as usize,
            stride: s[5] as usize,
            pca_dim: s[6] as usize,
            svm: SvmConfig {
                c: s[7],
                tolerance: s[8],
                max_epochs: s[9] as usize,
            },
            estimator: EstimatorConfig {
                eta: s[10],
                iterations: s[11] as usize,
                sparsity: s[2] as usize,
                kernel_size: s[12] as usize,
                patch_size: s[4] as usize,
                stride: s[5] as usize,
            },
            seed: s[13] as u64,
        };
        let dictionary = Dictionary::from_records(it)?;
        let gradient = match framework {
            Framework::One => None,
            Framework::Two => {
                let pca = PcaModel::from_records(it)?;
                let w = it.next().ok_or_else(|| bad("missing gradient weight"))?.into_plain()?;
                if w.len() != 1 {
                    return Err(bad("gradient weight block has the wrong length"));
                }
                Some(gradient_model(&dictionary, pca, w[0], config.patch_size)?)
            }
        };
        let sharp_codes = CodeMatrix::from_records(it)?;
        let svm = LinearSvmModel::from_records(it)?;
        let classes: Vec<String> = it
            .next()
            .ok_or_else(|| bad("missing class table"))?
            .into_text()?
            .split('\n')
            .map(str::to_owned)
            .collect();
        let labels = it
            .next()
            .ok_or_else(|| bad("missing labels"))?
            .into_plain()?
            .iter()
            .map(|&l| l as usize)
            .collect::<Vec<_>>();
        let images = it
            .map(|r| GrayImage::from_records(&mut std::iter::once(r)))
            .collect::<Result<Vec<_>>>()?;
        if images.len() != labels.len() {
            return Err(bad("image count does not match label count"));
        }
        let system = TrainedSystem {
            framework,
            config,
            dictionary,
            gradient,
            sharp_codes,
            svm,
            classes,
            labels,
            images,
        };
        let total: usize = system.patch_ranges()?.last().map_or(0, |r| r.end);
        if total != system.sharp_codes.num_signals() {
            return Err(bad("sharp codes do not match the patch store"));
        }
        Ok(system)
    }
}

pub(crate) fn describe(
    framework: Framework,
    space: Option<&GradientSpace>,
    image: &GrayImage,
    grid: &PatchGrid,
) -> Result<DMatrix<f64>> {
    let sift = sift_descriptors(grid)?;
    match (framework, space) {
        (Framework::One, _) => Ok(sift),
        (Framework::Two, Some(space)) => {
            let grad = space.describe(image, grid)?;
            joint_features(&sift, &grad, 1.0)
        }
        (Framework::Two, None) => Err(Error::invalid("framework II needs a gradient space")),
    }
}

fn gradient_model(joint: &Dictionary, pca: PcaModel, weight: f64, patch_size: usize) -> Result<GradientModel> {
    let m = pca.output_dim();
    let block = joint.row_block(SIFT_DIM, m)?;
    let space = GradientSpace::Reduced {
        patch_size,
        pca,
        weight,
    };
    GradientModel::new(&block, space)
}

fn hstack(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let rows = blocks.first().map_or(0, DMatrix::nrows);
    let cols = blocks.iter().map(DMatrix::ncols).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        out.columns_mut(at, b.ncols()).copy_from(b);
        at += b.ncols();
    }
    out
}

fn check_corpus(images: &[GrayImage], labels: &[usize], classes: &[String]) -> Result<()> {
    if images.is_empty() {
        return Err(Error::invalid("empty training corpus"));
    }
    if images.len() != labels.len() {
        return Err(Error::mismatch("training labels", images.len(), labels.len()));
    }
    if classes.iter().any(|c| c.contains('\n') || c.is_empty()) {
        return Err(Error::invalid("class names must be nonempty single-line strings"));
    }
    Ok(())
}

/// Learns the dictionary, encodes every training patch and fits the SVM on
/// the pooled codes.
fn finish(
    framework: Framework,
    config: &TrainConfig,
    features: Vec<DMatrix<f64>>,
    grids: Vec<PatchGrid>,
    gradient_parts: Option<(PcaModel, f64)>,
    images: Vec<GrayImage>,
    labels: &[usize],
    classes: &[String],
) -> Result<TrainedSystem> {
    let all = hstack(&features);
    let ksvd = ksvd_learn(
        &all,
        &KsvdConfig {
            num_atoms: config.num_atoms,
            sparsity: config.sparsity,
            iterations: config.ksvd_iterations,
            seed: config.seed,
        },
    )?;
    log::info!(
        "dictionary {}x{} learned on {} patches, final objective {:.4e}",
        ksvd.dictionary.dim(),
        ksvd.dictionary.num_atoms(),
        all.ncols(),
        ksvd.objective.last().copied().unwrap_or(f64::NAN)
    );
    let dictionary = ksvd.dictionary;
    let encoder = OmpEncoder::new(&dictionary, config.sparsity)?;
    let sharp_codes = encoder.encode_all(&all)?;

    let mut start = 0;
    let mut pooled = Vec::with_capacity(grids.len());
    for grid in &grids {
        let idx: Vec<usize> = (start..start + grid.len()).collect();
        start += grid.len();
        pooled.push(spm_pool(&sharp_codes.select(&idx), grid)?.l2_normalized());
    }
    let svm = svm_train(&pooled, labels, classes, &config.svm)?;
    let gradient = match gradient_parts {
        Some((pca, weight)) => Some(gradient_model(&dictionary, pca, weight, config.patch_size)?),
        None => None,
    };
    Ok(TrainedSystem {
        framework,
        config: *config,
        dictionary,
        gradient,
        sharp_codes,
        svm,
        classes: classes.to_vec(),
        labels: labels.to_vec(),
        images,
    })
}

/// Dense SIFT, K-SVD, OMP codes, pyramid pooling and a linear SVM.
pub fn train_framework1(
    images: &[GrayImage],
    labels: &[usize],
    classes: &[String],
    config: &TrainConfig,
) -> Result<TrainedSystem> {
    config.validate()?;
    check_corpus(images, labels, classes)?;
    let (grids, features): (Vec<_>, Vec<_>) = images
        .par_iter()
        .map(|img| {
            let grid = dense_grid(img, config.patch_size, config.stride)?;
            let f = sift_descriptors(&grid)?;
            Ok((grid, f))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    finish(Framework::One, config, features, grids, None, images.to_vec(), labels, classes)
}

/// Like Framework I on the joint descriptor `[sift; weight * pca(grad)]`.
/// The gradient block of the learned dictionary is split off and
/// normalized for the blind estimator.
pub fn train_framework2(
    images: &[GrayImage],
    labels: &[usize],
    classes: &[String],
    config: &TrainConfig,
) -> Result<TrainedSystem> {
    config.validate()?;
    check_corpus(images, labels, classes)?;
    let parts = images
        .par_iter()
        .map(|img| {
            let grid = dense_grid(img, config.patch_size, config.stride)?;
            let sift = sift_descriptors(&grid)?;
            let grad = gradient_descriptors(img, &grid)?;
            Ok((grid, sift, grad))
        })
        .collect::<Result<Vec<_>>>()?;
    let raw = hstack(&parts.iter().map(|p| p.2.clone()).collect::<Vec<_>>());
    let pca = pca_fit(&raw, config.pca_dim.min(raw.nrows()))?;
    let reduced = pca.project_all(&raw)?;
    let sift_all = hstack(&parts.iter().map(|p| p.1.clone()).collect::<Vec<_>>());
    let weight = gradient_weight(&sift_all, &reduced)?;
    log::info!("gradient PCA to {} dims, joint weight {weight:.4}", pca.output_dim());
    let mut grids = Vec::with_capacity(parts.len());
    let mut features = Vec::with_capacity(parts.len());
    for (grid, sift, grad) in parts {
        features.push(joint_features(&sift, &pca.project_all(&grad)?, weight)?);
        grids.push(grid);
    }
    finish(
        Framework::Two,
        config,
        features,
        grids,
        Some((pca, weight)),
        images.to_vec(),
        labels,
        classes,
    )
}

/// Patch-store indices of every patch from a support-vector training image.
pub fn select_training_patches(system: &TrainedSystem) -> Result<Vec<usize>> {
    let ranges = system.patch_ranges()?;
    Ok(support_vector_images(&system.svm)?
        .into_iter()
        .flat_map(|i| ranges[i].clone())
        .collect())
}
