//! End-to-end training and classification for both frameworks, and the
//! accuracy experiment over kernels and methods.
//!
//! Framework I adapts the SIFT dictionary to a known kernel. Framework II
//! learns a joint SIFT + reduced-gradient dictionary and classifies blurred
//! input through the blind estimator on the gradient block.

mod classify;
mod dataset;
mod experiment;
mod system;

pub use classify::{
    classify_framework1, classify_framework2, classify_sharp, Adapter, Prediction,
};
pub use dataset::{Dataset, Sample};
pub use experiment::{run_experiment, AccuracyRow, AccuracyTable, ExperimentConfig, Method};
pub use system::{
    select_training_patches, train_framework1, train_framework2, Framework, TrainConfig, TrainedSystem,
};
