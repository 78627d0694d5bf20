use super::classify::{classify_framework1, classify_framework2, classify_sharp, Adapter, Prediction};
use super::dataset::{load_images, Dataset};
use super::system::{train_framework1, train_framework2, TrainConfig};
use crate::blur::{convolve, richardson_lucy, Boundary, KernelSpec, DEFAULT_RL_ITERATIONS};
use crate::error::{Error, Result};
use crate::image::GrayImage;
use rayon::prelude::*;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Blurred features coded against the sharp dictionary.
    SharpDict,
    /// Richardson-Lucy with the true kernel, then the sharp pipeline.
    RlDeblur,
    /// SIFT dictionary adapted to the true kernel.
    Framework1,
    /// Joint dictionary with blind kernel estimation.
    Framework2,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::SharpDict, Method::RlDeblur, Method::Framework1, Method::Framework2];

    pub fn name(self) -> &'static str {
        match self {
            Method::SharpDict => "sharp_dict",
            Method::RlDeblur => "rl_deblur",
            Method::Framework1 => "framework1",
            Method::Framework2 => "framework2",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| Error::invalid(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: PathBuf,
    /// Categories to use; empty means every subdirectory.
    pub categories: Vec<String>,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub kernels: Vec<KernelSpec>,
    pub methods: Vec<Method>,
    /// K, L, eta, T, stride and seed live here.
    pub train: TrainConfig,
    pub rl_iterations: usize,
}

impl ExperimentConfig {
    pub fn new(dataset: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            dataset: dataset.into(),
            categories: Vec::new(),
            train_per_class: 10,
            test_per_class: 10,
            kernels: vec![KernelSpec::Gaussian { size: 9, sigma: 5.0 }],
            methods: Method::ALL.to_vec(),
            train: TrainConfig::default(),
            rl_iterations: DEFAULT_RL_ITERATIONS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.train_per_class == 0 || self.test_per_class == 0 {
            return Err(Error::invalid("train and test counts must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(Error::invalid("no methods selected"));
        }
        if self.rl_iterations == 0 {
            return Err(Error::invalid("Richardson-Lucy needs at least one iteration"));
        }
        self.train.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyRow {
    pub kernel: String,
    pub method: String,
    pub accuracy: f64,
    pub n_test: usize,
}

/// One baseline row (sharp test images) followed by kernel × method cells.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyTable {
    pub rows: Vec<AccuracyRow>,
}

pub const BASELINE_KERNEL: &str = "none";
pub const BASELINE_METHOD: &str = "sharp";

impl AccuracyTable {
    pub fn get(&self, kernel: &str, method: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.kernel == kernel && r.method == method)
            .map(|r| r.accuracy)
    }

    pub fn baseline(&self) -> Option<f64> {
        self.get(BASELINE_KERNEL, BASELINE_METHOD)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("kernel,method,accuracy,n_test\n");
        for r in &self.rows {
            out += &format!("{},{},{:.6},{}\n", r.kernel, r.method, r.accuracy, r.n_test);
        }
        out
    }

    pub fn to_text(&self) -> String {
        let kw = self.rows.iter().map(|r| r.kernel.len()).chain([6]).max().unwrap_or(6);
        let mw = self.rows.iter().map(|r| r.method.len()).chain([6]).max().unwrap_or(6);
        let mut out = format!("{:<kw$}  {:<mw$}  {:>8}  {:>6}\n", "kernel", "method", "accuracy", "n_test");
        for r in &self.rows {
            out += &format!(
                "{:<kw$}  {:<mw$}  {:>7.2}%  {:>6}\n",
                r.kernel,
                r.method,
                100.0 * r.accuracy,
                r.n_test
            );
        }
        out
    }
}

fn accuracy(predictions: &[Prediction], truth: &[usize]) -> f64 {
    let correct = predictions.iter().zip(truth).filter(|(p, &t)| p.label == t).count();
    correct as f64 / truth.len() as f64
}

fn predict_all<F>(images: &[GrayImage], f: F) -> Result<Vec<Prediction>>
where
    F: Fn(&GrayImage) -> Result<Prediction> + Sync + Send,
{
    images.par_iter().map(f).collect()
}

/// Trains on a seeded split of the dataset and reports accuracy for each
/// kernel and method, plus sharp-image accuracy as the baseline row.
///
/// Framework I and the Richardson-Lucy baseline receive the true kernel;
/// Framework II sees only the blurred image.
pub fn run_experiment(config: &ExperimentConfig) -> Result<AccuracyTable> {
    config.validate()?;
    let dataset = Dataset::open(&config.dataset, &config.categories)?;
    let (train, test) = dataset.split(config.train_per_class, config.test_per_class, config.train.seed)?;
    let train_images = load_images(&train)?;
    let test_images = load_images(&test)?;
    let train_labels: Vec<usize> = train.iter().map(|s| s.label).collect();
    let truth: Vec<usize> = test.iter().map(|s| s.label).collect();
    let n_test = truth.len();
    log::info!(
        "{} classes, {} training and {n_test} test images",
        dataset.classes.len(),
        train.len()
    );

    let sys1 = train_framework1(&train_images, &train_labels, &dataset.classes, &config.train)?;
    let adapter1 = Adapter::new(&sys1)?;
    let sys2 = if config.methods.contains(&Method::Framework2) {
        Some(train_framework2(&train_images, &train_labels, &dataset.classes, &config.train)?)
    } else {
        None
    };
    let adapter2 = sys2.as_ref().map(Adapter::new).transpose()?;

    let mut rows = Vec::new();
    let sharp = predict_all(&test_images, |img| classify_sharp(&sys1, img))?;
    rows.push(AccuracyRow {
        kernel: BASELINE_KERNEL.into(),
        method: BASELINE_METHOD.into(),
        accuracy: accuracy(&sharp, &truth),
        n_test,
    });

    for spec in &config.kernels {
        let kernel = spec.build()?;
        let blurred = test_images
            .par_iter()
            .map(|img| Ok(convolve(img, &kernel, Boundary::Replicate)?.quantized()))
            .collect::<Result<Vec<_>>>()?;
        for &method in &config.methods {
            let predictions = match method {
                Method::SharpDict => predict_all(&blurred, |img| classify_sharp(&sys1, img))?,
                Method::RlDeblur => predict_all(&blurred, |img| {
                    let restored = richardson_lucy(img, &kernel, config.rl_iterations, Boundary::Replicate)?;
                    classify_sharp(&sys1, &restored)
                })?,
                Method::Framework1 => predict_all(&blurred, |img| classify_framework1(&adapter1, img, &kernel))?,
                Method::Framework2 => {
                    let adapter = adapter2.as_ref().expect("framework II system trained when selected");
                    predict_all(&blurred, |img| classify_framework2(adapter, img).map(|(p, _)| p))?
                }
            };
            let acc = accuracy(&predictions, &truth);
            log::info!("{spec} {method}: {:.2}%", 100.0 * acc);
            rows.push(AccuracyRow {
                kernel: spec.to_string(),
                method: method.name().into(),
                accuracy: acc,
                n_test,
            });
        }
    }
    Ok(AccuracyTable { rows })
}
