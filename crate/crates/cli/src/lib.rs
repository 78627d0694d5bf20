//! Command-line surface of `adct`: train, adapt and evaluate blur-insensitive
//! classifiers. The binary is a thin wrapper around [`execute`].

mod commands;
mod overlay;

pub use commands::MODEL_FILE;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::ffi::OsString;
use std::sync::atomic::{AtomicBool, Ordering};

#[derive(Debug, Parser)]
#[command(name = "adct", version, about = "Blur-insensitive image classification with kernel-adapted dictionaries")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a classifier on a directory of category subdirectories.
    Train(TrainArgs),
    /// Synthesize or re-serialize a blur kernel.
    Kernel(KernelArgs),
    /// Blindly estimate the blur kernel of an image with a framework 2 model.
    EstimatePsf(EstimateArgs),
    /// Classify one image.
    Classify(ClassifyArgs),
    /// Run the accuracy experiment described by a config file.
    Experiment(ExperimentArgs),
    /// Blur an image with a kernel.
    Blur(BlurArgs),
    /// Richardson-Lucy deconvolution with a known kernel.
    Deblur(DeblurArgs),
}

/// Dictionary, classifier and estimator settings shared by training commands.
/// Unset flags fall back to the config file, then to built-in defaults.
#[derive(Debug, Args, Default)]
pub struct ModelFlags {
    /// Dictionary size [default: 256]
    #[arg(long = "K")]
    pub k: Option<usize>,
    /// Sparsity of every code [default: 5]
    #[arg(long = "L")]
    pub l: Option<usize>,
    /// K-SVD iterations [default: 10]
    #[arg(long)]
    pub ksvd_iterations: Option<usize>,
    /// Dense-grid stride in pixels [default: 8]
    #[arg(long)]
    pub stride: Option<usize>,
    /// Gradient PCA dimension for framework 2 [default: 128]
    #[arg(long)]
    pub pca_dim: Option<usize>,
    /// SVM cost [default: 1]
    #[arg(long = "C")]
    pub c: Option<f64>,
    /// Kernel regularization weight [default: 4]
    #[arg(long)]
    pub eta: Option<f64>,
    /// Estimator alternations [default: 5]
    #[arg(long = "T")]
    pub t: Option<usize>,
    /// Odd side of the estimated kernel [default: 21]
    #[arg(long)]
    pub kernel_size: Option<usize>,
    /// Seed for every random choice [default: 42]
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FrameworkArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Which framework to train
    #[arg(long, value_enum)]
    pub framework: Option<FrameworkArg>,
    /// Dataset root: one subdirectory of .pgm/.png images per category
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Output directory; the model is written to <out>/model.adct
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated categories [default: all]
    #[arg(long)]
    pub categories: Option<String>,
    /// Use at most this many images per category, 0 for all [default: 0]
    #[arg(long)]
    pub per_class: Option<usize>,
    /// key = value settings file; flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelKind {
    Gaussian,
    Motion,
    Delta,
    /// Read a text kernel and write it back normalized
    Load,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[arg(value_enum)]
    pub kind: KernelKind,
    /// Gaussian side length
    #[arg(long, default_value_t = 9)]
    pub size: usize,
    /// Gaussian standard deviation
    #[arg(long, default_value_t = 5.0)]
    pub sigma: f64,
    /// Motion length in pixels
    #[arg(long = "len", default_value_t = 20)]
    pub length: usize,
    /// Motion angle in degrees, counter-clockwise from horizontal
    #[arg(long, default_value_t = 45.0, allow_negative_numbers = true)]
    pub angle: f64,
    /// Kernel file to load (kind `load`)
    #[arg(long)]
    pub file: Option<PathBuf>,
    /// Output file [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Model file written by `train --framework 2`
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub image: PathBuf,
    /// Estimated kernel, as text
    #[arg(long)]
    pub out: PathBuf,
    /// CSV of the objective after each alternation
    #[arg(long)]
    pub objectives: Option<PathBuf>,
    /// Kernel regularization weight [default: from model]
    #[arg(long)]
    pub eta: Option<f64>,
    /// Alternations [default: from model]
    #[arg(long = "T")]
    pub t: Option<usize>,
    /// Odd side of the estimated kernel [default: from model]
    #[arg(long)]
    pub kernel_size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// Model file written by `train`
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub image: PathBuf,
    /// Known blur: a kernel file or delta, gaussian:<size>:<sigma>, motion:<len>:<angle>
    #[arg(long)]
    pub kernel: Option<String>,
    /// Framework to classify with [default: the model's]
    #[arg(long, value_enum)]
    pub framework: Option<FrameworkArg>,
    /// Where framework 2 writes its estimated kernel [default: <image>.kernel.txt]
    #[arg(long)]
    pub kernel_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// key = value experiment description
    pub config: PathBuf,
    /// Dataset root, overriding the config
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Accuracy CSV [default: accuracy.csv]
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Aligned text table [default: stdout only]
    #[arg(long)]
    pub text: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelFlags,
}

#[derive(Debug, Args)]
pub struct BlurArgs {
    #[arg(long)]
    pub image: PathBuf,
    /// A kernel file or delta, gaussian:<size>:<sigma>, motion:<len>:<angle>
    #[arg(long)]
    pub kernel: String,
    #[arg(long)]
    pub out: PathBuf,
    /// Wrap around the borders instead of replicating edge pixels
    #[arg(long)]
    pub periodic: bool,
}

#[derive(Debug, Args)]
pub struct DeblurArgs {
    #[arg(long)]
    pub image: PathBuf,
    /// A kernel file or delta, gaussian:<size>:<sigma>, motion:<len>:<angle>
    #[arg(long)]
    pub kernel: String,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = adct::blur::DEFAULT_RL_ITERATIONS)]
    pub iterations: usize,
}

static POOL_SIZED: AtomicBool = AtomicBool::new(false);

#[derive(Debug)]
pub enum CliError {
    Io(String),
    Usage(String),
    Numeric(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Io(m) | CliError::Usage(m) | CliError::Numeric(m) => f.write_str(m),
        }
    }
}

impl From<adct::Error> for CliError {
    fn from(e: adct::Error) -> Self {
        use adct::Error as E;
        let msg = e.to_string();
        match e {
            E::Io { .. } | E::Image { .. } | E::Format(_) => CliError::Io(msg),
            E::Numerical(_) => CliError::Numeric(msg),
            E::InvalidInput(_) | E::Parse { .. } | E::DimensionMismatch { .. } => CliError::Usage(msg),
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("ADCT_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("ADCT_THREADS must be a positive integer, got {raw:?}")))?;
    // The global pool can be sized only once per process.
    if POOL_SIZED.swap(true, Ordering::SeqCst) {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size worker pool: {e}")))
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code. Errors are reported on stderr.
pub fn execute<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match configure_threads().and_then(|()| commands::run(cli.command)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    }
}
