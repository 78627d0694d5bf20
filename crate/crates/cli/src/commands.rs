use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use adct::blur::{
    convolve, gaussian_kernel, load_kernel, motion_kernel, richardson_lucy, BlurKernel, Boundary, KernelSpec,
};
use adct::image::GrayImage;
use adct::pipeline::{
    classify_framework1, classify_framework2, run_experiment, train_framework1, train_framework2, Adapter, Dataset,
    ExperimentConfig, Framework, Method, TrainConfig, TrainedSystem,
};
use adct::psf::alternate_minimize;
use adct::spm::support_vector_images;

use crate::overlay::Overlay;
use crate::{
    BlurArgs, ClassifyArgs, CliError, Command, DeblurArgs, EstimateArgs, ExperimentArgs, FrameworkArg, KernelArgs,
    KernelKind, ModelFlags, TrainArgs,
};

pub const MODEL_FILE: &str = "model.adct";

const MODEL_KEYS: &[&str] = &["K", "L", "ksvd_iterations", "stride", "pca_dim", "C", "eta", "T", "kernel_size", "seed"];
const TRAIN_KEYS: &[&str] = &["framework", "data", "out", "categories", "per_class"];
const EXPERIMENT_KEYS: &[&str] = &[
    "data",
    "categories",
    "train_per_class",
    "test_per_class",
    "kernels",
    "methods",
    "rl_iterations",
    "csv",
    "text",
];

type Result<T> = std::result::Result<T, CliError>;

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Train(a) => train(a),
        Command::Kernel(a) => kernel(a),
        Command::EstimatePsf(a) => estimate_psf(a),
        Command::Classify(a) => classify(a),
        Command::Experiment(a) => experiment(a),
        Command::Blur(a) => blur(a),
        Command::Deblur(a) => deblur(a),
    }
}

fn keys(extra: &[&'static str]) -> Vec<&'static str> {
    MODEL_KEYS.iter().chain(extra).copied().collect()
}

fn model_config(flags: &ModelFlags, overlay: &Overlay) -> Result<TrainConfig> {
    let d = TrainConfig::default();
    let mut cfg = TrainConfig {
        num_atoms: overlay.pick(flags.k, "K", d.num_atoms)?,
        sparsity: overlay.pick(flags.l, "L", d.sparsity)?,
        ksvd_iterations: overlay.pick(flags.ksvd_iterations, "ksvd_iterations", d.ksvd_iterations)?,
        stride: overlay.pick(flags.stride, "stride", d.stride)?,
        pca_dim: overlay.pick(flags.pca_dim, "pca_dim", d.pca_dim)?,
        seed: overlay.pick(flags.seed, "seed", d.seed)?,
        ..d
    };
    cfg.svm.c = overlay.pick(flags.c, "C", d.svm.c)?;
    cfg.estimator.eta = overlay.pick(flags.eta, "eta", d.estimator.eta)?;
    cfg.estimator.iterations = overlay.pick(flags.t, "T", d.estimator.iterations)?;
    cfg.estimator.kernel_size = overlay.pick(flags.kernel_size, "kernel_size", d.estimator.kernel_size)?;
    cfg.validate()?;
    Ok(cfg)
}

fn framework_from(s: &str) -> Result<FrameworkArg> {
    match s {
        "1" => Ok(FrameworkArg::One),
        "2" => Ok(FrameworkArg::Two),
        _ => Err(CliError::Usage(format!("framework must be 1 or 2, got {s:?}"))),
    }
}

fn required(value: Option<PathBuf>, what: &str) -> Result<PathBuf> {
    value.ok_or_else(|| CliError::Usage(format!("missing --{what} (flag or config key)")))
}

/// Paths in a config file are relative to the file's directory.
fn relative_to(base: &Path, raw: &str) -> PathBuf {
    let p = PathBuf::from(raw);
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

fn config_path(overlay: &Overlay, base: &Path, key: &str) -> Option<PathBuf> {
    overlay.raw(key).map(|v| relative_to(base, v))
}

fn config_dir(path: Option<&Path>) -> PathBuf {
    path.and_then(Path::parent).map(Path::to_path_buf).unwrap_or_default()
}

fn train(args: TrainArgs) -> Result<()> {
    let overlay = Overlay::load(args.config.as_deref(), &keys(TRAIN_KEYS))?;
    let base = config_dir(args.config.as_deref());
    let framework = match args.framework {
        Some(f) => f,
        None => overlay.raw("framework").map(framework_from).transpose()?.unwrap_or(FrameworkArg::One),
    };
    let data = required(args.data.or_else(|| config_path(&overlay, &base, "data")), "data")?;
    let out = required(args.out.or_else(|| config_path(&overlay, &base, "out")), "out")?;
    let categories: Vec<String> = overlay.pick_list(args.categories.as_deref(), "categories", Vec::new())?;
    let per_class = overlay.pick(args.per_class, "per_class", 0usize)?;
    let cfg = model_config(&args.model, &overlay)?;

    let dataset = Dataset::open(&data, &categories)?;
    let mut taken = vec![0usize; dataset.classes.len()];
    let mut images = Vec::new();
    let mut labels = Vec::new();
    for s in &dataset.samples {
        if per_class > 0 && taken[s.label] == per_class {
            continue;
        }
        taken[s.label] += 1;
        images.push(GrayImage::load(&s.path)?);
        labels.push(s.label);
    }
    let system = match framework {
        FrameworkArg::One => train_framework1(&images, &labels, &dataset.classes, &cfg)?,
        FrameworkArg::Two => train_framework2(&images, &labels, &dataset.classes, &cfg)?,
    };
    std::fs::create_dir_all(&out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    let path = out.join(MODEL_FILE);
    system.save(&path)?;

    let support = support_vector_images(&system.svm)?;
    println!(
        "framework={} classes={} images={} patches={} atoms={} sparsity={} support_images={}",
        if framework == FrameworkArg::One { 1 } else { 2 },
        system.classes.len(),
        images.len(),
        system.sharp_codes.num_signals(),
        system.dictionary.num_atoms(),
        cfg.sparsity,
        support.len()
    );
    println!("wrote {}", path.display());
    Ok(())
}

fn kernel(args: KernelArgs) -> Result<()> {
    let k = match args.kind {
        KernelKind::Gaussian => gaussian_kernel(args.size, args.sigma)?,
        KernelKind::Motion => motion_kernel(args.length, args.angle)?,
        KernelKind::Delta => BlurKernel::delta(),
        KernelKind::Load => load_kernel(required(args.file, "file")?)?,
    };
    match args.out {
        Some(p) => k.save(p)?,
        None => print!("{}", k.to_text()),
    }
    Ok(())
}

/// A kernel file if the path exists, else a textual kernel description.
fn kernel_arg(raw: &str) -> Result<BlurKernel> {
    if Path::new(raw).is_file() {
        return Ok(load_kernel(raw)?);
    }
    let spec: KernelSpec = raw
        .parse()
        .map_err(|_| CliError::Usage(format!("{raw:?} is neither a kernel file nor a kernel description")))?;
    Ok(spec.build()?)
}

fn load_model(path: &Path) -> Result<TrainedSystem> {
    // A model directory from `train --out` is accepted as well as the file.
    if path.is_dir() {
        Ok(TrainedSystem::load(&path.join(MODEL_FILE))?)
    } else {
        Ok(TrainedSystem::load(path)?)
    }
}

fn estimate_psf(args: EstimateArgs) -> Result<()> {
    let mut system = load_model(&args.model)?;
    let model = system
        .gradient
        .clone()
        .ok_or_else(|| CliError::Usage("kernel estimation needs a framework 2 model".into()))?;
    let est = &mut system.config.estimator;
    est.eta = args.eta.unwrap_or(est.eta);
    est.iterations = args.t.unwrap_or(est.iterations);
    est.kernel_size = args.kernel_size.unwrap_or(est.kernel_size);
    let image = GrayImage::load(&args.image)?;
    let adapter = Adapter::new(&system)?;
    let result = alternate_minimize(&image, &model, adapter.training(), &system.config.estimator_config())?;
    result.kernel.save(&args.out)?;
    if let Some(p) = &args.objectives {
        let mut csv = String::from("iteration,objective\n");
        for (i, v) in result.per_iteration_objective.iter().enumerate() {
            let _ = writeln!(csv, "{},{v:e}", i + 1);
        }
        std::fs::write(p, csv).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
    }
    println!(
        "kernel={} iterations={} objective={:e}",
        args.out.display(),
        result.per_iteration_objective.len(),
        result.per_iteration_objective.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

fn default_kernel_out(image: &Path) -> PathBuf {
    let mut name = image.file_stem().unwrap_or_default().to_os_string();
    name.push(".kernel.txt");
    image.with_file_name(name)
}

fn classify(args: ClassifyArgs) -> Result<()> {
    let system = load_model(&args.model)?;
    let framework = args.framework.unwrap_or(match system.framework {
        Framework::One => FrameworkArg::One,
        Framework::Two => FrameworkArg::Two,
    });
    let kernel = args.kernel.as_deref().map(kernel_arg).transpose()?;
    if framework == FrameworkArg::One && kernel.is_none() {
        return Err(CliError::Usage("framework 1 needs --kernel".into()));
    }
    let wanted = match framework {
        FrameworkArg::One => Framework::One,
        FrameworkArg::Two => Framework::Two,
    };
    if wanted != system.framework {
        return Err(CliError::Usage(format!(
            "model was trained for framework {}",
            if system.framework == Framework::One { 1 } else { 2 }
        )));
    }
    let image = GrayImage::load(&args.image)?;
    let adapter = Adapter::new(&system)?;
    let prediction = match (framework, kernel) {
        (FrameworkArg::One, Some(k)) => classify_framework1(&adapter, &image, &k)?,
        (FrameworkArg::One, None) => unreachable!("checked above"),
        (FrameworkArg::Two, _) => {
            let (p, k) = classify_framework2(&adapter, &image)?;
            let out = args.kernel_out.unwrap_or_else(|| default_kernel_out(&args.image));
            k.save(&out)?;
            eprintln!("estimated kernel written to {}", out.display());
            p
        }
    };
    println!("label={} score={}", system.classes[prediction.label], prediction.score());
    Ok(())
}

fn experiment(args: ExperimentArgs) -> Result<()> {
    let overlay = Overlay::load(Some(&args.config), &keys(EXPERIMENT_KEYS))?;
    let base = config_dir(Some(&args.config));
    let data = required(args.data.or_else(|| config_path(&overlay, &base, "data")), "data")?;
    let d = ExperimentConfig::new(&data);
    let cfg = ExperimentConfig {
        dataset: data,
        categories: overlay.pick_list(None, "categories", d.categories)?,
        train_per_class: overlay.pick(None, "train_per_class", d.train_per_class)?,
        test_per_class: overlay.pick(None, "test_per_class", d.test_per_class)?,
        kernels: overlay.pick_list(None, "kernels", d.kernels)?,
        methods: overlay.pick_list::<Method>(None, "methods", d.methods)?,
        train: model_config(&args.model, &overlay)?,
        rl_iterations: overlay.pick(None, "rl_iterations", d.rl_iterations)?,
    };
    cfg.validate()?;
    let csv_path = args
        .csv
        .or_else(|| config_path(&overlay, &base, "csv"))
        .unwrap_or_else(|| PathBuf::from("accuracy.csv"));
    let text_path = args.text.or_else(|| config_path(&overlay, &base, "text"));

    let table = run_experiment(&cfg)?;
    let write = |p: &Path, body: String| std::fs::write(p, body).map_err(|e| CliError::Io(format!("{}: {e}", p.display())));
    write(&csv_path, table.to_csv())?;
    let text = table.to_text();
    if let Some(p) = &text_path {
        write(p, text.clone())?;
    }
    print!("{text}");
    Ok(())
}

fn blur(args: BlurArgs) -> Result<()> {
    let k = kernel_arg(&args.kernel)?;
    let boundary = if args.periodic { Boundary::Periodic } else { Boundary::Replicate };
    let image = GrayImage::load(&args.image)?;
    convolve(&image, &k, boundary)?.save(&args.out)?;
    Ok(())
}

fn deblur(args: DeblurArgs) -> Result<()> {
    let k = kernel_arg(&args.kernel)?;
    let image = GrayImage::load(&args.image)?;
    richardson_lucy(&image, &k, args.iterations, Boundary::Replicate)?.save(&args.out)?;
    Ok(())
}
