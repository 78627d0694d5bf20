use adct::blur::{gaussian_kernel, load_kernel};
use adct::image::GrayImage;
use adct::pipeline::{classify_sharp, Framework, TrainedSystem};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

fn adct(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adct")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn toy_corpus(dir: &Path) -> PathBuf {
    let root = dir.join("toy");
    adct::synth::write_corpus(&root, 4, 64, 11).unwrap();
    root
}

const SMALL: &[&str] = &["--K", "24", "--ksvd-iterations", "3", "--categories", "lines,discs"];

fn train(dir: &Path, framework: &str) -> PathBuf {
    let data = toy_corpus(dir);
    let out = dir.join(format!("model{framework}"));
    let mut args = vec!["train", "--framework", framework, "--data", s(&data), "--out", s(&out)];
    args.extend_from_slice(SMALL);
    let o = adct(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains(&format!("framework={framework} classes=2 images=8")), "{}", stdout(&o));
    out
}

fn parse_label(out: &Output) -> String {
    let line = stdout(out);
    let line = line.lines().find(|l| l.starts_with("label=")).expect("label line");
    let mut parts = line.split(' ');
    let label = parts.next().unwrap().trim_start_matches("label=").to_string();
    let score: f64 = parts.next().unwrap().trim_start_matches("score=").parse().unwrap();
    assert!(score.is_finite());
    label
}

#[test]
fn gaussian_kernel_file_reloads_normalized() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("k.txt");
    assert_eq!(code(&adct(&["kernel", "gaussian", "--size", "9", "--sigma", "5", "--out", s(&p)])), 0);
    let k = load_kernel(&p).unwrap();
    assert_eq!((k.height(), k.width()), (9, 9));
    assert!((k.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert_eq!(k, gaussian_kernel(9, 5.0).unwrap());
}

#[test]
fn unit_motion_is_delta_and_bad_parameters_exit_2() {
    let o = adct(&["kernel", "motion", "--len", "1", "--angle", "-30"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "1");
    assert_eq!(code(&adct(&["kernel", "gaussian", "--size", "8"])), 2);
    assert_eq!(code(&adct(&["kernel", "motion", "--len", "0"])), 2);
    assert_eq!(code(&adct(&["kernel", "load"])), 2);
}

#[test]
fn loaded_text_kernel_reserializes_up_to_normalization() {
    let dir = TempDir::new().unwrap();
    let src = dir.path().join("levin.txt");
    std::fs::write(&src, "0 1 0\n2 4 2\n0 1 0\n").unwrap();
    let o = adct(&["kernel", "load", "--file", s(&src)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows: Vec<Vec<f64>> = stdout(&o)
        .lines()
        .map(|l| l.split_whitespace().map(|v| v.parse().unwrap()).collect())
        .collect();
    let expect = [[0.0, 0.1, 0.0], [0.2, 0.4, 0.2], [0.0, 0.1, 0.0]];
    for (r, row) in rows.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            assert!((v - expect[r][c]).abs() < 1e-15);
        }
    }
}

#[test]
fn train_writes_model_with_requested_shapes() {
    let dir = TempDir::new().unwrap();
    let data = toy_corpus(dir.path());
    let out = dir.path().join("m");
    let o = adct(&[
        "train", "--data", s(&data), "--out", s(&out), "--K", "20", "--L", "3", "--ksvd-iterations", "2",
        "--per-class", "2",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let sys = TrainedSystem::load(&out.join("model.adct")).unwrap();
    assert_eq!(sys.framework, Framework::One);
    assert_eq!(sys.dictionary.num_atoms(), 20);
    assert_eq!(sys.config.sparsity, 3);
    assert_eq!(sys.classes.len(), 5);
    assert_eq!(sys.images.len(), 10);
    assert!(sys.sharp_codes.codes().iter().all(|c| c.nnz() <= 3));
}

#[test]
fn train_errors_map_to_exit_codes() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nowhere");
    let o = adct(&["train", "--data", s(&missing), "--out", s(dir.path())]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains(s(&missing)), "{}", stderr(&o));

    let data = toy_corpus(dir.path());
    assert_eq!(code(&adct(&["train", "--data", s(&data), "--out", s(dir.path()), "--K", "0"])), 2);
    assert_eq!(code(&adct(&["train", "--out", s(dir.path())])), 2);
    assert_eq!(code(&adct(&["train", "--framework", "3"])), 2);

    let cfg = dir.path().join("t.cfg");
    std::fs::write(&cfg, "data = toy\nwidth = 3\n").unwrap();
    let o = adct(&["train", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("width"), "{}", stderr(&o));
}

#[test]
fn config_file_supplies_settings_and_flags_override() {
    let dir = TempDir::new().unwrap();
    toy_corpus(dir.path());
    let cfg = dir.path().join("t.cfg");
    std::fs::write(&cfg, "# toy\ndata = toy\nout = model\nK = 40\nL = 2\nksvd_iterations = 2\nper_class = 2\n").unwrap();
    let o = adct(&["train", "--config", s(&cfg), "--K", "12"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let sys = TrainedSystem::load(&dir.path().join("model/model.adct")).unwrap();
    assert_eq!(sys.dictionary.num_atoms(), 12);
    assert_eq!(sys.config.sparsity, 2);
    assert_eq!(sys.config.seed, 42);
}

#[test]
fn classify_framework1_needs_kernel_and_matches_sharp_with_delta() {
    let dir = TempDir::new().unwrap();
    let model = train(dir.path(), "1");
    let image = dir.path().join("toy/discs/001.pgm");
    let o = adct(&["classify", "--model", s(&model), "--image", s(&image)]);
    assert_eq!(code(&o), 2);

    let o = adct(&["classify", "--model", s(&model), "--image", s(&image), "--kernel", "delta"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let sys = TrainedSystem::load(&model.join("model.adct")).unwrap();
    let sharp = classify_sharp(&sys, &GrayImage::load(&image).unwrap()).unwrap();
    assert_eq!(parse_label(&o), sys.classes[sharp.label]);

    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "0.1 0.2 0.1\n0.2 oops 0.2\n0.1 0.2 0.1\n").unwrap();
    let o = adct(&["classify", "--model", s(&model), "--image", s(&image), "--kernel", s(&bad)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains(&format!("{}:2", s(&bad))), "{}", stderr(&o));

    let o = adct(&["classify", "--model", s(&model), "--image", s(&image), "--framework", "2"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn framework2_classify_and_estimate_write_kernels() {
    let dir = TempDir::new().unwrap();
    let model = train(dir.path(), "2");
    let image = dir.path().join("toy/lines/000.pgm");
    let kout = dir.path().join("est.txt");
    let o = adct(&["classify", "--model", s(&model), "--image", s(&image), "--kernel-out", s(&kout)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(["lines", "discs"].contains(&parse_label(&o).as_str()));
    let k = load_kernel(&kout).unwrap();
    assert!((k.weights().iter().sum::<f64>() - 1.0).abs() < 1e-9);

    let blurred = dir.path().join("blurred.pgm");
    assert_eq!(code(&adct(&["blur", "--image", s(&image), "--kernel", "gaussian:9:5", "--out", s(&blurred)])), 0);
    let (kpath, objectives) = (dir.path().join("psf.txt"), dir.path().join("obj.csv"));
    let o = adct(&[
        "estimate-psf", "--model", s(&model), "--image", s(&blurred), "--out", s(&kpath), "--objectives",
        s(&objectives), "--T", "3", "--kernel-size", "15",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let k = load_kernel(&kpath).unwrap();
    assert_eq!(k.height(), 15);
    let csv = std::fs::read_to_string(&objectives).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "iteration,objective");
    assert_eq!(lines.len(), 4);
    for (i, l) in lines[1..].iter().enumerate() {
        let (n, v) = l.split_once(',').unwrap();
        assert_eq!(n.parse::<usize>().unwrap(), i + 1);
        assert!(v.parse::<f64>().unwrap() >= 0.0);
    }

    let fw1 = train(&dir.path().join("one"), "1");
    assert_eq!(code(&adct(&["estimate-psf", "--model", s(&fw1), "--image", s(&blurred), "--out", s(&kpath)])), 2);
}

fn write_experiment(dir: &Path, methods: &str) -> PathBuf {
    toy_corpus(dir);
    let cfg = dir.join("exp.cfg");
    std::fs::write(
        &cfg,
        format!(
            "data = toy\ncategories = lines,steps\ntrain_per_class = 2\ntest_per_class = 2\n\
             kernels = gaussian:9:5\nmethods = {methods}\nK = 24\nksvd_iterations = 3\nseed = 5\n"
        ),
    )
    .unwrap();
    cfg
}

#[test]
fn experiment_writes_csv_and_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let cfg = write_experiment(dir.path(), "sharp_dict, framework1");
    let (a, b, text) = (dir.path().join("a.csv"), dir.path().join("b.csv"), dir.path().join("t.txt"));
    let o = adct(&["experiment", s(&cfg), "--csv", s(&a), "--text", s(&text)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(code(&adct(&["experiment", s(&cfg), "--csv", s(&b)])), 0);
    let csv = std::fs::read(&a).unwrap();
    assert_eq!(csv, std::fs::read(&b).unwrap());
    let csv = String::from_utf8(csv).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0], "kernel,method,accuracy,n_test");
    assert!(lines[1].starts_with("none,sharp,"));
    assert!(lines[2].starts_with("gaussian:9:5,sharp_dict,"));
    assert!(lines[3].starts_with("gaussian:9:5,framework1,"));
    assert_eq!(std::fs::read_to_string(&text).unwrap(), stdout(&o));
}

#[test]
fn experiment_with_no_methods_or_bad_keys_exits_2() {
    let dir = TempDir::new().unwrap();
    let cfg = write_experiment(dir.path(), "");
    assert_eq!(code(&adct(&["experiment", s(&cfg)])), 2);
    let cfg = write_experiment(dir.path(), "framework3");
    assert_eq!(code(&adct(&["experiment", s(&cfg)])), 2);
    assert_eq!(code(&adct(&["experiment", s(&dir.path().join("none.cfg"))])), 1);
}

#[test]
fn blur_and_deblur_keep_shape() {
    let dir = TempDir::new().unwrap();
    let data = toy_corpus(dir.path());
    let image = data.join("bars/000.pgm");
    let (b, d) = (dir.path().join("b.png"), dir.path().join("d.pgm"));
    assert_eq!(code(&adct(&["blur", "--image", s(&image), "--kernel", "motion:9:30", "--out", s(&b), "--periodic"])), 0);
    assert_eq!(code(&adct(&["deblur", "--image", s(&b), "--kernel", "motion:9:30", "--out", s(&d), "--iterations", "5"])), 0);
    assert_eq!(GrayImage::load(&d).unwrap().shape(), (64, 64));
    assert_eq!(code(&adct(&["blur", "--image", s(&image), "--kernel", "blob", "--out", s(&b)])), 2);
    assert_eq!(code(&adct(&["deblur", "--image", s(&dir.path().join("x.pgm")), "--kernel", "delta", "--out", s(&d)])), 1);
}

#[test]
fn every_subcommand_has_help_and_rejects_unknown_flags() {
    for (sub, flag) in [
        ("train", "--framework"),
        ("kernel", "--sigma"),
        ("estimate-psf", "--objectives"),
        ("classify", "--kernel-out"),
        ("experiment", "--csv"),
        ("blur", "--periodic"),
        ("deblur", "--iterations"),
    ] {
        let o = adct(&[sub, "--help"]);
        assert_eq!(code(&o), 0);
        assert!(stdout(&o).contains(flag), "{sub}");
        assert_eq!(code(&adct(&[sub, "--no-such-flag"])), 2, "{sub}");
    }
}

#[test]
fn thread_cap_must_be_positive() {
    let run = |v: &str| {
        Command::new(env!("CARGO_BIN_EXE_adct"))
            .args(["kernel", "delta"])
            .env("ADCT_THREADS", v)
            .output()
            .unwrap()
    };
    assert_eq!(code(&run("0")), 2);
    assert_eq!(code(&run("two")), 2);
    assert_eq!(code(&run("1")), 0);
}
