//! Synthetic images for tests, demos and desk-scale experiments.
//!
//! Scenes are piecewise-constant compositions of random shapes; corpus
//! categories differ in the kind of shape they are built from.

use crate::image::GrayImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Random piecewise-constant scene of overlapping rectangles, discs and
/// triangles, quantized to the 8-bit grid.
pub fn shapes_scene(height: usize, width: usize, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut img = GrayImage::from_fn(height, width, |_, _| 0.0);
    let bg: f64 = rng.random_range(0.2..0.8);
    img.pixels_mut().iter_mut().for_each(|v| *v = bg);
    let (h, w) = (height as f64, width as f64);
    let count = rng.random_range(10..18);
    for _ in 0..count {
        let level: f64 = rng.random_range(0.0..1.0);
        let cy = rng.random_range(0.0..h);
        let cx = rng.random_range(0.0..w);
        let size = rng.random_range(0.06..0.25) * h.min(w);
        match rng.random_range(0..3) {
            0 => {
                let aspect: f64 = rng.random_range(0.4..2.5);
                let (hh, hw) = (size * aspect.sqrt() / 2.0, size / aspect.sqrt() / 2.0);
                paint(&mut img, level, |y, x| (y - cy).abs() <= hh && (x - cx).abs() <= hw);
            }
            1 => {
                let r = size / 2.0;
                paint(&mut img, level, |y, x| (y - cy).hypot(x - cx) <= r);
            }
            _ => {
                let rot: f64 = rng.random_range(0.0..2.0 * PI);
                let pts: Vec<(f64, f64)> = (0..3)
                    .map(|k| {
                        let a = rot + k as f64 * 2.0 * PI / 3.0 + rng.random_range(-0.4..0.4);
                        (cy + size * a.sin(), cx + size * a.cos())
                    })
                    .collect();
                paint(&mut img, level, |y, x| inside_triangle(&pts, y, x));
            }
        }
    }
    img.quantized()
}

fn paint(img: &mut GrayImage, level: f64, inside: impl Fn(f64, f64) -> bool) {
    for r in 0..img.height() {
        for c in 0..img.width() {
            if inside(r as f64 + 0.5, c as f64 + 0.5) {
                img.set(r, c, level);
            }
        }
    }
}

fn inside_triangle(p: &[(f64, f64)], y: f64, x: f64) -> bool {
    let side = |a: (f64, f64), b: (f64, f64)| (b.1 - a.1) * (y - a.0) - (b.0 - a.0) * (x - a.1);
    let s = [side(p[0], p[1]), side(p[1], p[2]), side(p[2], p[0])];
    s.iter().all(|v| *v >= 0.0) || s.iter().all(|v| *v <= 0.0)
}

/// Category names of [`category_image`], in label order.
pub const CORPUS_CATEGORIES: [&str; 5] = ["lines", "bars", "dots", "discs", "steps"];

/// One random image of corpus category `category` (an index into
/// [`CORPUS_CATEGORIES`]), quantized to the 8-bit grid.
///
/// Categories come in pairs that blur makes alike: thin lines and wide
/// bars, small dots and discs; the last is made of large step edges only.
pub fn category_image(category: usize, height: usize, width: usize, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((category as u64 + 1) << 40));
    let (h, w) = (height as f64, width as f64);
    let bg: f64 = rng.random_range(0.3..0.7);
    let mut img = GrayImage::from_fn(height, width, |_, _| bg);
    let contrast = |rng: &mut ChaCha8Rng| {
        let d: f64 = rng.random_range(0.25..0.3);
        if rng.random_bool(0.5) { bg + d } else { bg - d }
    };
    let stroke = |img: &mut GrayImage, rng: &mut ChaCha8Rng, level: f64, half_width: f64| {
        let theta: f64 = rng.random_range(0.0..PI);
        let (s, c) = theta.sin_cos();
        let (py, px) = (rng.random_range(0.0..h), rng.random_range(0.0..w));
        paint(img, level, |y, x| ((x - px) * s - (y - py) * c).abs() <= half_width);
    };
    match category {
        0 => {
            for _ in 0..rng.random_range(5..9) {
                let level = contrast(&mut rng);
                stroke(&mut img, &mut rng, level, 1.0);
            }
        }
        1 => {
            for _ in 0..rng.random_range(3..6) {
                let level = contrast(&mut rng);
                let hw = rng.random_range(3.5..4.5);
                stroke(&mut img, &mut rng, level, hw);
            }
        }
        2 | 3 => {
            let (count, radius) = if category == 2 { (30..50, 1.5..2.2) } else { (10..18, 5.0..7.0) };
            for _ in 0..rng.random_range(count) {
                let level = contrast(&mut rng);
                let (cy, cx) = (rng.random_range(0.0..h), rng.random_range(0.0..w));
                let r = rng.random_range(radius.clone());
                paint(&mut img, level, |y, x| (y - cy).hypot(x - cx) <= r);
            }
        }
        _ => {
            for _ in 0..rng.random_range(3..6) {
                let level = contrast(&mut rng);
                let (cy, cx) = (rng.random_range(0.0..h), rng.random_range(0.0..w));
                let (hh, hw) = (rng.random_range(15.0..45.0), rng.random_range(15.0..45.0));
                paint(&mut img, level, |y, x| (y - cy).abs() <= hh && (x - cx).abs() <= hw);
            }
        }
    }
    img.quantized()
}

/// Writes `per_class` images of every corpus category as
/// `root/<category>/<index>.pgm`.
pub fn write_corpus(
    root: &std::path::Path,
    per_class: usize,
    size: usize,
    seed: u64,
) -> crate::Result<()> {
    for (k, name) in CORPUS_CATEGORIES.iter().enumerate() {
        let dir = root.join(name);
        std::fs::create_dir_all(&dir).map_err(|e| crate::Error::io(&dir, e))?;
        for i in 0..per_class {
            let img = category_image(k, size, size, seed.wrapping_mul(1_000_003).wrapping_add(i as u64));
            img.save(dir.join(format!("{i:03}.pgm")))?;
        }
    }
    Ok(())
}
