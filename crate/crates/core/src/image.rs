//! Grayscale images with real-valued pixels and PGM/PNG I/O.

use crate::error::{Error, Result};
use std::path::Path;

/// Row-major `height x width` image, pixels nominally in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::invalid("image must be at least 1x1"));
        }
        if data.len() != height * width {
            return Err(Error::mismatch("image pixels", height * width, data.len()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("image has non-finite pixels"));
        }
        Ok(GrayImage {
            height,
            width,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        GrayImage {
            height,
            width,
            data: vec![0.0; height * width],
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        GrayImage {
            height,
            width,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.width + c] = v;
    }

    /// Pixel with coordinates clamped into the image.
    #[inline]
    pub fn get_clamped(&self, r: isize, c: isize) -> f64 {
        let r = r.clamp(0, self.height as isize - 1) as usize;
        let c = c.clamp(0, self.width as isize - 1) as usize;
        self.get(r, c)
    }

    pub fn pixels(&self) -> &[f64] {
        &self.data
    }

    pub fn pixels_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.data
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GrayImage {
        GrayImage {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Square block of `size x size` pixels with top-left `(row, col)`, row-major.
    pub fn block(&self, row: usize, col: usize, size: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(size * size);
        for r in row..row + size {
            out.extend_from_slice(&self.data[r * self.width + col..r * self.width + col + size]);
        }
        out
    }

    pub fn mse(&self, other: &GrayImage) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / self.data.len() as f64
    }

    /// Rounds pixels to the 8-bit grid (`k / 255`) after clamping to `[0, 1]`.
    pub fn quantized(&self) -> GrayImage {
        self.map(|v| (v.clamp(0.0, 1.0) * 255.0).round() / 255.0)
    }

    /// Loads a PGM/PNG (or any supported) image. Colour inputs are converted
    /// with `0.299 R + 0.587 G + 0.114 B`; values are scaled to `[0, 1]`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let img = ::image::ImageReader::open(path)
            .map_err(|e| Error::io(path, e))?
            .with_guessed_format()
            .map_err(|e| Error::io(path, e))?
            .decode()
            .map_err(|e| Error::Image {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
        let (w, h) = (img.width() as usize, img.height() as usize);
        let data: Vec<f64> = match img {
            ::image::DynamicImage::ImageLuma8(g) => {
                g.into_raw().into_iter().map(|v| v as f64 / 255.0).collect()
            }
            ::image::DynamicImage::ImageLuma16(g) => {
                g.into_raw().into_iter().map(|v| v as f64 / 65535.0).collect()
            }
            other => other
                .to_rgb8()
                .pixels()
                .map(|p| (0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64) / 255.0)
                .collect(),
        };
        GrayImage::new(h, w, data)
    }

    /// Writes an 8-bit image; binary P5 PGM unless the extension is `.png`.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let bytes: Vec<u8> = self
            .data
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        let is_png = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("png"));
        if is_png {
            ::image::save_buffer(
                path,
                &bytes,
                self.width as u32,
                self.height as u32,
                ::image::ExtendedColorType::L8,
            )
            .map_err(|e| Error::Image {
                path: path.to_path_buf(),
                message: e.to_string(),
            })
        } else {
            let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
            out.extend_from_slice(&bytes);
            std::fs::write(path, out).map_err(|e| Error::io(path, e))
        }
    }
}
