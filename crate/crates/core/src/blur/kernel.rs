use crate::error::{Error, Result};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::path::{Path, PathBuf};
use std::str::FromStr;

const SUM_TOL: f64 = 1e-9;

/// Nonnegative `h x w` point-spread function with odd sides, summing to 1.
/// The centre cell is the zero-shift position.
#[derive(Debug, Clone, PartialEq)]
pub struct BlurKernel {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl BlurKernel {
    /// Checks the kernel invariants without modifying the weights.
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        check_odd(height, width)?;
        if data.len() != height * width {
            return Err(Error::mismatch("kernel entries", height * width, data.len()));
        }
        if data.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("kernel entries must be finite and nonnegative"));
        }
        let sum: f64 = data.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::invalid(format!("kernel sums to {sum}, expected 1")));
        }
        Ok(BlurKernel {
            height,
            width,
            data,
        })
    }

    /// Clamps negative weights to zero and rescales to unit sum.
    pub fn from_weights(height: usize, width: usize, mut data: Vec<f64>) -> Result<Self> {
        check_odd(height, width)?;
        if data.len() != height * width {
            return Err(Error::mismatch("kernel entries", height * width, data.len()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical("kernel has non-finite weights"));
        }
        for v in &mut data {
            *v = v.max(0.0);
        }
        let sum: f64 = data.iter().sum();
        if sum <= 0.0 {
            return Err(Error::numerical("kernel has no positive mass"));
        }
        for v in &mut data {
            *v /= sum;
        }
        Ok(BlurKernel {
            height,
            width,
            data,
        })
    }

    pub fn delta() -> Self {
        BlurKernel {
            height: 1,
            width: 1,
            data: vec![1.0],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn weights(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c]
    }

    pub fn center(&self) -> (usize, usize) {
        (self.height / 2, self.width / 2)
    }

    /// True when all mass sits in the centre cell.
    pub fn is_delta(&self) -> bool {
        let (cr, cc) = self.center();
        self.get(cr, cc) == 1.0
    }

    /// Mass inside the centre cell.
    pub fn center_mass(&self) -> f64 {
        let (cr, cc) = self.center();
        self.get(cr, cc)
    }

    /// Kernel rotated by 180 degrees (the correlation adjoint).
    pub fn flipped(&self) -> BlurKernel {
        let mut data = self.data.clone();
        data.reverse();
        BlurKernel {
            height: self.height,
            width: self.width,
            data,
        }
    }

    /// Embeds the kernel centred in a larger odd grid.
    pub fn padded(&self, height: usize, width: usize) -> Result<BlurKernel> {
        check_odd(height, width)?;
        if height < self.height || width < self.width {
            return Err(Error::invalid("padding target smaller than kernel"));
        }
        let (dr, dc) = ((height - self.height) / 2, (width - self.width) / 2);
        let mut data = vec![0.0; height * width];
        for r in 0..self.height {
            for c in 0..self.width {
                data[(r + dr) * width + c + dc] = self.get(r, c);
            }
        }
        Ok(BlurKernel {
            height,
            width,
            data,
        })
    }

    /// Stable content hash, used to key per-kernel caches.
    pub fn fingerprint(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.height.hash(&mut h);
        self.width.hash(&mut h);
        for v in &self.data {
            v.to_bits().hash(&mut h);
        }
        h.finish()
    }

    /// Maximum normalized cross-correlation over integer translations.
    ///
    /// Both kernels are embedded in a common zero-padded grid; the score is
    /// the Pearson correlation of the overlapping grids at the best shift,
    /// so it ignores the translation ambiguity of blind estimates.
    pub fn similarity(&self, other: &BlurKernel) -> f64 {
        let h = self.height.max(other.height);
        let w = self.width.max(other.width);
        let a = self.padded(h, w).expect("odd sizes");
        let b = other.padded(h, w).expect("odd sizes");
        let n = (h * w) as f64;
        let mean_a = 1.0 / n;
        let mean_b = 1.0 / n;
        let var_a: f64 = a.data.iter().map(|v| (v - mean_a).powi(2)).sum();
        let var_b: f64 = b.data.iter().map(|v| (v - mean_b).powi(2)).sum();
        if var_a == 0.0 || var_b == 0.0 {
            return if var_a == var_b { 1.0 } else { 0.0 };
        }
        let (hi, wi) = (h as isize, w as isize);
        let mut best = f64::NEG_INFINITY;
        for dr in -(hi - 1)..hi {
            for dc in -(wi - 1)..wi {
                let mut cov = 0.0;
                for r in 0..hi {
                    for c in 0..wi {
                        let (rb, cb) = (r + dr, c + dc);
                        let bv = if rb >= 0 && rb < hi && cb >= 0 && cb < wi {
                            b.data[(rb * wi + cb) as usize]
                        } else {
                            0.0
                        };
                        cov += (a.data[(r * wi + c) as usize] - mean_a) * (bv - mean_b);
                    }
                }
                best = best.max(cov / (var_a * var_b).sqrt());
            }
        }
        best
    }

    /// Whitespace-delimited rows, one line per kernel row; values use the
    /// shortest representation that parses back exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in 0..self.height {
            let row: Vec<String> = (0..self.width).map(|c| format!("{}", self.get(r, c))).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

fn check_odd(height: usize, width: usize) -> Result<()> {
    if height == 0 || width == 0 || height % 2 == 0 || width % 2 == 0 {
        return Err(Error::invalid(format!(
            "kernel sides must be odd, got {height}x{width}"
        )));
    }
    Ok(())
}

/// Sampled isotropic Gaussian centred on the middle cell, normalized to sum 1.
pub fn gaussian_kernel(size: usize, sigma: f64) -> Result<BlurKernel> {
    if size % 2 == 0 {
        return Err(Error::invalid(format!("Gaussian size must be odd, got {size}")));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("Gaussian sigma must be positive, got {sigma}")));
    }
    let c = (size / 2) as f64;
    let mut data = Vec::with_capacity(size * size);
    for r in 0..size {
        for col in 0..size {
            let (y, x) = (r as f64 - c, col as f64 - c);
            data.push((-(x * x + y * y) / (2.0 * sigma * sigma)).exp());
        }
    }
    BlurKernel::from_weights(size, size, data)
}

/// Linear motion blur: `length` unit-spaced samples along a segment through
/// the centre at `angle_degrees` (counter-clockwise from +x, image rows
/// pointing down), each splatted bilinearly onto the grid.
///
/// The side is the smallest odd integer `>= length`. The angle is reduced
/// modulo 180 degrees since the segment is symmetric about the centre.
pub fn motion_kernel(length: usize, angle_degrees: f64) -> Result<BlurKernel> {
    if length == 0 {
        return Err(Error::invalid("motion length must be at least 1"));
    }
    if !angle_degrees.is_finite() {
        return Err(Error::invalid("motion angle must be finite"));
    }
    let side = if length % 2 == 1 { length } else { length + 1 };
    let theta = angle_degrees.rem_euclid(180.0).to_radians();
    let (dx, dy) = (theta.cos(), -theta.sin());
    let center = (side / 2) as f64;
    let half = (length as f64 - 1.0) / 2.0;
    let mut data = vec![0.0; side * side];
    for i in 0..length {
        let t = i as f64 - half;
        // snap to exact grid positions so axis-aligned lines stay crisp
        let x = snap(center + t * dx);
        let y = snap(center + t * dy);
        let (x0, y0) = (x.floor(), y.floor());
        let (fx, fy) = (x - x0, y - y0);
        for (yy, wy) in [(y0, 1.0 - fy), (y0 + 1.0, fy)] {
            for (xx, wx) in [(x0, 1.0 - fx), (x0 + 1.0, fx)] {
                let wgt = wx * wy;
                if wgt == 0.0 {
                    continue;
                }
                let (yi, xi) = (yy as isize, xx as isize);
                if yi >= 0 && xi >= 0 && (yi as usize) < side && (xi as usize) < side {
                    data[yi as usize * side + xi as usize] += wgt;
                }
            }
        }
    }
    BlurKernel::from_weights(side, side, data)
}

fn snap(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() < 1e-9 {
        r
    } else {
        v
    }
}

/// Parses a whitespace-delimited kernel matrix. Negative weights are clamped
/// to zero and the result normalized. Even sides are zero-padded by one to
/// the next odd size, placing the block so its mass centroid lands as close
/// to the centre as possible (ties keep the block at the top/left).
pub fn parse_kernel(text: &str, origin: &Path) -> Result<BlurKernel> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|_| parse_err(n + 1, format!("not a number: {tok:?}")))
                    .and_then(|v| {
                        if v.is_finite() {
                            Ok(v)
                        } else {
                            Err(parse_err(n + 1, format!("non-finite value {tok:?}")))
                        }
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(parse_err(
                    n + 1,
                    format!("ragged row: {} values, expected {}", row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(1, "empty kernel".into()));
    }
    let (h, w) = (rows.len(), rows[0].len());
    let values: Vec<f64> = rows.into_iter().flatten().map(|v| v.max(0.0)).collect();
    let total: f64 = values.iter().sum();
    if total <= 0.0 {
        return Err(parse_err(1, "kernel has no positive mass".into()));
    }
    let (oh, ow) = (h | 1, w | 1);
    let (centroid_r, centroid_c) = {
        let (mut sr, mut sc) = (0.0, 0.0);
        for r in 0..h {
            for c in 0..w {
                sr += r as f64 * values[r * w + c];
                sc += c as f64 * values[r * w + c];
            }
        }
        (sr / total, sc / total)
    };
    let offset = |n: usize, out: usize, centroid: f64| -> usize {
        if n == out {
            return 0;
        }
        let mid = (out / 2) as f64;
        if (centroid + 1.0 - mid).abs() < (centroid - mid).abs() {
            1
        } else {
            0
        }
    };
    let (dr, dc) = (offset(h, oh, centroid_r), offset(w, ow, centroid_c));
    let mut data = vec![0.0; oh * ow];
    for r in 0..h {
        for c in 0..w {
            data[(r + dr) * ow + c + dc] = values[r * w + c];
        }
    }
    // Already-normalized files keep their exact values, so save/load is lossless.
    BlurKernel::new(oh, ow, data.clone()).or_else(|_| BlurKernel::from_weights(oh, ow, data))
}

/// Reads a kernel text file; see [`parse_kernel`].
pub fn load_kernel(path: impl AsRef<Path>) -> Result<BlurKernel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_kernel(&text, path)
}

/// Textual kernel description: `delta`, `gaussian:<size>:<sigma>`,
/// `motion:<length>:<angle>` or `file:<path>`.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    Delta,
    Gaussian { size: usize, sigma: f64 },
    Motion { length: usize, angle: f64 },
    File(PathBuf),
}

impl KernelSpec {
    pub fn build(&self) -> Result<BlurKernel> {
        match self {
            KernelSpec::Delta => Ok(BlurKernel::delta()),
            KernelSpec::Gaussian { size, sigma } => gaussian_kernel(*size, *sigma),
            KernelSpec::Motion { length, angle } => motion_kernel(*length, *angle),
            KernelSpec::File(p) => load_kernel(p),
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Delta => write!(f, "delta"),
            KernelSpec::Gaussian { size, sigma } => write!(f, "gaussian:{size}:{sigma}"),
            KernelSpec::Motion { length, angle } => write!(f, "motion:{length}:{angle}"),
            KernelSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::invalid(format!("bad kernel spec {s:?}"));
        if s == "delta" {
            return Ok(KernelSpec::Delta);
        }
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(KernelSpec::File(PathBuf::from(path)));
        }
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["gaussian", size, sigma] => Ok(KernelSpec::Gaussian {
                size: size.parse().map_err(|_| bad())?,
                sigma: sigma.parse().map_err(|_| bad())?,
            }),
            ["motion", length, angle] => Ok(KernelSpec::Motion {
                length: length.parse().map_err(|_| bad())?,
                angle: angle.parse().map_err(|_| bad())?,
            }),
            _ => Err(bad()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sum(k: &BlurKernel) -> f64 {
        k.weights().iter().sum()
    }

    #[test]
    fn gaussian_9_5() {
        let k = gaussian_kernel(9, 5.0).unwrap();
        assert_eq!((k.height(), k.width()), (9, 9));
        assert!((sum(&k) - 1.0).abs() < 1e-12);
        let max = k.weights().iter().cloned().fold(0.0, f64::max);
        assert_eq!(k.get(4, 4), max);
        for r in 0..9 {
            for c in 0..9 {
                let v = k.get(r, c);
                assert!((v - k.get(8 - r, c)).abs() < 1e-15);
                assert!((v - k.get(r, 8 - c)).abs() < 1e-15);
                assert!((v - k.get(c, r)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn gaussian_edge_cases() {
        assert_eq!(gaussian_kernel(1, 2.0).unwrap(), BlurKernel::delta());
        assert!(gaussian_kernel(4, 1.0).is_err());
        assert!(gaussian_kernel(3, 0.0).is_err());
        let wide = gaussian_kernel(9, 1e6).unwrap();
        let max = wide.weights().iter().cloned().fold(0.0, f64::max);
        let min = wide.weights().iter().cloned().fold(1.0, f64::min);
        assert!(max - min < 1e-9);
    }

    #[test]
    fn motion_kernels() {
        assert_eq!(motion_kernel(1, 30.0).unwrap(), BlurKernel::delta());
        let k = motion_kernel(5, 0.0).unwrap();
        assert_eq!((k.height(), k.width()), (5, 5));
        for c in 0..5 {
            assert!((k.get(2, c) - 0.2).abs() < 1e-15);
        }
        assert!((sum(&k) - 1.0).abs() < 1e-12);
        let diag = motion_kernel(20, 45.0).unwrap();
        assert_eq!(diag.height(), 21);
        assert!((sum(&diag) - 1.0).abs() < 1e-12);
        for r in 0..21 {
            for c in 0..21 {
                if diag.get(r, c) > 0.0 {
                    // up-right diagonal: row offset = -column offset
                    let off = (r as isize - 10) + (c as isize - 10);
                    assert!(off.abs() <= 1, "mass off the diagonal at ({r},{c})");
                }
            }
        }
        assert!(diag.get(3, 17) > 0.0 && diag.get(17, 3) > 0.0);
        assert_eq!(motion_kernel(20, 45.0).unwrap(), motion_kernel(20, 225.0).unwrap());
        assert!(motion_kernel(0, 0.0).is_err());
    }

    #[test]
    fn parse_examples() {
        let origin = Path::new("k.txt");
        assert_eq!(parse_kernel("1\n", origin).unwrap(), BlurKernel::delta());
        let k = parse_kernel("0 1 0\n0 0 0\n0 0 0\n", origin).unwrap();
        assert_eq!(k.get(0, 1), 1.0);
        assert!((sum(&k) - 1.0).abs() < 1e-15);

        let even = parse_kernel("1 1\n1 1\n", origin).unwrap();
        assert_eq!((even.height(), even.width()), (3, 3));
        assert!((sum(&even) - 1.0).abs() < 1e-15);
        assert_eq!(even.get(0, 0), 0.25);

        let shifted = parse_kernel("0 0\n0 1\n", origin).unwrap();
        assert_eq!(shifted.get(1, 1), 1.0);

        let neg = parse_kernel("-1 2 -1\n", origin).unwrap();
        assert_eq!(neg.weights(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn parse_errors_carry_location() {
        let origin = Path::new("bad.txt");
        match parse_kernel("1 2 3\n4 5\n", origin) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match parse_kernel("1 x\n", origin) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("{other:?}"),
        }
        assert!(parse_kernel("0 0\n0 0\n", origin).is_err());
        assert!(load_kernel("/nonexistent/kernel.txt").is_err());
    }

    #[test]
    fn text_round_trip_is_exact() {
        let k = gaussian_kernel(7, 1.3).unwrap();
        let back = parse_kernel(&k.to_text(), Path::new("-")).unwrap();
        for (a, b) in k.weights().iter().zip(back.weights()) {
            assert!((a - b).abs() < 1e-16);
        }
    }

    #[test]
    fn similarity_is_translation_invariant() {
        let k = motion_kernel(9, 30.0).unwrap();
        let mut shifted = vec![0.0; 13 * 13];
        for r in 0..9 {
            for c in 0..9 {
                shifted[(r + 3) * 13 + c + 1] = k.get(r, c);
            }
        }
        let s = BlurKernel::new(13, 13, shifted).unwrap();
        assert!((k.similarity(&s) - 1.0).abs() < 1e-12);
        assert!(k.similarity(&BlurKernel::delta()) < 0.5);
    }

    #[test]
    fn spec_strings() {
        for s in ["delta", "gaussian:9:5", "motion:20:45", "file:/tmp/k.txt"] {
            let spec: KernelSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        assert!("gaussian:9".parse::<KernelSpec>().is_err());
    }
}
