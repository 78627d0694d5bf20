use super::grid::PatchGrid;
use crate::error::{Error, Result};
use nalgebra::DMatrix;
use std::f64::consts::PI;

pub const SIFT_DIM: usize = 128;

const CELLS: usize = 4;
const BINS: usize = 8;
const CLAMP: f64 = 0.2;

/// Dense SIFT-style descriptor of a square patch.
///
/// Central-difference gradients (replicated border) are accumulated by
/// magnitude into 4x4 spatial cells x 8 orientation bins, with bilinear
/// weights across neighbouring cell centres and linear weights across the
/// two nearest orientation bins (bin `b` centred at `b * 45` degrees). The
/// histogram is L2-normalized, clamped at 0.2 and renormalized. A patch
/// without gradient yields the zero vector.
///
/// Layout: `index = (cell_row * 4 + cell_col) * 8 + bin`.
pub fn sift_descriptor(patch: &[f64]) -> Result<Vec<f64>> {
    let size = (patch.len() as f64).sqrt().round() as usize;
    if size * size != patch.len() || size < 8 {
        return Err(Error::invalid(format!(
            "SIFT needs a square patch of side >= 8, got {} pixels",
            patch.len()
        )));
    }
    let cell = size as f64 / CELLS as f64;
    // per-axis spatial weights for every pixel index, shared by rows and columns
    let spatial: Vec<[(usize, f64); 2]> = (0..size)
        .map(|p| {
            let pos = (p as f64 + 0.5) / cell - 0.5;
            let lo = pos.floor();
            let frac = pos - lo;
            let lo = lo as isize;
            let w = |i: isize, wt: f64| {
                if i >= 0 && (i as usize) < CELLS {
                    (i as usize, wt)
                } else {
                    (0, 0.0)
                }
            };
            [w(lo, 1.0 - frac), w(lo + 1, frac)]
        })
        .collect();

    let at = |r: isize, c: isize| -> f64 {
        let r = r.clamp(0, size as isize - 1) as usize;
        let c = c.clamp(0, size as isize - 1) as usize;
        patch[r * size + c]
    };
    let mut hist = vec![0.0; SIFT_DIM];
    for r in 0..size {
        for c in 0..size {
            let (ri, ci) = (r as isize, c as isize);
            let gx = 0.5 * (at(ri, ci + 1) - at(ri, ci - 1));
            let gy = 0.5 * (at(ri + 1, ci) - at(ri - 1, ci));
            let mag = gx.hypot(gy);
            if mag == 0.0 {
                continue;
            }
            let theta = gy.atan2(gx).rem_euclid(2.0 * PI);
            let pos = theta / (2.0 * PI / BINS as f64);
            let b0 = pos.floor();
            let bf = pos - b0;
            let b0 = b0 as usize % BINS;
            let b1 = (b0 + 1) % BINS;
            for &(cr, wr) in &spatial[r] {
                if wr == 0.0 {
                    continue;
                }
                for &(cc, wc) in &spatial[c] {
                    if wc == 0.0 {
                        continue;
                    }
                    let base = (cr * CELLS + cc) * BINS;
                    let w = mag * wr * wc;
                    hist[base + b0] += w * (1.0 - bf);
                    hist[base + b1] += w * bf;
                }
            }
        }
    }
    normalize_clamped(&mut hist);
    Ok(hist)
}

fn normalize_clamped(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm <= 0.0 {
        return;
    }
    for x in v.iter_mut() {
        *x = (*x / norm).min(CLAMP);
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in v.iter_mut() {
        *x /= norm;
    }
}

/// SIFT descriptors of every patch in the grid, one column per patch.
pub fn sift_descriptors(grid: &PatchGrid) -> Result<DMatrix<f64>> {
    let mut out = DMatrix::zeros(SIFT_DIM, grid.len());
    for (i, p) in grid.patches.iter().enumerate() {
        out.column_mut(i).copy_from_slice(&sift_descriptor(p)?);
    }
    Ok(out)
}
