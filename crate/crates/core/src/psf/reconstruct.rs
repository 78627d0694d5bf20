use super::model::GradientModel;
use crate::error::{Error, Result};
use crate::features::GradientField;
use crate::sparse::CodeMatrix;
use nalgebra::DMatrix;

/// Places `[dx; dy]` patch columns at their positions and divides every
/// pixel by the number of patches covering it. Uncovered pixels stay zero.
///
/// Accumulation runs in patch order so the result does not depend on
/// scheduling.
pub fn overlap_average(
    patches: &DMatrix<f64>,
    positions: &[(usize, usize)],
    patch_size: usize,
    shape: (usize, usize),
) -> Result<GradientField> {
    if positions.is_empty() {
        return Err(Error::invalid("cannot reconstruct from an empty grid"));
    }
    let plane = patch_size * patch_size;
    if patches.nrows() != 2 * plane {
        return Err(Error::mismatch("gradient patch length", 2 * plane, patches.nrows()));
    }
    if patches.ncols() != positions.len() {
        return Err(Error::mismatch("gradient patches", positions.len(), patches.ncols()));
    }
    let (h, w) = shape;
    let mut field = GradientField::zeros(h, w);
    let mut count = vec![0u32; h * w];
    for (col, &(r0, c0)) in patches.column_iter().zip(positions) {
        if r0 + patch_size > h || c0 + patch_size > w {
            return Err(Error::invalid(format!("patch at ({r0}, {c0}) leaves the image")));
        }
        for r in 0..patch_size {
            for c in 0..patch_size {
                let idx = (r0 + r) * w + c0 + c;
                field.dx[idx] += col[r * patch_size + c];
                field.dy[idx] += col[plane + r * patch_size + c];
                count[idx] += 1;
            }
        }
    }
    for (idx, &n) in count.iter().enumerate() {
        if n > 1 {
            field.dx[idx] /= n as f64;
            field.dy[idx] /= n as f64;
        }
    }
    Ok(field)
}

/// Latent gradient field from per-patch codes over the sharp gradient
/// dictionary: decode, map back to raw gradients, overlap-average.
pub fn reconstruct_gradients(
    codes: &CodeMatrix,
    model: &GradientModel,
    positions: &[(usize, usize)],
    shape: (usize, usize),
) -> Result<GradientField> {
    if codes.num_signals() != positions.len() {
        return Err(Error::mismatch("codes per patch", positions.len(), codes.num_signals()));
    }
    let working = codes.decode(&model.unit_atoms());
    let raw = model.space.decode_all(&working)?;
    overlap_average(&raw, positions, model.space.patch_size(), shape)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{grid_positions, image_gradients};
    use crate::image::GrayImage;

    fn field_patches(field: &GradientField, pos: &[(usize, usize)], p: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(2 * p * p, pos.len());
        for (i, &(r, c)) in pos.iter().enumerate() {
            m.column_mut(i).copy_from_slice(&field.patch(r, c, p));
        }
        m
    }

    #[test]
    fn tiling_reproduces_field() {
        let img = GrayImage::from_fn(16, 24, |r, c| ((r * 5 + c * 3) % 7) as f64);
        let field = image_gradients(&img);
        let pos = grid_positions(16, 24, 8, 8).unwrap();
        let out = overlap_average(&field_patches(&field, &pos, 8), &pos, 8, (16, 24)).unwrap();
        assert_eq!(out, field);
    }

    #[test]
    fn half_stride_matches_brute_force() {
        let p = 8;
        let pos = grid_positions(24, 24, p, 4).unwrap();
        let patches = DMatrix::from_fn(2 * p * p, pos.len(), |r, c| ((r * 31 + c * 17) % 13) as f64 - 6.0);
        let out = overlap_average(&patches, &pos, p, (24, 24)).unwrap();
        for y in 0..24 {
            for x in 0..24 {
                let (mut sx, mut sy, mut n) = (0.0, 0.0, 0);
                for (i, &(r, c)) in pos.iter().enumerate() {
                    if (r..r + p).contains(&y) && (c..c + p).contains(&x) {
                        let k = (y - r) * p + (x - c);
                        sx += patches[(k, i)];
                        sy += patches[(p * p + k, i)];
                        n += 1;
                    }
                }
                if (8..16).contains(&y) && (8..16).contains(&x) {
                    assert_eq!(n, 4);
                }
                assert!((out.dx[y * 24 + x] - sx / n as f64).abs() < 1e-12);
                assert!((out.dy[y * 24 + x] - sy / n as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn uncovered_pixels_are_zero() {
        let pos = vec![(0, 0)];
        let patches = DMatrix::from_element(8, 1, 1.0);
        let out = overlap_average(&patches, &pos, 2, (3, 3)).unwrap();
        assert_eq!(out.dx[8], 0.0);
        assert_eq!(out.dx[0], 1.0);
        assert!(overlap_average(&patches, &[], 2, (3, 3)).is_err());
    }
}
