use crate::error::{Error, Result};
use crate::features::PatchGrid;
use crate::sparse::CodeMatrix;

/// Cells in the three-level pyramid: 1 + 4 + 16.
pub const PYRAMID_CELLS: usize = 21;

/// Pooled image feature: [`PYRAMID_CELLS`] blocks of K entries, level 0
/// first, then the 2×2 and 4×4 cells in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpmFeature {
    pub vector: Vec<f64>,
}

impl SpmFeature {
    pub fn num_atoms(&self) -> usize {
        self.vector.len() / PYRAMID_CELLS
    }

    pub fn cell(&self, index: usize) -> &[f64] {
        let k = self.num_atoms();
        &self.vector[index * k..(index + 1) * k]
    }

    /// Unit L2 norm copy; the zero vector is returned unchanged.
    pub fn l2_normalized(&self) -> SpmFeature {
        let norm = self.vector.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return self.clone();
        }
        SpmFeature {
            vector: self.vector.iter().map(|v| v / norm).collect(),
        }
    }
}

/// Index of the level-`level` cell holding pixel `(row, col)` of a
/// `shape` image, counted from the start of the whole pyramid.
pub fn pyramid_cell(level: u32, row: usize, col: usize, shape: (usize, usize)) -> usize {
    let n = 1usize << level;
    let offset = ((1usize << (2 * level)) - 1) / 3;
    let cr = (row * n / shape.0).min(n - 1);
    let cc = (col * n / shape.1).min(n - 1);
    offset + cr * n + cc
}

/// Max-pools `|codes|` over the pyramid cells. A patch belongs to the cell
/// containing its centre pixel; empty cells stay zero.
pub fn spm_pool(codes: &CodeMatrix, grid: &PatchGrid) -> Result<SpmFeature> {
    if codes.num_signals() != grid.len() {
        return Err(Error::mismatch("codes per grid patch", grid.len(), codes.num_signals()));
    }
    let (h, w) = grid.image_shape;
    if h == 0 || w == 0 {
        return Err(Error::invalid("empty image shape"));
    }
    let k = codes.num_atoms();
    let mut vector = vec![0.0; PYRAMID_CELLS * k];
    let half = grid.patch_size / 2;
    for (code, &(r, c)) in codes.codes().iter().zip(&grid.positions) {
        let (cr, cc) = ((r + half).min(h - 1), (c + half).min(w - 1));
        for level in 0..3 {
            let base = pyramid_cell(level, cr, cc, (h, w)) * k;
            for (j, v) in code.iter() {
                let slot = &mut vector[base + j];
                *slot = f64::max(*slot, v.abs());
            }
        }
    }
    Ok(SpmFeature { vector })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::SparseCode;

    fn grid(shape: (usize, usize), p: usize, positions: Vec<(usize, usize)>) -> PatchGrid {
        PatchGrid {
            patch_size: p,
            stride: p,
            image_shape: shape,
            patches: vec![Vec::new(); positions.len()],
            positions,
        }
    }

    #[test]
    fn cell_offsets() {
        assert_eq!(pyramid_cell(0, 5, 5, (8, 8)), 0);
        assert_eq!(pyramid_cell(1, 0, 0, (8, 8)), 1);
        assert_eq!(pyramid_cell(1, 7, 7, (8, 8)), 4);
        assert_eq!(pyramid_cell(2, 0, 0, (8, 8)), 5);
        assert_eq!(pyramid_cell(2, 7, 7, (8, 8)), 20);
        assert_eq!(pyramid_cell(2, 2, 5, (8, 8)), 5 + 4 + 2);
    }

    #[test]
    fn single_patch_lands_in_three_cells() {
        let code = SparseCode::new(3, vec![0, 2], vec![-0.5, 2.0]).unwrap();
        let codes = CodeMatrix::new(3, vec![code]).unwrap();
        let f = spm_pool(&codes, &grid((32, 32), 8, vec![(20, 4)])).unwrap();
        assert_eq!(f.vector.len(), 63);
        // centre (24, 8): level-1 cell (1, 0), level-2 cell (3, 1)
        let hit = [0, 1 + 2, 5 + 13];
        for cell in 0..PYRAMID_CELLS {
            let expect: &[f64] = if hit.contains(&cell) { &[0.5, 0.0, 2.0] } else { &[0.0; 3] };
            assert_eq!(f.cell(cell), expect, "cell {cell}");
        }
    }

    #[test]
    fn order_free_and_scales() {
        let codes: Vec<_> = (0..5)
            .map(|i| SparseCode::new(4, vec![i % 4], vec![i as f64 - 2.0]).unwrap())
            .collect();
        let pos: Vec<_> = (0..5).map(|i| (i * 4, 16 - i * 3)).collect();
        let a = spm_pool(&CodeMatrix::new(4, codes.clone()).unwrap(), &grid((32, 32), 8, pos.clone())).unwrap();
        let mut rc = codes.clone();
        let mut rp = pos.clone();
        rc.reverse();
        rp.reverse();
        let b = spm_pool(&CodeMatrix::new(4, rc).unwrap(), &grid((32, 32), 8, rp)).unwrap();
        assert_eq!(a, b);
        let scaled: Vec<_> = codes
            .iter()
            .map(|c| SparseCode::new(4, c.support().to_vec(), c.values().iter().map(|v| 3.0 * v).collect()).unwrap())
            .collect();
        let s = spm_pool(&CodeMatrix::new(4, scaled).unwrap(), &grid((32, 32), 8, pos)).unwrap();
        for (x, y) in a.vector.iter().zip(&s.vector) {
            assert!((3.0 * x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn misaligned_codes_rejected() {
        let codes = CodeMatrix::new(2, vec![SparseCode::zeros(2)]).unwrap();
        assert!(spm_pool(&codes, &grid((16, 16), 8, vec![])).is_err());
    }
}
