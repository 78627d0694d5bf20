//! Slow, direct reference solvers. Each one answers the same question as a
//! routine in `adct` by a different route (enumeration, dense matrices,
//! explicit boundaries), so agreement is evidence rather than tautology.

use nalgebra::{DMatrix, DVector};

/// Largest `|<a_i, a_j>| / (|a_i| |a_j|)` over distinct columns.
pub fn mutual_coherence(atoms: &DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..atoms.ncols() {
        for j in i + 1..atoms.ncols() {
            let (a, b) = (atoms.column(i), atoms.column(j));
            worst = worst.max(a.dot(&b).abs() / (a.norm() * b.norm()));
        }
    }
    worst
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if n < k {
        return Vec::new();
    }
    let mut out = combinations(n - 1, k);
    for mut c in combinations(n - 1, k - 1) {
        c.push(n - 1);
        out.push(c);
    }
    out
}

/// Residual norm of the least-squares fit of `signal` on the chosen columns.
pub fn subset_residual(atoms: &DMatrix<f64>, signal: &DVector<f64>, support: &[usize]) -> f64 {
    if support.is_empty() {
        return signal.norm();
    }
    let sub = atoms.select_columns(support);
    let coef = sub
        .clone()
        .svd(true, true)
        .solve(signal, 1e-14)
        .expect("svd solve");
    (signal - sub * coef).norm()
}

/// Best `sparsity`-column support by enumerating every subset; returns the
/// residual norm and the (sorted) support.
pub fn best_subset(atoms: &DMatrix<f64>, signal: &DVector<f64>, sparsity: usize) -> (f64, Vec<usize>) {
    combinations(atoms.ncols(), sparsity.min(atoms.ncols()))
        .into_iter()
        .map(|s| (subset_residual(atoms, signal, &s), s))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("at least one subset")
}

/// `argmin_D ||X - D A||_F` via the pseudo-inverse of `A^T` (SVD), with
/// `codes` given densely as K×N.
pub fn least_squares_dictionary(signals: &DMatrix<f64>, codes: &DMatrix<f64>) -> DMatrix<f64> {
    codes
        .transpose()
        .svd(true, true)
        .solve(&signals.transpose(), 1e-14)
        .expect("svd solve")
        .transpose()
}

/// Max-pooled `|codes|` over a 1 + 4 + 16 pyramid, level by level with cells
/// row-major. Cell `(i, j)` of an `n×n` level owns pixel rows
/// `ceil(i h / n) .. ceil((i+1) h / n)` and likewise for columns; a patch
/// is counted where its centre pixel `(r + p/2, c + p/2)` lies, pulled
/// inside the image if needed. `codes` is K×N dense.
pub fn pool_by_enumeration(
    codes: &DMatrix<f64>,
    positions: &[(usize, usize)],
    patch_size: usize,
    shape: (usize, usize),
) -> Vec<f64> {
    let k = codes.nrows();
    let (h, w) = shape;
    let bound = |i: usize, n: usize, len: usize| (i * len).div_ceil(n);
    let mut out = Vec::new();
    for n in [1usize, 2, 4] {
        for i in 0..n {
            for j in 0..n {
                let mut cell = vec![0.0f64; k];
                for (p, &(r, c)) in positions.iter().enumerate() {
                    let cr = (r + patch_size / 2).min(h - 1);
                    let cc = (c + patch_size / 2).min(w - 1);
                    let inside = (bound(i, n, h)..bound(i + 1, n, h)).contains(&cr)
                        && (bound(j, n, w)..bound(j + 1, n, w)).contains(&cc);
                    if inside {
                        for (a, slot) in cell.iter_mut().enumerate() {
                            *slot = slot.max(codes[(a, p)].abs());
                        }
                    }
                }
                out.extend(cell);
            }
        }
    }
    out
}

/// Dense matrix of periodic convolution with `x` (an h×w field, row-major)
/// acting on a row-major h×w kernel: `(k * x)[r, c] = sum k[i, j] x[r-i, c-j]`.
pub fn circulant(x: &[f64], h: usize, w: usize) -> DMatrix<f64> {
    let n = h * w;
    DMatrix::from_fn(n, n, |p, q| {
        let (r, c) = (p / w, p % w);
        let (i, j) = (q / w, q % w);
        x[((r + h - i) % h) * w + (c + w - j) % w]
    })
}

/// Full-grid minimizer of `sum_d ||b_d - k * x_d||^2 + eta ||k||^2` for
/// periodic convolution, from the dense normal equations.
pub fn spatial_kernel_solve(b: [&[f64]; 2], x: [&[f64]; 2], h: usize, w: usize, eta: f64) -> Vec<f64> {
    let n = h * w;
    let mut lhs = DMatrix::identity(n, n) * eta;
    let mut rhs = DVector::zeros(n);
    for d in 0..2 {
        let a = circulant(x[d], h, w);
        lhs += a.transpose() * &a;
        rhs += a.transpose() * DVector::from_column_slice(b[d]);
    }
    lhs.cholesky().expect("normal matrix is positive definite").solve(&rhs).as_slice().to_vec()
}

/// Pairs every true atom with a distinct learned atom, repeatedly taking the
/// remaining pair of largest `|correlation|`. Returns one correlation per
/// true atom (0 when learned atoms run out).
pub fn match_atoms(truth: &DMatrix<f64>, learned: &DMatrix<f64>) -> Vec<f64> {
    let mut pairs = Vec::new();
    for t in 0..truth.ncols() {
        for l in 0..learned.ncols() {
            let (a, b) = (truth.column(t), learned.column(l));
            let denom = a.norm() * b.norm();
            let corr = if denom > 0.0 { a.dot(&b).abs() / denom } else { 0.0 };
            pairs.push((corr, t, l));
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut result = vec![0.0; truth.ncols()];
    let (mut used_t, mut used_l) = (vec![false; truth.ncols()], vec![false; learned.ncols()]);
    for (corr, t, l) in pairs {
        if !used_t[t] && !used_l[l] {
            used_t[t] = true;
            used_l[l] = true;
            result[t] = corr;
        }
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combinations_count() {
        assert_eq!(combinations(12, 2).len(), 66);
        assert_eq!(combinations(5, 5), vec![vec![0, 1, 2, 3, 4]]);
        assert!(combinations(2, 3).is_empty());
    }

    #[test]
    fn best_subset_finds_exact_support() {
        let atoms = DMatrix::from_column_slice(3, 4, &[1., 0., 0., 0., 1., 0., 0., 0., 1., 1., 1., 0.]);
        let signal = DVector::from_column_slice(&[2.0, 0.0, -1.0]);
        let (res, support) = best_subset(&atoms, &signal, 2);
        assert!(res < 1e-12);
        assert_eq!(support, vec![0, 2]);
        assert!((subset_residual(&atoms, &signal, &[1]) - 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn least_squares_dictionary_reproduces_exact_data() {
        let d = DMatrix::from_fn(3, 2, |r, c| (r * 2 + c) as f64 - 1.5);
        let a = DMatrix::from_fn(2, 5, |r, c| ((r + 1) * (c + 2) % 5) as f64);
        let got = least_squares_dictionary(&(&d * &a), &a);
        assert!((got - d).norm() < 1e-12);
    }

    #[test]
    fn pooling_by_enumeration_on_a_single_patch() {
        // 10x10 image, 4x4 patch at (6, 0): centre (8, 2) is in the
        // bottom-left 2x2 cell and 4x4 cell (3, 0).
        let codes = DMatrix::from_column_slice(2, 1, &[-3.0, 0.5]);
        let v = pool_by_enumeration(&codes, &[(6, 0)], 4, (10, 10));
        assert_eq!(v.len(), 42);
        let hot: Vec<usize> = (0..21).filter(|&c| v[2 * c] != 0.0).collect();
        assert_eq!(hot, vec![0, 1 + 2, 5 + 12]);
        assert_eq!(&v[0..2], &[3.0, 0.5]);
    }

    #[test]
    fn circulant_matches_direct_sum() {
        let (h, w) = (3, 4);
        let x: Vec<f64> = (0..12).map(|v| (v * v % 7) as f64).collect();
        let k: Vec<f64> = (0..12).map(|v| (v % 3) as f64 - 1.0).collect();
        let y = circulant(&x, h, w) * DVector::from_column_slice(&k);
        for r in 0..h {
            for c in 0..w {
                let mut s = 0.0;
                for i in 0..h {
                    for j in 0..w {
                        s += k[i * w + j] * x[((r + h - i) % h) * w + (c + w - j) % w];
                    }
                }
                assert!((y[r * w + c] - s).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn spatial_solve_with_delta_field() {
        let (h, w) = (4, 4);
        let mut delta = vec![0.0; 16];
        delta[0] = 1.0;
        let bx: Vec<f64> = (0..16).map(|v| v as f64).collect();
        let by: Vec<f64> = (0..16).map(|v| 1.0 - v as f64 * 0.5).collect();
        let k = spatial_kernel_solve([&bx, &by], [&delta, &delta], h, w, 2.0);
        for i in 0..16 {
            assert!((k[i] - (bx[i] + by[i]) / 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn matching_handles_permutation_and_sign() {
        let truth = DMatrix::<f64>::identity(3, 3);
        let learned = DMatrix::from_column_slice(3, 4, &[0., 0., -1., 1., 0., 0., 0., 0.6, 0.8, 0., 0.8, 0.6]);
        let m = match_atoms(&truth, &learned);
        assert_eq!(m[0], 1.0);
        assert!((m[1] - 0.8).abs() < 1e-12);
        assert_eq!(m[2], 1.0);
        assert!((mutual_coherence(&learned) - 0.96).abs() < 1e-12);
    }
}
