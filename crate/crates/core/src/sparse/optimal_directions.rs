use super::code::CodeMatrix;
use super::dictionary::Dictionary;
use crate::error::{Error, Result};
use nalgebra::{Cholesky, DMatrix, Dyn, SymmetricEigen};

/// Condition number of `A A^T` above which the ridge is applied.
pub const RIDGE_CONDITION_LIMIT: f64 = 1e12;

/// Closed-form dictionary re-fit with the codes held fixed:
/// `D = P A^T (A A^T + eps I)^-1`.
///
/// The Gram matrix depends only on the codes, so it is factored once and
/// reused for every feature matrix solved against the same codes.
#[derive(Debug, Clone)]
pub struct OptimalDirections {
    codes: CodeMatrix,
    factor: Cholesky<f64, Dyn>,
    ridge: f64,
}

impl OptimalDirections {
    pub fn new(codes: CodeMatrix) -> Result<Self> {
        let k = codes.num_atoms();
        if codes.codes().iter().all(|c| c.values().iter().all(|v| *v == 0.0)) {
            return Err(Error::invalid("optimal-directions solve needs nonzero codes"));
        }
        let mut gram = DMatrix::<f64>::zeros(k, k);
        for c in codes.codes() {
            for (a, va) in c.iter() {
                for (b, vb) in c.iter() {
                    gram[(a, b)] += va * vb;
                }
            }
        }
        let eig = SymmetricEigen::new(gram.clone()).eigenvalues;
        let max = eig.max();
        let min = eig.min();
        let singular = min <= 0.0 || max / min > RIDGE_CONDITION_LIMIT;
        let ridge = if singular { 1e-8 * gram.trace() / k as f64 } else { 0.0 };
        if ridge > 0.0 {
            log::debug!("code Gram matrix near singular (cond {:.3e}); ridge {ridge:.3e}", max / min);
            for j in 0..k {
                gram[(j, j)] += ridge;
            }
        }
        let factor = Cholesky::new(gram)
            .ok_or_else(|| Error::numerical("code Gram matrix is not positive definite"))?;
        Ok(OptimalDirections {
            codes,
            factor,
            ridge,
        })
    }

    /// Ridge added to the Gram diagonal (zero when the Gram was well conditioned).
    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn codes(&self) -> &CodeMatrix {
        &self.codes
    }

    /// Least-squares dictionary for `features` (one column per code). The
    /// result is not normalized.
    pub fn solve(&self, features: &DMatrix<f64>) -> Result<Dictionary> {
        let n = self.codes.num_signals();
        if features.ncols() != n {
            return Err(Error::mismatch("optimal-directions signals", n, features.ncols()));
        }
        let k = self.codes.num_atoms();
        // P A^T, accumulated from the sparse codes
        let mut cross = DMatrix::<f64>::zeros(features.nrows(), k);
        for (i, c) in self.codes.codes().iter().enumerate() {
            let p = features.column(i);
            for (j, v) in c.iter() {
                cross.column_mut(j).axpy(v, &p, 1.0);
            }
        }
        let atoms_t = self.factor.solve(&cross.transpose());
        Dictionary::new(atoms_t.transpose())
    }
}

/// One-shot form of [`OptimalDirections`].
pub fn mod_solve(features: &DMatrix<f64>, codes: &CodeMatrix) -> Result<Dictionary> {
    OptimalDirections::new(codes.clone())?.solve(features)
}
