use super::code::{CodeMatrix, SparseCode};
use super::dictionary::Dictionary;
use crate::error::{Error, Result};
use nalgebra::{Cholesky, DMatrix, DVector};
use rayon::prelude::*;

/// OMP stops once the residual norm drops below this.
pub const OMP_RESIDUAL_TOL: f64 = 1e-10;

/// Orthogonal matching pursuit over a fixed unit-norm dictionary.
///
/// The atom Gram matrix is computed once so that each greedy step only
/// updates correlations (`D^T r = D^T x - G[:, S] c`) instead of touching the
/// full dictionary.
#[derive(Debug, Clone)]
pub struct OmpEncoder<'a> {
    dict: &'a Dictionary,
    gram: DMatrix<f64>,
    sparsity: usize,
}

impl<'a> OmpEncoder<'a> {
    pub fn new(dict: &'a Dictionary, sparsity: usize) -> Result<Self> {
        if !dict.is_unit_norm() {
            return Err(Error::invalid("OMP requires a unit-norm dictionary"));
        }
        let max = dict.dim().min(dict.num_atoms());
        if sparsity == 0 || sparsity > max {
            return Err(Error::invalid(format!(
                "sparsity {sparsity} outside 1..={max}"
            )));
        }
        let atoms = dict.atoms();
        Ok(OmpEncoder {
            dict,
            gram: atoms.tr_mul(atoms),
            sparsity,
        })
    }

    pub fn sparsity(&self) -> usize {
        self.sparsity
    }

    pub fn encode(&self, signal: &[f64]) -> Result<SparseCode> {
        let atoms = self.dict.atoms();
        if signal.len() != atoms.nrows() {
            return Err(Error::mismatch("OMP signal", atoms.nrows(), signal.len()));
        }
        let x = DVector::from_column_slice(signal);
        let k = atoms.ncols();
        if x.norm() < OMP_RESIDUAL_TOL {
            return Ok(SparseCode::zeros(k));
        }
        let proj = atoms.tr_mul(&x);
        let mut corr = proj.clone();
        let mut support: Vec<usize> = Vec::with_capacity(self.sparsity);
        let mut coef = DVector::zeros(0);

        while support.len() < self.sparsity {
            let mut best = None;
            let mut best_abs = 0.0;
            for (j, c) in corr.iter().enumerate() {
                let a = c.abs();
                if a > best_abs && !support.contains(&j) {
                    best_abs = a;
                    best = Some(j);
                }
            }
            let Some(j) = best else { break };
            support.push(j);
            let s = support.len();
            let sub = DMatrix::from_fn(s, s, |r, c| self.gram[(support[r], support[c])]);
            let Some(chol) = Cholesky::new(sub) else {
                // selected atom is linearly dependent on the current support
                support.pop();
                break;
            };
            let rhs = DVector::from_fn(s, |r, _| proj[support[r]]);
            coef = chol.solve(&rhs);

            let mut residual = x.clone();
            for (n, &a) in support.iter().enumerate() {
                residual.axpy(-coef[n], &atoms.column(a), 1.0);
            }
            if residual.norm() < OMP_RESIDUAL_TOL {
                break;
            }
            corr.copy_from(&proj);
            for (n, &a) in support.iter().enumerate() {
                corr.axpy(-coef[n], &self.gram.column(a), 1.0);
            }
        }
        let values = coef.iter().copied().collect();
        SparseCode::new(k, support, values)
    }

    /// Encodes every column of `signals`; output order matches input order.
    pub fn encode_all(&self, signals: &DMatrix<f64>) -> Result<CodeMatrix> {
        let codes = (0..signals.ncols())
            .into_par_iter()
            .map(|i| self.encode(signals.column(i).as_slice()))
            .collect::<Result<Vec<_>>>()?;
        CodeMatrix::new(self.dict.num_atoms(), codes)
    }
}

/// Greedy `L`-sparse code of one signal over a unit-norm dictionary.
pub fn omp_encode(signal: &[f64], dict: &Dictionary, sparsity: usize) -> Result<SparseCode> {
    OmpEncoder::new(dict, sparsity)?.encode(signal)
}
