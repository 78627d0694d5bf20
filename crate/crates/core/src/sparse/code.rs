use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// A `K`-slot coefficient vector with an explicit support.
///
/// Only support entries are stored; every other coefficient is exactly zero.
/// `support` keeps the order in which atoms were selected.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCode {
    len: usize,
    support: Vec<usize>,
    values: Vec<f64>,
}

impl SparseCode {
    pub fn zeros(len: usize) -> Self {
        SparseCode {
            len,
            support: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn new(len: usize, support: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if support.len() != values.len() {
            return Err(Error::mismatch("sparse code values", support.len(), values.len()));
        }
        for (n, &j) in support.iter().enumerate() {
            if j >= len {
                return Err(Error::invalid(format!("support index {j} out of range {len}")));
            }
            if support[..n].contains(&j) {
                return Err(Error::invalid(format!("duplicate support index {j}")));
            }
        }
        Ok(SparseCode {
            len,
            support,
            values,
        })
    }

    /// Builds a code from a dense vector, keeping the nonzero entries.
    pub fn from_dense(dense: &[f64]) -> Self {
        let (support, values) = dense
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(j, v)| (j, *v))
            .unzip();
        SparseCode {
            len: dense.len(),
            support,
            values,
        }
    }

    /// Number of coefficient slots (`K`).
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Count of nonzero coefficients.
    pub fn nnz(&self) -> usize {
        self.values.iter().filter(|v| **v != 0.0).count()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.support.iter().copied().zip(self.values.iter().copied())
    }

    pub fn get(&self, j: usize) -> f64 {
        self.support
            .iter()
            .position(|&s| s == j)
            .map_or(0.0, |n| self.values[n])
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.len];
        for (j, v) in self.iter() {
            out[j] = v;
        }
        out
    }

    /// `atoms * self`.
    pub fn decode(&self, atoms: &DMatrix<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(atoms.nrows());
        for (j, v) in self.iter() {
            out.axpy(v, &atoms.column(j), 1.0);
        }
        out
    }

    pub(crate) fn map_values(&self, mut f: impl FnMut(usize, f64) -> f64) -> SparseCode {
        SparseCode {
            len: self.len,
            support: self.support.clone(),
            values: self.iter().map(|(j, v)| f(j, v)).collect(),
        }
    }
}

/// Multiplies each coefficient by its atom norm.
///
/// Maps a code over the un-normalized dictionary onto the normalized one:
/// `D * code == normalized(D) * sharp_to_blur(code)`.
pub fn rescale_code_sharp_to_blur(code: &SparseCode, norms: &[f64]) -> Result<SparseCode> {
    if norms.len() != code.len() {
        return Err(Error::mismatch("rescale norms", code.len(), norms.len()));
    }
    Ok(code.map_values(|j, v| v * norms[j]))
}

/// Divides each coefficient by its atom norm; inverse of
/// [`rescale_code_sharp_to_blur`].
pub fn rescale_code_blur_to_sharp(code: &SparseCode, norms: &[f64]) -> Result<SparseCode> {
    if norms.len() != code.len() {
        return Err(Error::mismatch("rescale norms", code.len(), norms.len()));
    }
    if let Some(&j) = code.support().iter().find(|&&j| norms[j] <= 0.0) {
        return Err(Error::numerical(format!("zero norm on active atom {j}")));
    }
    Ok(code.map_values(|j, v| v / norms[j]))
}

/// Codes for a batch of signals; column `i` is the code of signal `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeMatrix {
    num_atoms: usize,
    codes: Vec<SparseCode>,
}

impl CodeMatrix {
    pub fn new(num_atoms: usize, codes: Vec<SparseCode>) -> Result<Self> {
        if let Some(c) = codes.iter().find(|c| c.len() != num_atoms) {
            return Err(Error::mismatch("code matrix rows", num_atoms, c.len()));
        }
        Ok(CodeMatrix { num_atoms, codes })
    }

    pub fn num_atoms(&self) -> usize {
        self.num_atoms
    }

    pub fn num_signals(&self) -> usize {
        self.codes.len()
    }

    pub fn codes(&self) -> &[SparseCode] {
        &self.codes
    }

    pub fn code(&self, i: usize) -> &SparseCode {
        &self.codes[i]
    }

    pub fn into_codes(self) -> Vec<SparseCode> {
        self.codes
    }

    /// Largest support size over all columns.
    pub fn max_nnz(&self) -> usize {
        self.codes.iter().map(SparseCode::nnz).max().unwrap_or(0)
    }

    /// Columns at the given indices, in order.
    pub fn select(&self, indices: &[usize]) -> CodeMatrix {
        CodeMatrix {
            num_atoms: self.num_atoms,
            codes: indices.iter().map(|&i| self.codes[i].clone()).collect(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.num_atoms, self.codes.len());
        for (i, c) in self.codes.iter().enumerate() {
            for (j, v) in c.iter() {
                out[(j, i)] = v;
            }
        }
        out
    }

    /// `atoms * codes`, one output column per signal.
    pub fn decode(&self, atoms: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(atoms.nrows(), self.codes.len());
        for (i, c) in self.codes.iter().enumerate() {
            let mut col = out.column_mut(i);
            for (j, v) in c.iter() {
                col.axpy(v, &atoms.column(j), 1.0);
            }
        }
        out
    }

    /// Squared Frobenius norm of `signals - atoms * codes`.
    pub fn residual_sq(&self, atoms: &DMatrix<f64>, signals: &DMatrix<f64>) -> f64 {
        (signals - self.decode(atoms)).norm_squared()
    }
}
