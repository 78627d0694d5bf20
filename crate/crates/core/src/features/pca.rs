use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Principal subspace of a descriptor set.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: DVector<f64>,
    /// `d x m`, orthonormal columns sorted by decreasing variance.
    pub basis: DMatrix<f64>,
    pub eigenvalues: DVector<f64>,
}

impl PcaModel {
    pub fn input_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn project(&self, v: &[f64]) -> Result<DVector<f64>> {
        if v.len() != self.input_dim() {
            return Err(Error::mismatch("PCA input", self.input_dim(), v.len()));
        }
        Ok(self.basis.tr_mul(&(DVector::from_column_slice(v) - &self.mean)))
    }

    /// Projects every column.
    pub fn project_all(&self, data: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if data.nrows() != self.input_dim() {
            return Err(Error::mismatch("PCA input", self.input_dim(), data.nrows()));
        }
        let mut centered = data.clone();
        for mut col in centered.column_iter_mut() {
            col -= &self.mean;
        }
        Ok(self.basis.tr_mul(&centered))
    }

    pub fn reconstruct(&self, coords: &DVector<f64>) -> DVector<f64> {
        &self.basis * coords + &self.mean
    }
}

/// Mean and all covariance eigenpairs (eigenvalues decreasing) of the columns
/// of `data`, using the unbiased `1 / (N - 1)` normalization.
pub fn covariance_spectrum(data: &DMatrix<f64>) -> Result<(DVector<f64>, DVector<f64>, DMatrix<f64>)> {
    let (d, n) = data.shape();
    if n < 2 || d == 0 {
        return Err(Error::invalid("covariance needs at least two samples"));
    }
    let mean = data.column_mean();
    let mut centered = data.clone();
    for mut col in centered.column_iter_mut() {
        col -= &mean;
    }
    let cov = (&centered * centered.transpose()) / (n - 1) as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values = DVector::from_iterator(d, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(d, d);
    for (k, &i) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        // fix the sign: largest-magnitude entry positive
        let lead = v.iamax();
        if v[lead] < 0.0 {
            v = -v;
        }
        vectors.set_column(k, &v);
    }
    Ok((mean, values, vectors))
}

/// Fits an `m`-dimensional PCA model to the columns of `data`.
pub fn pca_fit(data: &DMatrix<f64>, target_dim: usize) -> Result<PcaModel> {
    let (d, n) = data.shape();
    if target_dim == 0 || target_dim >= n || target_dim >= d {
        return Err(Error::invalid(format!(
            "PCA target {target_dim} must satisfy 1 <= m < min(N={n}, d={d})"
        )));
    }
    let (mean, values, vectors) = covariance_spectrum(data)?;
    Ok(PcaModel {
        mean,
        basis: vectors.columns(0, target_dim).into_owned(),
        eigenvalues: values.rows(0, target_dim).into_owned(),
    })
}
