use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// `[sift; weight * grad_reduced]`.
pub fn joint_feature(sift: &[f64], grad_reduced: &[f64], weight: f64) -> Result<Vec<f64>> {
    if sift.iter().chain(grad_reduced).any(|v| !v.is_finite()) || !weight.is_finite() {
        return Err(Error::invalid("joint feature inputs must be finite"));
    }
    let mut out = Vec::with_capacity(sift.len() + grad_reduced.len());
    out.extend_from_slice(sift);
    out.extend(grad_reduced.iter().map(|v| weight * v));
    Ok(out)
}

/// Column-wise [`joint_feature`] over aligned descriptor matrices.
pub fn joint_features(sift: &DMatrix<f64>, grad_reduced: &DMatrix<f64>, weight: f64) -> Result<DMatrix<f64>> {
    if sift.ncols() != grad_reduced.ncols() {
        return Err(Error::mismatch("joint feature columns", sift.ncols(), grad_reduced.ncols()));
    }
    let (ds, dg) = (sift.nrows(), grad_reduced.nrows());
    let mut out = DMatrix::zeros(ds + dg, sift.ncols());
    out.rows_mut(0, ds).copy_from(sift);
    out.rows_mut(ds, dg).copy_from(&(grad_reduced * weight));
    Ok(out)
}

/// Balancing weight for the gradient half: mean SIFT column norm over mean
/// reduced-gradient column norm.
pub fn gradient_weight(sift: &DMatrix<f64>, grad_reduced: &DMatrix<f64>) -> Result<f64> {
    let mean_norm = |m: &DMatrix<f64>| {
        m.column_iter().map(|c| c.norm()).sum::<f64>() / m.ncols().max(1) as f64
    };
    let (s, g) = (mean_norm(sift), mean_norm(grad_reduced));
    if g <= 0.0 || s <= 0.0 {
        return Err(Error::numerical("cannot balance joint feature: a half has zero energy"));
    }
    Ok(s / g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concatenation() {
        let out = joint_feature(&[1.0, 2.0], &[0.0, 0.0, 0.0], 1.0).unwrap();
        assert_eq!(out, vec![1.0, 2.0, 0.0, 0.0, 0.0]);
        let out = joint_feature(&[1.0], &[2.0], 0.5).unwrap();
        assert_eq!(out, vec![1.0, 1.0]);
        assert!(joint_feature(&[f64::NAN], &[], 1.0).is_err());
    }

    #[test]
    fn weight_balances_mean_norms() {
        let s = DMatrix::from_element(3, 4, 1.0);
        let g = DMatrix::from_element(2, 4, 3.0);
        let w = gradient_weight(&s, &g).unwrap();
        let joint = joint_features(&s, &g, w).unwrap();
        assert_eq!(joint.nrows(), 5);
        let gn = joint.rows(3, 2).column(0).norm();
        assert!((gn - s.column(0).norm()).abs() < 1e-12);
    }
}
