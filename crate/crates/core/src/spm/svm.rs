use super::pool::SpmFeature;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmConfig {
    /// Hinge-loss weight.
    pub c: f64,
    /// Stop once the primal-dual gap of every binary problem drops below this.
    pub tolerance: f64,
    pub max_epochs: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 1.0,
            tolerance: 1e-4,
            max_epochs: 100_000,
        }
    }
}

/// One-vs-rest linear classifiers, one per class.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSvmModel {
    pub classes: Vec<String>,
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    /// Per training sample: nonzero dual coefficient in any binary problem.
    pub support_flags: Vec<bool>,
}

impl LinearSvmModel {
    pub fn dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::mismatch("svm feature length", self.dim(), x.len()));
        }
        Ok(self.weights.iter().zip(&self.bias).map(|(w, b)| dot(w, x) + b).collect())
    }

    /// Sum over the binary problems of ½(‖w‖² + b²) + C·Σ hinge.
    pub fn primal_objective(&self, features: &[SpmFeature], labels: &[usize], c: f64) -> f64 {
        (0..self.classes.len())
            .map(|k| {
                let w = &self.weights[k];
                let b = self.bias[k];
                let loss: f64 = features
                    .iter()
                    .zip(labels)
                    .map(|(f, &l)| (1.0 - sign(l == k) * (dot(w, &f.vector) + b)).max(0.0))
                    .sum();
                0.5 * (dot(w, w) + b * b) + c * loss
            })
            .sum()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sign(positive: bool) -> f64 {
    if positive {
        1.0
    } else {
        -1.0
    }
}

/// Trains one L2-regularized hinge-loss classifier per class against the
/// rest by dual coordinate descent. The bias is an extra weight on a
/// constant unit feature, so it is regularized like the other weights.
/// `labels[i]` indexes `classes`.
pub fn svm_train(
    features: &[SpmFeature],
    labels: &[usize],
    classes: &[String],
    config: &SvmConfig,
) -> Result<LinearSvmModel> {
    if features.is_empty() {
        return Err(Error::invalid("empty training set"));
    }
    if labels.len() != features.len() {
        return Err(Error::mismatch("svm labels", features.len(), labels.len()));
    }
    if classes.len() < 2 {
        return Err(Error::invalid("svm needs at least two classes"));
    }
    if !(config.c > 0.0 && config.c.is_finite()) {
        return Err(Error::invalid(format!("svm C must be positive, got {}", config.c)));
    }
    let dim = features[0].vector.len();
    if let Some(f) = features.iter().find(|f| f.vector.len() != dim) {
        return Err(Error::mismatch("svm feature length", dim, f.vector.len()));
    }
    for (k, name) in classes.iter().enumerate() {
        if !labels.contains(&k) {
            return Err(Error::invalid(format!("class {name} has no training samples")));
        }
    }
    if let Some(&l) = labels.iter().find(|&&l| l >= classes.len()) {
        return Err(Error::invalid(format!("label {l} out of range for {} classes", classes.len())));
    }

    let sq_norms: Vec<f64> = features.iter().map(|f| dot(&f.vector, &f.vector) + 1.0).collect();
    let mut weights = Vec::with_capacity(classes.len());
    let mut bias = Vec::with_capacity(classes.len());
    let mut support_flags = vec![false; features.len()];
    for k in 0..classes.len() {
        let y: Vec<f64> = labels.iter().map(|&l| sign(l == k)).collect();
        let (w, b, alpha) = solve_binary(features, &y, &sq_norms, config);
        for (flag, a) in support_flags.iter_mut().zip(&alpha) {
            *flag |= *a > 0.0;
        }
        weights.push(w);
        bias.push(b);
    }
    Ok(LinearSvmModel {
        classes: classes.to_vec(),
        weights,
        bias,
        support_flags,
    })
}

fn solve_binary(features: &[SpmFeature], y: &[f64], sq_norms: &[f64], config: &SvmConfig) -> (Vec<f64>, f64, Vec<f64>) {
    let n = features.len();
    let dim = features[0].vector.len();
    let c = config.c;
    let mut alpha = vec![0.0; n];
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    for epoch in 0..config.max_epochs {
        for i in 0..n {
            let x = &features[i].vector;
            let g = y[i] * (dot(&w, x) + b) - 1.0;
            let next = (alpha[i] - g / sq_norms[i]).clamp(0.0, c);
            let delta = (next - alpha[i]) * y[i];
            if delta != 0.0 {
                for (wj, xj) in w.iter_mut().zip(x) {
                    *wj += delta * xj;
                }
                b += delta;
                alpha[i] = next;
            }
        }
        let reg = 0.5 * (dot(&w, &w) + b * b);
        let hinge: f64 = features
            .iter()
            .zip(y)
            .map(|(f, yi)| (1.0 - yi * (dot(&w, &f.vector) + b)).max(0.0))
            .sum();
        let gap = (reg + c * hinge) - (alpha.iter().sum::<f64>() - reg);
        if gap < config.tolerance {
            log::trace!("svm converged after {} epochs, gap {gap:.3e}", epoch + 1);
            return (w, b, alpha);
        }
    }
    log::warn!("svm stopped at {} epochs before reaching gap {}", config.max_epochs, config.tolerance);
    (w, b, alpha)
}

/// Highest-scoring class, ties to the lowest index, with all class scores.
pub fn svm_predict(model: &LinearSvmModel, feature: &SpmFeature) -> Result<(usize, Vec<f64>)> {
    let scores = model.scores(&feature.vector)?;
    let mut best = 0;
    for (k, s) in scores.iter().enumerate().skip(1) {
        if *s > scores[best] {
            best = k;
        }
    }
    Ok((best, scores))
}

/// Training images that are support vectors of at least one binary problem.
pub fn support_vector_images(model: &LinearSvmModel) -> Result<Vec<usize>> {
    if model.support_flags.is_empty() || model.weights.is_empty() {
        return Err(Error::invalid("model has not been trained"));
    }
    Ok(model
        .support_flags
        .iter()
        .enumerate()
        .filter_map(|(i, &s)| s.then_some(i))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    fn feat(v: &[f64]) -> SpmFeature {
        SpmFeature { vector: v.to_vec() }
    }

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("c{i}")).collect()
    }

    fn tight() -> SvmConfig {
        SvmConfig {
            tolerance: 1e-13,
            ..SvmConfig::default()
        }
    }

    // Exact minimizer of ½αᵀQα − Σα over the box [0, C]ⁿ by enumerating
    // which coordinates sit at 0, at C or strictly inside.
    fn brute_force_dual(x: &[Vec<f64>], y: &[f64], c: f64) -> (Vec<f64>, f64) {
        let n = x.len();
        let q = DMatrix::from_fn(n, n, |i, j| y[i] * y[j] * (dot(&x[i], &x[j]) + 1.0));
        let mut best: Option<(f64, DVector<f64>)> = None;
        for pattern in 0..3usize.pow(n as u32) {
            let state: Vec<usize> = (0..n).map(|i| pattern / 3usize.pow(i as u32) % 3).collect();
            let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
            let mut a = DVector::from_fn(n, |i, _| if state[i] == 1 { c } else { 0.0 });
            if !free.is_empty() {
                let qff = DMatrix::from_fn(free.len(), free.len(), |r, s| q[(free[r], free[s])]);
                let rhs = DVector::from_fn(free.len(), |r, _| 1.0 - (q.row(free[r]) * &a)[0]);
                let Some(sol) = qff.lu().solve(&rhs) else { continue };
                for (r, &i) in free.iter().enumerate() {
                    a[i] = sol[r];
                }
            }
            if a.iter().any(|&v| !(-1e-12..=c + 1e-12).contains(&v)) {
                continue;
            }
            let obj = 0.5 * (a.transpose() * &q * &a)[0] - a.sum();
            if best.as_ref().map_or(true, |(o, _)| obj < *o - 1e-12) {
                best = Some((obj, a));
            }
        }
        let a = best.unwrap().1;
        let d = x[0].len();
        let mut w = vec![0.0; d];
        let mut b = 0.0;
        for i in 0..n {
            for j in 0..d {
                w[j] += a[i] * y[i] * x[i][j];
            }
            b += a[i] * y[i];
        }
        (w, b)
    }

    #[test]
    fn separable_toy() {
        let xs = [[0.0, 3.0], [0.0, 2.5], [0.1, -2.0], [-0.1, -3.0]];
        let f: Vec<_> = xs.iter().map(|v| feat(v)).collect();
        let m = svm_train(&f, &[0, 0, 1, 1], &names(2), &SvmConfig::default()).unwrap();
        for (x, l) in f.iter().zip([0, 0, 1, 1]) {
            assert_eq!(svm_predict(&m, x).unwrap().0, l);
        }
        assert!(m.weights[0][1].abs() > 5.0 * m.weights[0][0].abs());
    }

    #[test]
    fn three_class_matches_enumerated_dual() {
        let xs = vec![
            vec![1.0, 0.2],
            vec![0.8, -0.3],
            vec![-0.5, 1.0],
            vec![-0.2, 0.9],
            vec![-0.6, -0.8],
            vec![0.1, -1.1],
            vec![0.3, 0.3],
        ];
        let labels = [0, 0, 1, 1, 2, 2, 0];
        let f: Vec<_> = xs.iter().map(|v| feat(v)).collect();
        let cfg = SvmConfig { c: 2.0, ..tight() };
        let m = svm_train(&f, &labels, &names(3), &cfg).unwrap();
        for k in 0..3 {
            let y: Vec<f64> = labels.iter().map(|&l| sign(l == k)).collect();
            let (w, b) = brute_force_dual(&xs, &y, cfg.c);
            for x in &xs {
                let ours = dot(&m.weights[k], x) + m.bias[k];
                assert!((ours - (dot(&w, x) + b)).abs() < 1e-4, "class {k}");
            }
        }
    }

    #[test]
    fn duplicate_point_keeps_decision() {
        let xs = [[2.0, 1.0], [1.5, 2.0], [-1.0, -2.0], [-2.0, -0.5], [0.0, -3.0]];
        let cfg = SvmConfig { c: 1000.0, ..tight() };
        let labels = [0, 0, 1, 1, 1];
        let f: Vec<_> = xs.iter().map(|v| feat(v)).collect();
        let m = svm_train(&f, &labels, &names(2), &cfg).unwrap();
        let mut f2 = f.clone();
        f2.push(f[2].clone());
        let m2 = svm_train(&f2, &[0, 0, 1, 1, 1, 1], &names(2), &cfg).unwrap();
        for probe in [[0.3, -0.7], [5.0, 1.0], [-1.0, 1.0]] {
            let a = m.scores(&probe).unwrap();
            let b = m2.scores(&probe).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn dropping_non_support_points_keeps_decision() {
        let mut xs = vec![[1.0, 1.0], [-1.0, -1.0], [1.2, -0.2], [-0.3, 1.1]];
        let mut labels = vec![0, 1, 0, 1];
        for i in 0..6 {
            let t = i as f64;
            xs.push([4.0 + t, 3.0 - 0.5 * t]);
            labels.push(0);
            xs.push([-4.0 - t, -2.0 + 0.3 * t]);
            labels.push(1);
        }
        let cfg = SvmConfig { c: 0.7, ..tight() };
        let f: Vec<_> = xs.iter().map(|v| feat(v)).collect();
        let m = svm_train(&f, &labels, &names(2), &cfg).unwrap();
        let keep = support_vector_images(&m).unwrap();
        assert!(keep.len() < xs.len());
        let fk: Vec<_> = keep.iter().map(|&i| f[i].clone()).collect();
        let lk: Vec<_> = keep.iter().map(|&i| labels[i]).collect();
        let m2 = svm_train(&fk, &lk, &names(2), &cfg).unwrap();
        for x in &f {
            let a = m.scores(&x.vector).unwrap();
            let b = m2.scores(&x.vector).unwrap();
            assert!((a[0] - b[0]).abs() < 1e-4);
        }
    }

    #[test]
    fn margin_points_are_all_support_vectors() {
        let f = vec![feat(&[1.0]), feat(&[-1.0])];
        let m = svm_train(&f, &[0, 1], &names(2), &SvmConfig::default()).unwrap();
        assert_eq!(support_vector_images(&m).unwrap(), vec![0, 1]);
    }

    #[test]
    fn zero_feature_picks_largest_bias_and_ties_go_low() {
        let m = LinearSvmModel {
            classes: names(3),
            weights: vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
            bias: vec![0.1, 0.5, 0.2],
            support_flags: vec![true],
        };
        assert_eq!(svm_predict(&m, &feat(&[0.0, 0.0])).unwrap().0, 1);
        let tie = LinearSvmModel { bias: vec![0.0; 3], ..m.clone() };
        assert_eq!(svm_predict(&tie, &feat(&[1.0, 0.0])).unwrap().0, 0);
        assert!(svm_predict(&m, &feat(&[1.0])).is_err());
    }

    #[test]
    fn padding_with_zero_weight_dims_keeps_scores() {
        let xs = [[0.5, 1.0], [1.0, -0.4], [-0.7, 0.2], [-1.0, -1.0]];
        let f: Vec<_> = xs.iter().map(|v| feat(v)).collect();
        let m = svm_train(&f, &[0, 1, 2, 2], &names(3), &tight()).unwrap();
        let mut padded = m.clone();
        for w in &mut padded.weights {
            w.extend([0.0, 0.0]);
        }
        let probe = [0.3, -0.2];
        let a = m.scores(&probe).unwrap();
        let b = padded.scores(&[0.3, -0.2, 7.0, -3.0]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn objective_not_worse_than_zero_model() {
        let xs = [[0.2, 0.1], [0.3, -0.1], [-0.1, 0.2], [0.0, -0.3], [0.25, 0.25]];
        let labels = [0, 1, 0, 1, 1];
        let f: Vec<_> = xs.iter().map(|v| feat(v)).collect();
        let m = svm_train(&f, &labels, &names(2), &SvmConfig::default()).unwrap();
        let zero = LinearSvmModel {
            weights: vec![vec![0.0; 2]; 2],
            bias: vec![0.0; 2],
            ..m.clone()
        };
        assert!(m.primal_objective(&f, &labels, 1.0) <= zero.primal_objective(&f, &labels, 1.0));
    }

    #[test]
    fn rejects_bad_training_sets() {
        let f = vec![feat(&[1.0]), feat(&[2.0])];
        assert!(svm_train(&[], &[], &names(2), &SvmConfig::default()).is_err());
        assert!(svm_train(&f, &[0, 0], &names(1), &SvmConfig::default()).is_err());
        assert!(svm_train(&f, &[0, 0], &names(2), &SvmConfig::default()).is_err());
    }
}
