use super::code::{CodeMatrix, SparseCode};
use super::dictionary::Dictionary;
use super::omp::OmpEncoder;
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

const POWER_ITERATIONS: usize = 50;
/// Atoms used by fewer signals than this are re-seeded during cleanup.
const MIN_USES: usize = 4;
/// Atoms this correlated with an earlier atom are re-seeded during cleanup.
const DUPLICATE_CORRELATION: f64 = 0.99;
const POWER_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsvdConfig {
    pub num_atoms: usize,
    pub sparsity: usize,
    pub iterations: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct KsvdResult {
    /// Unit-norm learned dictionary.
    pub dictionary: Dictionary,
    /// Codes after the final atom update (same supports as the last OMP pass).
    pub codes: CodeMatrix,
    /// `||X - D A||_F^2` after each iteration.
    pub objective: Vec<f64>,
}

/// Learns a `K`-atom dictionary for the columns of `signals`.
///
/// Each iteration sparse-codes every signal with OMP, then updates atoms one
/// at a time by a rank-1 fit of the residual restricted to the signals using
/// that atom. Unused atoms are replaced by the currently worst-approximated
/// signal. Greedy coding can occasionally fit worse than the previous codes;
/// when that would raise the objective, the iteration is redone keeping each
/// signal's better code, so the objective never increases.
pub fn ksvd_learn(signals: &DMatrix<f64>, config: &KsvdConfig) -> Result<KsvdResult> {
    let n = signals.ncols();
    let k = config.num_atoms;
    if k == 0 {
        return Err(Error::invalid("K-SVD needs at least one atom"));
    }
    if n < k {
        return Err(Error::invalid(format!("K-SVD needs N >= K, got N={n} K={k}")));
    }
    if config.iterations == 0 {
        return Err(Error::invalid("K-SVD needs at least one iteration"));
    }
    let sq_norms: Vec<f64> = signals.column_iter().map(|c| c.norm_squared()).collect();
    let nonzero: Vec<usize> = (0..n).filter(|&i| sq_norms[i] > 0.0).collect();
    if nonzero.is_empty() {
        return Err(Error::invalid("K-SVD signal set is all zero"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut atoms = initial_atoms(signals, &nonzero, k, &mut rng);
    let mut state: Option<(Vec<SparseCode>, f64)> = None;
    let mut objective = Vec::with_capacity(config.iterations);

    for _ in 0..config.iterations {
        let encode = |atoms: &DMatrix<f64>| -> Result<Vec<SparseCode>> {
            let dict = Dictionary::unit_from(atoms.clone())?;
            Ok(OmpEncoder::new(&dict, config.sparsity)?.encode_all(signals)?.into_codes())
        };
        let step = match state.take() {
            None => update_all(signals, atoms.clone(), encode(&atoms)?),
            Some((prev, prev_total)) => {
                // Plain K-SVD step on a cleaned dictionary first; if it
                // raised the objective, redo it on the uncleaned atoms
                // keeping each signal's better code.
                let cleaned = clean_atoms(signals, &atoms, &prev);
                let fresh = encode(&cleaned)?;
                let plain = update_all(signals, cleaned, fresh);
                if plain.2 <= prev_total {
                    plain
                } else {
                    let kept = keep_better(signals, &atoms, encode(&atoms)?, prev);
                    update_all(signals, atoms.clone(), kept)
                }
            }
        };
        let (next_atoms, codes, total) = step;
        atoms = next_atoms;
        objective.push(total);
        state = Some((codes, total));
    }

    let dictionary = Dictionary::unit_from(atoms)?;
    let codes = CodeMatrix::new(k, state.map(|s| s.0).unwrap_or_default())?;
    Ok(KsvdResult {
        dictionary,
        codes,
        objective,
    })
}

fn residual_sq(signals: &DMatrix<f64>, atoms: &DMatrix<f64>, codes: &[SparseCode]) -> Vec<f64> {
    (0..signals.ncols())
        .into_par_iter()
        .map(|i| (signals.column(i) - codes[i].decode(atoms)).norm_squared())
        .collect()
}

/// Copy of `atoms` with near-duplicate and rarely used atoms replaced by the
/// worst-approximated signals under `codes`.
fn clean_atoms(signals: &DMatrix<f64>, atoms: &DMatrix<f64>, codes: &[SparseCode]) -> DMatrix<f64> {
    let k = atoms.ncols();
    let mut uses = vec![0usize; k];
    for c in codes {
        for &j in c.support() {
            uses[j] += 1;
        }
    }
    let mut errors = residual_sq(signals, atoms, codes);
    let mut out = atoms.clone();
    for j in 0..k {
        let duplicate = (0..j).any(|i| out.column(i).dot(&out.column(j)).abs() > DUPLICATE_CORRELATION);
        if uses[j] >= MIN_USES && !duplicate {
            continue;
        }
        let Some(worst) = argmax(&errors) else { break };
        let x = signals.column(worst);
        let norm = x.norm();
        if norm > 0.0 && errors[worst] > 0.0 {
            out.set_column(j, &(x / norm));
        }
        errors[worst] = f64::NEG_INFINITY;
    }
    out
}

/// Per signal, whichever of the two codes fits better under `atoms`.
fn keep_better(
    signals: &DMatrix<f64>,
    atoms: &DMatrix<f64>,
    fresh: Vec<SparseCode>,
    prev: Vec<SparseCode>,
) -> Vec<SparseCode> {
    let e_new = residual_sq(signals, atoms, &fresh);
    let e_old = residual_sq(signals, atoms, &prev);
    fresh
        .into_iter()
        .zip(prev)
        .enumerate()
        .map(|(i, (new, old))| if e_old[i] < e_new[i] { old } else { new })
        .collect()
}

/// Updates every atom in turn for fixed supports. Unused atoms are replaced
/// by the currently worst-approximated signal. Returns the new atoms, the
/// codes and the total squared residual.
fn update_all(
    signals: &DMatrix<f64>,
    mut atoms: DMatrix<f64>,
    mut codes: Vec<SparseCode>,
) -> (DMatrix<f64>, Vec<SparseCode>, f64) {
    let k = atoms.ncols();
    let mut errors = residual_sq(signals, &atoms, &codes);
    let mut users: Vec<Vec<(usize, usize)>> = vec![Vec::new(); k];
    for (i, c) in codes.iter().enumerate() {
        for (slot, &j) in c.support().iter().enumerate() {
            users[j].push((i, slot));
        }
    }
    for j in 0..k {
        if users[j].is_empty() {
            if let Some(worst) = argmax(&errors) {
                let x = signals.column(worst);
                let norm = x.norm();
                if norm > 0.0 {
                    atoms.set_column(j, &(x / norm));
                }
                errors[worst] = f64::NEG_INFINITY;
            }
            continue;
        }
        update_atom(signals, &mut atoms, &mut codes, j, &users[j]);
    }
    let total = residual_sq(signals, &atoms, &codes).iter().sum();
    (atoms, codes, total)
}

fn initial_atoms(
    signals: &DMatrix<f64>,
    nonzero: &[usize],
    k: usize,
    rng: &mut ChaCha8Rng,
) -> DMatrix<f64> {
    let d = signals.nrows();
    let mut order = nonzero.to_vec();
    order.shuffle(rng);
    let mut atoms = DMatrix::zeros(d, k);
    for j in 0..k {
        let col = match order.get(j) {
            Some(&i) => signals.column(i).into_owned(),
            None => DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal)),
        };
        let norm = col.norm();
        atoms.set_column(j, &(col / norm));
    }
    atoms
}

fn argmax(values: &[f64]) -> Option<usize> {
    let mut best = None;
    let mut best_v = f64::NEG_INFINITY;
    for (i, &v) in values.iter().enumerate() {
        if v > best_v {
            best_v = v;
            best = Some(i);
        }
    }
    best
}

/// Rank-1 refit of atom `j` and its coefficients on the signals that use it.
fn update_atom(
    signals: &DMatrix<f64>,
    atoms: &mut DMatrix<f64>,
    codes: &mut [SparseCode],
    j: usize,
    users: &[(usize, usize)],
) {
    let d = signals.nrows();
    let mut e = DMatrix::zeros(d, users.len());
    for (col, &(i, _)) in users.iter().enumerate() {
        let mut r = signals.column(i).into_owned();
        for (a, v) in codes[i].iter() {
            if a != j {
                r.axpy(-v, &atoms.column(a), 1.0);
            }
        }
        e.set_column(col, &r);
    }

    // Power iteration on E E^T from the current atom; every step raises
    // ||E^T u||, so the refit never increases the residual.
    let mut u = atoms.column(j).into_owned();
    for _ in 0..POWER_ITERATIONS {
        let g = e.tr_mul(&u);
        let mut next = &e * g;
        let norm = next.norm();
        if norm == 0.0 {
            break;
        }
        next /= norm;
        let change = 1.0 - next.dot(&u).abs();
        u = next;
        if change < POWER_TOL {
            break;
        }
    }
    let g = e.tr_mul(&u);
    atoms.set_column(j, &u);
    for (col, &(i, slot)) in users.iter().enumerate() {
        let support = codes[i].support().to_vec();
        let mut values = codes[i].values().to_vec();
        values[slot] = g[col];
        codes[i] = SparseCode::new(codes[i].len(), support, values).expect("support unchanged");
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(k: usize, l: usize, it: usize) -> KsvdConfig {
        KsvdConfig {
            num_atoms: k,
            sparsity: l,
            iterations: it,
            seed: 7,
        }
    }

    #[test]
    fn recovers_two_orthonormal_atoms() {
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let truth = DMatrix::from_column_slice(3, 2, &[c, c, 0.0, 0.0, 0.0, 1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let signals = DMatrix::from_fn(3, 40, |_, i| i).map(|_| 0.0);
        let mut signals = signals;
        for i in 0..40 {
            let a = i % 2;
            let s: f64 = rng.random_range(0.5..2.0) * if rng.random::<bool>() { 1.0 } else { -1.0 };
            signals.set_column(i, &(truth.column(a) * s));
        }
        let out = ksvd_learn(&signals, &config(2, 1, 5)).unwrap();
        for t in 0..2 {
            let best = (0..2)
                .map(|j| out.dictionary.atoms().column(j).dot(&truth.column(t)).abs())
                .fold(0.0, f64::max);
            assert!(best > 0.999, "atom {t} correlation {best}");
        }
    }

    #[test]
    fn objective_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let signals = DMatrix::from_fn(12, 200, |_, _| rng.sample::<f64, _>(StandardNormal));
        let out = ksvd_learn(&signals, &config(20, 3, 8)).unwrap();
        assert_eq!(out.objective.len(), 8);
        for w in out.objective.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "{} -> {}", w[0], w[1]);
        }
        assert!(out.codes.max_nnz() <= 3);
        let final_obj = out.codes.residual_sq(out.dictionary.atoms(), &signals);
        assert!((final_obj - out.objective[7]).abs() < 1e-8 * final_obj.max(1.0));
    }

    #[test]
    fn rejects_bad_sizes() {
        let signals = DMatrix::from_element(4, 3, 1.0);
        assert!(ksvd_learn(&signals, &config(4, 1, 1)).is_err());
        let zeros = DMatrix::zeros(4, 10);
        assert!(ksvd_learn(&zeros, &config(4, 1, 1)).is_err());
        let ones = DMatrix::from_element(4, 10, 1.0);
        assert!(ksvd_learn(&ones, &config(4, 1, 0)).is_err());
    }
}
