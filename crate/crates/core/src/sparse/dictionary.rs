use super::code::SparseCode;
use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// Atom norms at or below this are treated as degenerate and dropped on
/// normalization.
pub const DEGENERATE_NORM: f64 = 1e-12;

const UNIT_TOL: f64 = 1e-9;

/// A `d x K` matrix whose columns are atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    atoms: DMatrix<f64>,
    norms: Option<Vec<f64>>,
    unit_norm: bool,
}

impl Dictionary {
    /// Wraps an arbitrary atom matrix (not marked unit-norm).
    pub fn new(atoms: DMatrix<f64>) -> Result<Self> {
        check_shape(&atoms)?;
        Ok(Dictionary {
            atoms,
            norms: None,
            unit_norm: false,
        })
    }

    /// Wraps atoms that must already have unit L2 norm.
    pub fn unit(atoms: DMatrix<f64>) -> Result<Self> {
        check_shape(&atoms)?;
        for (j, col) in atoms.column_iter().enumerate() {
            let n = col.norm();
            if (n - 1.0).abs() > UNIT_TOL {
                return Err(Error::invalid(format!("atom {j} has norm {n}, expected 1")));
            }
        }
        Ok(Dictionary {
            atoms,
            norms: None,
            unit_norm: true,
        })
    }

    /// Normalizes every column in place of construction. Fails on a zero atom.
    pub fn unit_from(mut atoms: DMatrix<f64>) -> Result<Self> {
        check_shape(&atoms)?;
        for (j, mut col) in atoms.column_iter_mut().enumerate() {
            let n = col.norm();
            if n <= DEGENERATE_NORM {
                return Err(Error::numerical(format!("atom {j} has zero norm")));
            }
            col /= n;
        }
        Ok(Dictionary {
            atoms,
            norms: None,
            unit_norm: true,
        })
    }

    pub(crate) fn from_parts(atoms: DMatrix<f64>, norms: Option<Vec<f64>>, unit_norm: bool) -> Self {
        Dictionary {
            atoms,
            norms,
            unit_norm,
        }
    }

    pub fn atoms(&self) -> &DMatrix<f64> {
        &self.atoms
    }

    pub fn into_atoms(self) -> DMatrix<f64> {
        self.atoms
    }

    /// Feature dimension `d`.
    pub fn dim(&self) -> usize {
        self.atoms.nrows()
    }

    /// Atom count `K`.
    pub fn num_atoms(&self) -> usize {
        self.atoms.ncols()
    }

    pub fn is_unit_norm(&self) -> bool {
        self.unit_norm
    }

    /// Norms of the atoms this dictionary was normalized from, if any.
    pub fn norms(&self) -> Option<&[f64]> {
        self.norms.as_deref()
    }

    pub fn atom_norms(&self) -> Vec<f64> {
        self.atoms.column_iter().map(|c| c.norm()).collect()
    }

    pub fn decode(&self, code: &SparseCode) -> Result<nalgebra::DVector<f64>> {
        if code.len() != self.num_atoms() {
            return Err(Error::mismatch("code length", self.num_atoms(), code.len()));
        }
        Ok(code.decode(&self.atoms))
    }

    /// Rows `[start, start + len)` of every atom, as an un-normalized dictionary.
    pub fn row_block(&self, start: usize, len: usize) -> Result<Dictionary> {
        if start + len > self.dim() || len == 0 {
            return Err(Error::invalid(format!(
                "row block {start}..{} outside dimension {}",
                start + len,
                self.dim()
            )));
        }
        Dictionary::new(self.atoms.rows(start, len).into_owned())
    }
}

fn check_shape(atoms: &DMatrix<f64>) -> Result<()> {
    if atoms.nrows() == 0 || atoms.ncols() == 0 {
        return Err(Error::invalid("dictionary needs d >= 1 and K >= 1"));
    }
    if atoms.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("dictionary has non-finite entries"));
    }
    Ok(())
}

/// A unit-norm dictionary derived from an un-normalized one.
///
/// Degenerate atoms are removed from `dictionary`; `retained[c]` maps compact
/// column `c` back to the original atom index. `norms` keeps the original
/// length `K` and holds `0.0` for dropped atoms, so codes expanded through
/// [`NormalizedDictionary::expand`] have those slots zeroed.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedDictionary {
    pub dictionary: Dictionary,
    pub norms: Vec<f64>,
    pub retained: Vec<usize>,
}

impl NormalizedDictionary {
    pub fn num_slots(&self) -> usize {
        self.norms.len()
    }

    pub fn dropped(&self) -> Vec<usize> {
        (0..self.norms.len())
            .filter(|j| self.norms[*j] == 0.0)
            .collect()
    }

    /// Maps a code over the compact dictionary to the original `K` slots.
    pub fn expand(&self, compact: &SparseCode) -> SparseCode {
        let support = compact.support().iter().map(|&c| self.retained[c]).collect();
        SparseCode::new(self.norms.len(), support, compact.values().to_vec())
            .expect("retained indices are distinct and in range")
    }

    /// Un-normalized atoms over all `K` slots (`normalized * diag(norms)`).
    pub fn denormalized(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.dictionary.dim(), self.norms.len());
        for (c, &j) in self.retained.iter().enumerate() {
            out.set_column(j, &(self.dictionary.atoms().column(c) * self.norms[j]));
        }
        out
    }
}

/// Scales every atom to unit norm, returning the per-atom norms.
///
/// Atoms with norm `<= DEGENERATE_NORM` are dropped (logged as a warning)
/// and reported through a zero norm.
pub fn normalize_dictionary(dict: &Dictionary) -> Result<NormalizedDictionary> {
    let k = dict.num_atoms();
    let mut norms = vec![0.0; k];
    let mut retained = Vec::with_capacity(k);
    for (j, col) in dict.atoms().column_iter().enumerate() {
        let n = col.norm();
        if n > DEGENERATE_NORM {
            norms[j] = n;
            retained.push(j);
        }
    }
    if retained.is_empty() {
        return Err(Error::numerical("every atom is degenerate"));
    }
    if retained.len() < k {
        let dropped: Vec<usize> = (0..k).filter(|j| norms[*j] == 0.0).collect();
        log::warn!("dropping {} degenerate atoms: {:?}", dropped.len(), dropped);
    }
    let mut atoms = DMatrix::zeros(dict.dim(), retained.len());
    for (c, &j) in retained.iter().enumerate() {
        atoms.set_column(c, &(dict.atoms().column(j) / norms[j]));
    }
    let kept_norms = retained.iter().map(|&j| norms[j]).collect();
    Ok(NormalizedDictionary {
        dictionary: Dictionary::from_parts(atoms, Some(kept_norms), true),
        norms,
        retained,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn already_unit_is_identity() {
        let d = Dictionary::unit(DMatrix::identity(3, 3)).unwrap();
        let n = normalize_dictionary(&d).unwrap();
        assert_eq!(n.dictionary.atoms(), d.atoms());
        assert_eq!(n.norms, vec![1.0; 3]);
        assert!(n.dropped().is_empty());
    }

    #[test]
    fn single_scaled_atom() {
        let mut a = DMatrix::identity(3, 3);
        a[(0, 0)] = 2.0;
        let n = normalize_dictionary(&Dictionary::new(a).unwrap()).unwrap();
        assert_eq!(n.norms[0], 2.0);
        assert_eq!(n.dictionary.atoms()[(0, 0)], 1.0);
    }

    #[test]
    fn degenerate_atom_dropped() {
        let a = DMatrix::from_column_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, 3.0]);
        let n = normalize_dictionary(&Dictionary::new(a).unwrap()).unwrap();
        assert_eq!(n.retained, vec![0, 2]);
        assert_eq!(n.dropped(), vec![1]);
        assert_eq!(n.dictionary.num_atoms(), 2);
        let code = SparseCode::new(2, vec![1], vec![5.0]).unwrap();
        assert_eq!(n.expand(&code).support(), &[2]);
    }

    #[test]
    fn unit_rejects_scaled_atoms() {
        assert!(Dictionary::unit(DMatrix::identity(2, 2) * 2.0).is_err());
        assert!(Dictionary::new(DMatrix::zeros(0, 2)).is_err());
    }
}
