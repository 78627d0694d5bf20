//! The "ADCT" binary container.
//!
//! A file is a sequence of records. Every record starts with the magic
//! `ADCT`, a little-endian `u32` format version, `u32` rows, `u32` cols and
//! a `u8` flag, followed by its payload:
//!
//! - flag 0: `rows * cols` row-major `f64` values;
//! - flag 1: the same, then `cols` atom norms (a unit-norm dictionary);
//! - flag 2: `rows` bytes of UTF-8 text (`cols` is 1).
//!
//! A saved dictionary is therefore exactly one record. Composite artifacts
//! (PCA models, codes, classifiers) are fixed sequences of records read
//! back through [`Persist`].

use crate::error::{Error, Result};
use crate::features::PcaModel;
use crate::image::GrayImage;
use crate::sparse::{CodeMatrix, Dictionary, SparseCode};
use crate::spm::LinearSvmModel;
use nalgebra::{DMatrix, DVector};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const MAGIC: &[u8; 4] = b"ADCT";
pub const FORMAT_VERSION: u32 = 1;

const FLAG_PLAIN: u8 = 0;
const FLAG_NORMS: u8 = 1;
const FLAG_TEXT: u8 = 2;

#[derive(Debug, Clone, PartialEq)]
pub enum Record {
    Matrix {
        matrix: DMatrix<f64>,
        norms: Option<Vec<f64>>,
    },
    Text(String),
}

impl Record {
    pub fn matrix(matrix: DMatrix<f64>) -> Self {
        Record::Matrix { matrix, norms: None }
    }

    pub fn column(values: &[f64]) -> Self {
        Record::matrix(DMatrix::from_column_slice(values.len(), 1, values))
    }

    pub fn into_matrix(self) -> Result<(DMatrix<f64>, Option<Vec<f64>>)> {
        match self {
            Record::Matrix { matrix, norms } => Ok((matrix, norms)),
            Record::Text(_) => Err(Error::Format("expected a matrix record, found text".into())),
        }
    }

    pub fn into_plain(self) -> Result<DMatrix<f64>> {
        match self.into_matrix()? {
            (m, None) => Ok(m),
            (_, Some(_)) => Err(Error::Format("unexpected norms on a plain matrix record".into())),
        }
    }

    pub fn into_text(self) -> Result<String> {
        match self {
            Record::Text(s) => Ok(s),
            Record::Matrix { .. } => Err(Error::Format("expected a text record, found a matrix".into())),
        }
    }
}

fn dim_u32(n: usize, what: &str) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::Format(format!("{what} {n} does not fit in u32")))
}

pub fn write_record<W: Write>(w: &mut W, record: &Record) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    let header = |w: &mut W, rows: u32, cols: u32, flag: u8| -> std::io::Result<()> {
        w.write_all(&rows.to_le_bytes())?;
        w.write_all(&cols.to_le_bytes())?;
        w.write_all(&[flag])
    };
    let invalid = |e: Error| std::io::Error::new(std::io::ErrorKind::InvalidInput, e.to_string());
    match record {
        Record::Matrix { matrix, norms } => {
            let rows = dim_u32(matrix.nrows(), "rows").map_err(invalid)?;
            let cols = dim_u32(matrix.ncols(), "cols").map_err(invalid)?;
            if let Some(n) = norms {
                if n.len() != matrix.ncols() {
                    return Err(invalid(Error::mismatch("stored norms", matrix.ncols(), n.len())));
                }
            }
            header(w, rows, cols, if norms.is_some() { FLAG_NORMS } else { FLAG_PLAIN })?;
            for r in 0..matrix.nrows() {
                for c in 0..matrix.ncols() {
                    w.write_all(&matrix[(r, c)].to_le_bytes())?;
                }
            }
            for v in norms.iter().flatten() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Record::Text(s) => {
            header(w, dim_u32(s.len(), "text length").map_err(invalid)?, 1, FLAG_TEXT)?;
            w.write_all(s.as_bytes())?;
        }
    }
    Ok(())
}

fn read_exact_or<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format(format!("truncated {what}")),
        _ => Error::Format(format!("reading {what}: {e}")),
    })
}

fn read_u32<R: Read>(r: &mut R, what: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact_or(r, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64s<R: Read>(r: &mut R, n: usize, what: &str) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; n * 8];
    read_exact_or(r, &mut bytes, what)?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

/// Reads the next record, or `None` at a clean end of input.
pub fn read_record<R: Read>(r: &mut R) -> Result<Option<Record>> {
    let mut magic = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match r.read(&mut magic[got..]) {
            Ok(0) if got == 0 => return Ok(None),
            Ok(0) => return Err(Error::Format("truncated record header".into())),
            Ok(n) => got += n,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(e) => return Err(Error::Format(format!("reading header: {e}"))),
        }
    }
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let version = read_u32(r, "version")?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported format version {version}")));
    }
    let rows = read_u32(r, "rows")? as usize;
    let cols = read_u32(r, "cols")? as usize;
    let mut flag = [0u8];
    read_exact_or(r, &mut flag, "flag")?;
    match flag[0] {
        FLAG_PLAIN | FLAG_NORMS => {
            let n = rows
                .checked_mul(cols)
                .ok_or_else(|| Error::Format(format!("{rows}x{cols} matrix too large")))?;
            let data = read_f64s(r, n, "matrix data")?;
            let matrix = DMatrix::from_row_slice(rows, cols, &data);
            let norms = if flag[0] == FLAG_NORMS { Some(read_f64s(r, cols, "norms")?) } else { None };
            Ok(Some(Record::Matrix { matrix, norms }))
        }
        FLAG_TEXT => {
            let mut bytes = vec![0u8; rows];
            read_exact_or(r, &mut bytes, "text")?;
            String::from_utf8(bytes)
                .map(|s| Some(Record::Text(s)))
                .map_err(|_| Error::Format("text record is not UTF-8".into()))
        }
        f => Err(Error::Format(format!("unknown record flag {f}"))),
    }
}

pub fn write_records(path: &Path, records: &[Record]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for rec in records {
        write_record(&mut w, rec).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_records(path: &Path) -> Result<Vec<Record>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut out = Vec::new();
    while let Some(rec) = read_record(&mut r)? {
        out.push(rec);
    }
    Ok(out)
}

/// Types stored as a fixed sequence of records.
pub trait Persist: Sized {
    fn to_records(&self) -> Vec<Record>;
    fn from_records(records: &mut dyn Iterator<Item = Record>) -> Result<Self>;
}

fn next(records: &mut dyn Iterator<Item = Record>, what: &str) -> Result<Record> {
    records
        .next()
        .ok_or_else(|| Error::Format(format!("missing {what} record")))
}

pub fn save<T: Persist>(path: &Path, value: &T) -> Result<()> {
    write_records(path, &value.to_records())
}

pub fn load<T: Persist>(path: &Path) -> Result<T> {
    let mut it = read_records(path)?.into_iter();
    let value = T::from_records(&mut it)?;
    if it.next().is_some() {
        return Err(Error::Format(format!("{}: trailing records", path.display())));
    }
    Ok(value)
}

impl Persist for Dictionary {
    fn to_records(&self) -> Vec<Record> {
        let norms = self
            .is_unit_norm()
            .then(|| self.norms().map_or_else(|| vec![1.0; self.num_atoms()], <[f64]>::to_vec));
        vec![Record::Matrix {
            matrix: self.atoms().clone(),
            norms,
        }]
    }

    fn from_records(records: &mut dyn Iterator<Item = Record>) -> Result<Self> {
        let (matrix, norms) = next(records, "dictionary")?.into_matrix()?;
        match norms {
            None => Dictionary::new(matrix),
            Some(n) => {
                let d = Dictionary::unit(matrix)?;
                let stored = (!n.iter().all(|&v| v == 1.0)).then_some(n);
                Ok(Dictionary::from_parts(d.into_atoms(), stored, true))
            }
        }
    }
}

impl Persist for PcaModel {
    fn to_records(&self) -> Vec<Record> {
        vec![
            Record::column(self.mean.as_slice()),
            Record::matrix(self.basis.clone()),
            Record::column(self.eigenvalues.as_slice()),
        ]
    }

    fn from_records(records: &mut dyn Iterator<Item = Record>) -> Result<Self> {
        let mean = next(records, "pca mean")?.into_plain()?;
        let basis = next(records, "pca basis")?.into_plain()?;
        let eig = next(records, "pca eigenvalues")?.into_plain()?;
        if mean.ncols() != 1 || eig.ncols() != 1 || mean.nrows() != basis.nrows() || eig.nrows() != basis.ncols() {
            return Err(Error::Format("inconsistent pca block shapes".into()));
        }
        Ok(PcaModel {
            mean: DVector::from_column_slice(mean.as_slice()),
            basis,
            eigenvalues: DVector::from_column_slice(eig.as_slice()),
        })
    }
}

// Codes are kept sparse: a (K, N) header and one (signal, atom, value) row
// per stored coefficient.
impl Persist for CodeMatrix {
    fn to_records(&self) -> Vec<Record> {
        let nnz: usize = self.codes().iter().map(SparseCode::nnz).sum();
        let mut triplets = DMatrix::zeros(nnz, 3);
        let mut row = 0;
        for (i, code) in self.codes().iter().enumerate() {
            for (j, v) in code.iter() {
                triplets[(row, 0)] = i as f64;
                triplets[(row, 1)] = j as f64;
                triplets[(row, 2)] = v;
                row += 1;
            }
        }
        vec![
            Record::column(&[self.num_atoms() as f64, self.num_signals() as f64]),
            Record::matrix(triplets),
        ]
    }

    fn from_records(records: &mut dyn Iterator<Item = Record>) -> Result<Self> {
        let head = next(records, "code header")?.into_plain()?;
        let trip = next(records, "code entries")?.into_plain()?;
        if head.len() != 2 || (trip.ncols() != 3 && trip.nrows() > 0) {
            return Err(Error::Format("malformed code records".into()));
        }
        let index = |v: f64, bound: usize, what: &str| -> Result<usize> {
            if v >= 0.0 && v.fract() == 0.0 && (v as usize) < bound.max(1) {
                Ok(v as usize)
            } else {
                Err(Error::Format(format!("bad {what} index {v}")))
            }
        };
        let k = index(head[0], usize::MAX, "atom count")?;
        let n = index(head[1], usize::MAX, "signal count")?;
        let mut parts: Vec<(Vec<usize>, Vec<f64>)> = vec![(Vec::new(), Vec::new()); n];
        for r in 0..trip.nrows() {
            let i = index(trip[(r, 0)], n, "signal")?;
            let j = index(trip[(r, 1)], k, "atom")?;
            parts[i].0.push(j);
            parts[i].1.push(trip[(r, 2)]);
        }
        let codes = parts
            .into_iter()
            .map(|(s, v)| SparseCode::new(k, s, v))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::Format(e.to_string()))?;
        CodeMatrix::new(k, codes)
    }
}

impl Persist for LinearSvmModel {
    fn to_records(&self) -> Vec<Record> {
        let c = self.classes.len();
        let weights = DMatrix::from_fn(c, self.dim(), |k, j| self.weights[k][j]);
        let flags: Vec<f64> = self.support_flags.iter().map(|&s| if s { 1.0 } else { 0.0 }).collect();
        vec![
            Record::Text(self.classes.join("\n")),
            Record::matrix(weights),
            Record::column(&self.bias),
            Record::column(&flags),
        ]
    }

    fn from_records(records: &mut dyn Iterator<Item = Record>) -> Result<Self> {
        let labels = next(records, "class labels")?.into_text()?;
        let weights = next(records, "svm weights")?.into_plain()?;
        let bias = next(records, "svm bias")?.into_plain()?;
        let flags = next(records, "support flags")?.into_plain()?;
        let classes: Vec<String> = labels.split('\n').map(str::to_owned).collect();
        if weights.nrows() != classes.len() || bias.len() != classes.len() {
            return Err(Error::Format("svm blocks disagree on class count".into()));
        }
        Ok(LinearSvmModel {
            classes,
            weights: weights.row_iter().map(|r| r.iter().copied().collect()).collect(),
            bias: bias.as_slice().to_vec(),
            support_flags: flags.iter().map(|&f| f != 0.0).collect(),
        })
    }
}

impl Persist for GrayImage {
    fn to_records(&self) -> Vec<Record> {
        vec![Record::matrix(DMatrix::from_row_slice(self.height(), self.width(), self.pixels()))]
    }

    fn from_records(records: &mut dyn Iterator<Item = Record>) -> Result<Self> {
        let m = next(records, "image")?.into_plain()?;
        let mut data = Vec::with_capacity(m.len());
        for r in 0..m.nrows() {
            data.extend(m.row(r).iter());
        }
        GrayImage::new(m.nrows(), m.ncols(), data)
    }
}
