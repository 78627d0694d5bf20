//! Sparse coding and dictionary learning.
//!
//! Dictionaries store atoms as matrix columns. Codes are kept sparse (support
//! plus values) since every code has at most `L` nonzeros out of `K` slots.

mod code;
mod dictionary;
mod ksvd;
mod omp;
mod optimal_directions;

pub use code::{rescale_code_blur_to_sharp, rescale_code_sharp_to_blur, CodeMatrix, SparseCode};
pub use dictionary::{normalize_dictionary, Dictionary, NormalizedDictionary, DEGENERATE_NORM};
pub use ksvd::{ksvd_learn, KsvdConfig, KsvdResult};
pub use omp::{omp_encode, OmpEncoder, OMP_RESIDUAL_TOL};
pub use optimal_directions::{mod_solve, OptimalDirections, RIDGE_CONDITION_LIMIT};
