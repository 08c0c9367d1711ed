//! Dense linear algebra kernel: SPD inversion, top-k symmetric eigenpairs,
//! and a Jacobi SVD used as a verification oracle.

mod cholesky;
mod dense;
mod eigen;
mod svd;

pub use cholesky::sym_inverse;
pub use dense::DenseMatrix;
pub use eigen::{dense_sym_eig, top_k_eig, top_k_eig_with, EigOptions, SymEigResult};
pub use svd::{dense_svd, dense_svd_capped, truncate_svd, SvdResult, DEFAULT_ORACLE_CAP};


/// Symmetry check tolerance, relative to the largest absolute entry.
pub(crate) const SYMMETRY_TOL: f64 = 1e-10;
