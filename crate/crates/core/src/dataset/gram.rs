use super::InteractionMatrix;
use crate::error::{Error, Result};
use crate::matrixops::DenseMatrix;
use crate::par;

/// Dense item-item co-occurrence matrix `XᵀX`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    matrix: DenseMatrix,
}

impl GramMatrix {
    /// Wraps a precomputed matrix; it must be square, symmetric and have a
    /// non-negative diagonal.
    pub fn from_dense(matrix: DenseMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "gram matrix must be square, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        if !matrix.is_symmetric(1e-10 * matrix.max_abs().max(1.0)) {
            return Err(Error::InvalidConfig("gram matrix must be symmetric".into()));
        }
        if matrix.diag().iter().any(|&d| d < 0.0) {
            return Err(Error::InvalidConfig("gram matrix diagonal must be non-negative".into()));
        }
        if !matrix.all_finite() {
            return Err(Error::NonFinite("gram matrix"));
        }
        Ok(Self { matrix })
    }

    pub fn n(&self) -> usize {
        self.matrix.rows()
    }

    pub fn as_matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.matrix
    }

    pub fn diag(&self) -> Vec<f64> {
        self.matrix.diag()
    }
}

/// `XᵀX`, exactly symmetric.
///
/// Each output row `a` is accumulated from the users that contain item `a`,
/// in ascending user order, over items `b ≥ a`; the lower triangle is then
/// mirrored. Rows are independent, so the result is the same for any number
/// of threads.
pub fn gram(x: &InteractionMatrix) -> GramMatrix {
    let n = x.num_items();
    // Column-major view: for every item, the (user, value) pairs containing it.
    let mut by_item: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (u, i, v) in x.entries() {
        by_item[i].push((u, v));
    }
    let mut g = DenseMatrix::zeros(n, n);
    par::for_each_row(g.as_mut_slice(), n, |a, row| {
        for &(u, va) in &by_item[a] {
            let (items, values) = x.row(u);
            let start = items.partition_point(|&b| b < a);
            for (&b, &vb) in items[start..].iter().zip(&values[start..]) {
                row[b] += va * vb;
            }
        }
    });
    for a in 0..n {
        for b in 0..a {
            g[(a, b)] = g[(b, a)];
        }
    }
    GramMatrix { matrix: g }
}
