use crate::error::{Error, Result};
use crate::matrixops::DenseMatrix;

/// Sparse `users × items` interaction matrix in CSR layout.
///
/// Rows are users, columns are items; within a row, item indices are strictly
/// increasing and every stored value is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionMatrix {
    num_users: usize,
    num_items: usize,
    row_ptr: Vec<usize>,
    items: Vec<usize>,
    values: Vec<f64>,
    binarized: bool,
}

impl InteractionMatrix {
    /// Builds the matrix from `(user, item, value)` triples in any order.
    /// Duplicate pairs are summed; with `binarize` every stored value becomes 1.
    pub fn from_triples<I>(num_users: usize, num_items: usize, triples: I, binarize: bool) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut triples: Vec<(usize, usize, f64)> = triples.into_iter().collect();
        for &(u, i, v) in &triples {
            if u >= num_users || i >= num_items {
                return Err(Error::DimensionMismatch(format!(
                    "entry ({u}, {i}) outside {num_users}x{num_items}"
                )));
            }
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!("interaction value must be positive and finite, got {v}")));
            }
        }
        triples.sort_by_key(|t| (t.0, t.1));

        let mut row_ptr = vec![0usize; num_users + 1];
        let mut items = Vec::with_capacity(triples.len());
        let mut values: Vec<f64> = Vec::with_capacity(triples.len());
        let mut last: Option<(usize, usize)> = None;
        for (u, i, v) in triples {
            if last == Some((u, i)) {
                *values.last_mut().expect("duplicate follows an entry") += v;
                continue;
            }
            last = Some((u, i));
            row_ptr[u + 1] += 1;
            items.push(i);
            values.push(v);
        }
        for u in 0..num_users {
            row_ptr[u + 1] += row_ptr[u];
        }
        if binarize {
            values.iter_mut().for_each(|v| *v = 1.0);
        }
        Ok(Self {
            num_users,
            num_items,
            row_ptr,
            items,
            values,
            binarized: binarize,
        })
    }

    /// Binary matrix from per-user item lists.
    pub fn from_rows(num_items: usize, rows: &[Vec<usize>]) -> Result<Self> {
        let triples = rows
            .iter()
            .enumerate()
            .flat_map(|(u, r)| r.iter().map(move |&i| (u, i, 1.0)));
        Self::from_triples(rows.len(), num_items, triples, true)
    }

    /// Stores the positive entries of a dense matrix.
    pub fn from_dense(m: &DenseMatrix, binarize: bool) -> Result<Self> {
        let mut triples = Vec::new();
        for u in 0..m.rows() {
            for (i, &v) in m.row(u).iter().enumerate() {
                if v > 0.0 {
                    triples.push((u, i, v));
                } else if v < 0.0 {
                    return Err(Error::InvalidConfig("interaction values must be non-negative".into()));
                }
            }
        }
        Self::from_triples(m.rows(), m.cols(), triples, binarize)
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn nnz(&self) -> usize {
        self.items.len()
    }

    pub fn is_binarized(&self) -> bool {
        self.binarized
    }

    /// Item indices and values of user `u`.
    pub fn row(&self, u: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.row_ptr[u], self.row_ptr[u + 1]);
        (&self.items[s..e], &self.values[s..e])
    }

    pub fn row_len(&self, u: usize) -> usize {
        self.row_ptr[u + 1] - self.row_ptr[u]
    }

    /// All entries as `(user, item, value)`, sorted by user then item.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.num_users).flat_map(move |u| {
            let (items, values) = self.row(u);
            items.iter().zip(values).map(move |(&i, &v)| (u, i, v))
        })
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.num_users, self.num_items);
        for (u, i, v) in self.entries() {
            d[(u, i)] = v;
        }
        d
    }

    /// Sub-matrix with the given users as rows, in the given order.
    pub fn select_users(&self, users: &[usize]) -> InteractionMatrix {
        let mut row_ptr = Vec::with_capacity(users.len() + 1);
        row_ptr.push(0);
        let mut items = Vec::new();
        let mut values = Vec::new();
        for &u in users {
            let (it, va) = self.row(u);
            items.extend_from_slice(it);
            values.extend_from_slice(va);
            row_ptr.push(items.len());
        }
        InteractionMatrix {
            num_users: users.len(),
            num_items: self.num_items,
            row_ptr,
            items,
            values,
            binarized: self.binarized,
        }
    }

    /// `x · dense` for the sparse row of user `u`; `dense` has `num_items` rows.
    pub(crate) fn row_times(&self, u: usize, dense: &DenseMatrix) -> Vec<f64> {
        let mut out = vec![0.0; dense.cols()];
        let (items, values) = self.row(u);
        for (&i, &v) in items.iter().zip(values) {
            for (o, &d) in out.iter_mut().zip(dense.row(i)) {
                *o += v * d;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_duplicates() {
        let x = InteractionMatrix::from_triples(2, 2, vec![(0, 0, 1.0), (0, 0, 2.0), (1, 1, 1.0)], false).unwrap();
        assert_eq!(x.nnz(), 2);
        assert_eq!(x.row(0), (&[0usize][..], &[3.0][..]));
        let b = InteractionMatrix::from_triples(2, 2, vec![(0, 0, 1.0), (0, 0, 2.0)], true).unwrap();
        assert_eq!(b.row(0).1, &[1.0]);
        assert!(b.is_binarized());
    }

    #[test]
    fn rejects_out_of_range_and_nonpositive() {
        assert!(InteractionMatrix::from_triples(1, 1, vec![(0, 1, 1.0)], true).is_err());
        assert!(InteractionMatrix::from_triples(1, 1, vec![(0, 0, 0.0)], true).is_err());
        assert!(InteractionMatrix::from_triples(1, 1, vec![(0, 0, f64::NAN)], true).is_err());
    }

    #[test]
    fn select_and_dense() {
        let x = InteractionMatrix::from_rows(3, &[vec![0, 2], vec![1], vec![]]).unwrap();
        let s = x.select_users(&[1, 0]);
        assert_eq!(s.num_users(), 2);
        assert_eq!(s.row(0).0, &[1]);
        assert_eq!(s.row(1).0, &[0, 2]);
        let d = x.to_dense();
        assert_eq!(d.row(0), &[1.0, 0.0, 1.0]);
        assert_eq!(x.entries().count(), 3);
        assert_eq!(x.row_len(2), 0);
    }
}
