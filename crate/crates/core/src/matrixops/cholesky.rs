use super::dense::{dot, DenseMatrix};
use super::SYMMETRY_TOL;
use crate::error::{Error, Result};
use crate::par;

/// Lower-triangular Cholesky factor `L` with `A = L·Lᵀ`.
pub(crate) fn cholesky(a: &DenseMatrix) -> Result<DenseMatrix> {
    let n = a.rows();
    let scale = a.diag().iter().fold(0.0_f64, |m, d| m.max(d.abs())).max(f64::MIN_POSITIVE);
    let threshold = f64::EPSILON * scale;
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let lj = &l.row(j)[..j];
        let pivot = a[(j, j)] - dot(lj, lj);
        if !(pivot > threshold) {
            return Err(Error::NotPositiveDefinite { row: j, pivot });
        }
        let d = pivot.sqrt();
        l[(j, j)] = d;
        let lj: Vec<f64> = l.row(j)[..j].to_vec();
        // Column j below the diagonal; each row only reads its own prefix and row j.
        let below = &mut l.as_mut_slice()[(j + 1) * n..];
        par::for_each_row(below, n, |r, row| {
            let i = j + 1 + r;
            row[j] = (a[(i, j)] - dot(&row[..j], &lj)) / d;
        });
    }
    Ok(l)
}

/// Inverse of a lower-triangular matrix, by forward substitution per column.
fn lower_inverse(l: &DenseMatrix) -> DenseMatrix {
    let n = l.rows();
    // Row j of `inv_t` holds column j of L⁻¹.
    let mut inv_t = DenseMatrix::zeros(n, n);
    par::for_each_row(inv_t.as_mut_slice(), n, |j, col| {
        col[j] = 1.0 / l[(j, j)];
        for i in (j + 1)..n {
            let row = l.row(i);
            let s: f64 = (j..i).map(|p| row[p] * col[p]).sum();
            col[i] = -s / row[i];
        }
    });
    inv_t
}

/// Inverse of a symmetric positive-definite matrix via Cholesky.
///
/// The result is exactly symmetric: only the upper triangle of `L⁻ᵀL⁻¹` is
/// computed and then mirrored.
pub fn sym_inverse(a: &DenseMatrix) -> Result<DenseMatrix> {
    if !a.is_square() || a.rows() == 0 {
        return Err(Error::DimensionMismatch(format!(
            "sym_inverse needs a non-empty square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if !a.is_symmetric(SYMMETRY_TOL * a.max_abs().max(1.0)) {
        return Err(Error::DimensionMismatch("sym_inverse input is not symmetric".into()));
    }
    let n = a.rows();
    let l = cholesky(a)?;
    // Row j of `m` is column j of L⁻¹, so A⁻¹[i][j] = Σ_p L⁻¹[p][i]·L⁻¹[p][j] = m_i · m_j
    // where only entries p ≥ max(i, j) are non-zero.
    let m = lower_inverse(&l);
    let mut inv = DenseMatrix::zeros(n, n);
    par::for_each_row(inv.as_mut_slice(), n, |i, row| {
        let mi = m.row(i);
        for (j, out) in row.iter_mut().enumerate().skip(i) {
            let mj = m.row(j);
            *out = dot(&mi[j..], &mj[j..]);
        }
    });
    for i in 0..n {
        for j in 0..i {
            inv[(i, j)] = inv[(j, i)];
        }
    }
    if !inv.all_finite() {
        return Err(Error::NonFinite("matrix inverse"));
    }
    Ok(inv)
}
