//! Symmetric eigendecomposition.
//!
//! Small matrices go through Householder tridiagonalization followed by
//! implicit QL iterations (the classic EISPACK `tred2`/`tql2` pair). Larger
//! ones use Lanczos with full reorthogonalization, extending the Krylov basis
//! until the top `k` Ritz pairs meet the residual tolerance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::dense::{dot, norm, DenseMatrix};
use super::SYMMETRY_TOL;
use crate::error::{Error, Result};
use crate::par;

/// Leading eigenpairs of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEigResult {
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// `n × k`, orthonormal columns; each column's largest-magnitude entry is non-negative.
    pub eigenvectors: DenseMatrix,
}

#[derive(Debug, Clone)]
pub struct EigOptions {
    /// Matrices with `n` at most this size use the dense solver.
    pub dense_cutoff: usize,
    /// Residual tolerance relative to `‖A‖_F`.
    pub tol: f64,
    /// Seed for the Lanczos start vector(s).
    pub seed: u64,
}

impl Default for EigOptions {
    fn default() -> Self {
        Self {
            dense_cutoff: 512,
            tol: 1e-10,
            seed: 0x5eed_1a2c,
        }
    }
}

/// The `k` largest eigenpairs of symmetric `a`, with residual `‖Av − λv‖ ≤ tol·‖A‖_F`.
pub fn top_k_eig(a: &DenseMatrix, k: usize, tol: f64) -> Result<SymEigResult> {
    top_k_eig_with(
        a,
        k,
        &EigOptions {
            tol,
            ..EigOptions::default()
        },
    )
}

pub fn top_k_eig_with(a: &DenseMatrix, k: usize, opts: &EigOptions) -> Result<SymEigResult> {
    let n = a.rows();
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if k == 0 || k > n {
        return Err(Error::DimensionMismatch(format!("need 1 <= k <= n, got k={k}, n={n}")));
    }
    if !a.is_symmetric(SYMMETRY_TOL * a.max_abs().max(1.0)) {
        return Err(Error::DimensionMismatch("eigendecomposition input is not symmetric".into()));
    }
    let mut result = if n <= opts.dense_cutoff {
        let (values, vectors) = dense_sym_eig(a)?;
        SymEigResult {
            eigenvalues: values[..k].to_vec(),
            eigenvectors: vectors.leading_columns(k),
        }
    } else {
        lanczos_top_k(a, k, opts)?
    };
    apply_sign_convention(&mut result.eigenvectors);
    Ok(result)
}

/// Full decomposition, eigenvalues descending, eigenvectors as columns.
pub fn dense_sym_eig(a: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    let n = a.rows();
    if n == 0 {
        return Ok((Vec::new(), DenseMatrix::zeros(0, 0)));
    }
    let mut v = a.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut v, &mut d, &mut e);
    // tred2 leaves the subdiagonal in e[1..]; tql2 wants e[i] coupling i and i+1.
    e.rotate_left(1);
    e[n - 1] = 0.0;
    let mut vt = v.transpose();
    tql2(&mut d, &mut e, &mut vt)?;
    Ok(sort_descending(d, &vt))
}

/// Makes the largest-magnitude entry of every column non-negative (first one on ties).
pub(crate) fn apply_sign_convention(vectors: &mut DenseMatrix) {
    for j in 0..vectors.cols() {
        let col = vectors.column(j);
        let mut best = 0;
        for (i, x) in col.iter().enumerate() {
            if x.abs() > col[best].abs() {
                best = i;
            }
        }
        if col[best] < 0.0 {
            let flipped: Vec<f64> = col.iter().map(|x| -x).collect();
            vectors.set_column(j, &flipped);
        }
    }
}

/// `rows` holds eigenvectors as rows, paired with `values`.
fn sort_descending(values: Vec<f64>, rows: &DenseMatrix) -> (Vec<f64>, DenseMatrix) {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]).then(i.cmp(&j)));
    let sorted_values = order.iter().map(|&i| values[i]).collect();
    let mut vectors = DenseMatrix::zeros(rows.cols(), n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, rows.row(src));
    }
    (sorted_values, vectors)
}

/// Householder reduction to tridiagonal form. On return `v` holds the
/// orthogonal transform, `d` the diagonal and `e[1..]` the subdiagonal.
fn tred2(v: &mut DenseMatrix, d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
                v[(j, i)] = 0.0;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[(j, i)] = f;
                g = e[j] + v[(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[(k, j)] * d[k];
                    e[k] += v[(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..n.saturating_sub(1) {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    v[(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = 0.0;
    }
    v[(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

/// Implicit QL on a symmetric tridiagonal matrix with diagonal `d` and
/// off-diagonal `e` (`e[i]` couples `i` and `i + 1`). Rotations are applied to
/// the rows of `vt`, which therefore end up holding eigenvectors as rows.
fn tql2(d: &mut [f64], e: &mut [f64], vt: &mut DenseMatrix) -> Result<()> {
    let n = d.len();
    let eps = f64::EPSILON;
    let max_iter = 60 * n.max(1);
    let mut f = 0.0;
    let mut tst1 = 0.0_f64;
    let mut iterations = 0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            loop {
                iterations += 1;
                if iterations > max_iter {
                    return Err(Error::NoConvergence { iterations });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    rotate_rows(vt, i, c, s);
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

#[inline]
fn rotate_rows(vt: &mut DenseMatrix, i: usize, c: f64, s: f64) {
    let cols = vt.cols();
    let data = vt.as_mut_slice();
    let (head, tail) = data.split_at_mut((i + 1) * cols);
    let ri = &mut head[i * cols..];
    let rj = &mut tail[..cols];
    for (a, b) in ri.iter_mut().zip(rj.iter_mut()) {
        let h = *b;
        *b = s * *a + c * h;
        *a = c * *a - s * h;
    }
}

/// Eigenpairs of the tridiagonal matrix (diag `alpha`, off-diag `beta`), descending.
fn tridiagonal_eig(alpha: &[f64], beta: &[f64]) -> Result<(Vec<f64>, DenseMatrix)> {
    let m = alpha.len();
    let mut d = alpha.to_vec();
    let mut e = vec![0.0; m];
    e[..m - 1].copy_from_slice(&beta[..m - 1]);
    let mut vt = DenseMatrix::identity(m);
    tql2(&mut d, &mut e, &mut vt)?;
    Ok(sort_descending(d, &vt))
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    v
}

/// Removes the components along `basis` (two passes of classical Gram-Schmidt).
fn orthogonalize(w: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        let coeffs = par::map_range(basis.len(), |i| dot(&basis[i], w));
        for (q, c) in basis.iter().zip(coeffs) {
            for (x, qi) in w.iter_mut().zip(q) {
                *x -= c * qi;
            }
        }
    }
}

fn lanczos_top_k(a: &DenseMatrix, k: usize, opts: &EigOptions) -> Result<SymEigResult> {
    let n = a.rows();
    let a_norm = a.frobenius_norm();
    if a_norm == 0.0 {
        // Every vector is an eigenvector of the zero matrix.
        let mut vectors = DenseMatrix::zeros(n, k);
        for j in 0..k {
            vectors[(j, j)] = 1.0;
        }
        return Ok(SymEigResult {
            eigenvalues: vec![0.0; k],
            eigenvectors: vectors,
        });
    }
    let target = opts.tol * a_norm;
    let breakdown = 1e-13 * a_norm;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut basis: Vec<Vec<f64>> = vec![random_unit(&mut rng, n)];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut next_check = n.min((2 * k).max(k + 20));

    loop {
        let j = basis.len() - 1;
        let mut w = a.matvec(&basis[j])?;
        let aj = dot(&basis[j], &w);
        alpha.push(aj);
        orthogonalize(&mut w, &basis);
        let b = norm(&w);

        let m = basis.len();
        if m >= next_check || m == n || b <= breakdown {
            let (ritz_values, y) = tridiagonal_eig(&alpha, &beta_padded(&beta, m))?;
            let estimate_ok = (0..k.min(m)).all(|i| (b * y[(m - 1, i)]).abs() <= target);
            if m >= k && (estimate_ok || m == n) {
                let vectors = ritz_vectors(&basis, &y, k);
                let values = ritz_values[..k].to_vec();
                if residuals_ok(a, &values, &vectors, target)? {
                    return Ok(SymEigResult {
                        eigenvalues: values,
                        eigenvectors: vectors,
                    });
                }
                if m == n {
                    return Err(Error::NoConvergence { iterations: m });
                }
            }
            next_check = n.min(m + (m / 2).max(8));
        }
        if m == n {
            return Err(Error::NoConvergence { iterations: m });
        }

        if b <= breakdown {
            // Invariant subspace found; continue from a fresh direction.
            let mut q = random_unit(&mut rng, n);
            orthogonalize(&mut q, &basis);
            let nq = norm(&q);
            q.iter_mut().for_each(|x| *x /= nq);
            beta.push(0.0);
            basis.push(q);
        } else {
            w.iter_mut().for_each(|x| *x /= b);
            beta.push(b);
            basis.push(w);
        }
    }
}

fn beta_padded(beta: &[f64], m: usize) -> Vec<f64> {
    let mut out = beta[..m.saturating_sub(1).min(beta.len())].to_vec();
    out.resize(m, 0.0);
    out
}

fn ritz_vectors(basis: &[Vec<f64>], y: &DenseMatrix, k: usize) -> DenseMatrix {
    let n = basis[0].len();
    let m = basis.len();
    let mut out = DenseMatrix::zeros(n, k);
    par::for_each_row(out.as_mut_slice(), k, |r, row| {
        for (i, q) in basis.iter().enumerate().take(m) {
            let qr = q[r];
            for (j, o) in row.iter_mut().enumerate() {
                *o += qr * y[(i, j)];
            }
        }
    });
    out
}

fn residuals_ok(a: &DenseMatrix, values: &[f64], vectors: &DenseMatrix, target: f64) -> Result<bool> {
    for (j, &lambda) in values.iter().enumerate() {
        let v = vectors.column(j);
        let av = a.matvec(&v)?;
        let r: f64 = av
            .iter()
            .zip(&v)
            .map(|(x, y)| (x - lambda * y).powi(2))
            .sum::<f64>()
            .sqrt();
        if r > target {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_sym(n: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = DenseMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        b.add(&b.transpose()).unwrap().scale(0.5)
    }

    fn check_pairs(a: &DenseMatrix, r: &SymEigResult, tol: f64) {
        let fro = a.frobenius_norm();
        for (j, &l) in r.eigenvalues.iter().enumerate() {
            let v = r.eigenvectors.column(j);
            let av = a.matvec(&v).unwrap();
            let res: f64 = av.iter().zip(&v).map(|(x, y)| (x - l * y).powi(2)).sum::<f64>().sqrt();
            assert!(res <= tol * fro.max(1.0), "residual {res}");
        }
        let qtq = r.eigenvectors.t_matmul(&r.eigenvectors).unwrap();
        let dev = qtq.sub(&DenseMatrix::identity(r.eigenvalues.len())).unwrap().max_abs();
        assert!(dev <= 1e-10, "orthonormality {dev}");
        assert!(r.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn diagonal_case() {
        let a = DenseMatrix::from_diag(&[3.0, 2.0, 1.0]);
        let r = top_k_eig(&a, 2, 1e-12).unwrap();
        assert_eq!(r.eigenvalues.len(), 2);
        assert!((r.eigenvalues[0] - 3.0).abs() < 1e-14 && (r.eigenvalues[1] - 2.0).abs() < 1e-14);
        let e = DenseMatrix::from_rows(&[&[1.0, 0.0], &[0.0, 1.0], &[0.0, 0.0]]);
        assert!(r.eigenvectors.sub(&e).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn two_by_two_hand_case() {
        // [[2,1],[1,2]]: characteristic polynomial (2-λ)² - 1 → λ ∈ {3, 1}, top vector (1,1)/√2.
        let a = DenseMatrix::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let r = top_k_eig(&a, 1, 1e-12).unwrap();
        assert!((r.eigenvalues[0] - 3.0).abs() < 1e-14);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((r.eigenvectors[(0, 0)] - s).abs() < 1e-14);
        assert!((r.eigenvectors[(1, 0)] - s).abs() < 1e-14);
    }

    #[test]
    fn dense_path_random() {
        let a = random_sym(40, 1);
        let r = top_k_eig(&a, 40, 1e-10).unwrap();
        check_pairs(&a, &r, 1e-12);
        let sum: f64 = r.eigenvalues.iter().sum();
        assert!((sum - a.trace()).abs() < 1e-10);
    }

    #[test]
    fn lanczos_matches_dense() {
        let opts = EigOptions {
            dense_cutoff: 0,
            ..EigOptions::default()
        };
        for (n, k) in [(30, 3), (60, 10), (25, 25)] {
            let a = random_sym(n, n as u64);
            let dense = top_k_eig(&a, k, 1e-10).unwrap();
            let lan = top_k_eig_with(&a, k, &opts).unwrap();
            check_pairs(&a, &lan, 1e-10);
            for (x, y) in dense.eigenvalues.iter().zip(&lan.eigenvalues) {
                assert!((x - y).abs() <= 1e-8 * x.abs().max(1.0), "{x} vs {y}");
            }
        }
    }

    #[test]
    fn lanczos_handles_low_rank_and_zero() {
        let opts = EigOptions {
            dense_cutoff: 0,
            ..EigOptions::default()
        };
        // Rank-2 matrix: Krylov space breaks down after two steps.
        let n = 20;
        let u: Vec<f64> = (0..n).map(|i| (i as f64 + 1.0).sqrt()).collect();
        let w: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let a = DenseMatrix::from_fn(n, n, |i, j| u[i] * u[j] + 0.5 * w[i] * w[j]);
        let r = top_k_eig_with(&a, 4, &opts).unwrap();
        check_pairs(&a, &r, 1e-10);
        assert!(r.eigenvalues[2].abs() < 1e-10);

        let z = DenseMatrix::zeros(5, 5);
        let r = top_k_eig_with(&z, 2, &opts).unwrap();
        assert_eq!(r.eigenvalues, vec![0.0, 0.0]);
    }

    #[test]
    fn sign_convention_holds() {
        let a = random_sym(15, 9);
        let r = top_k_eig(&a, 5, 1e-10).unwrap();
        for j in 0..5 {
            let col = r.eigenvectors.column(j);
            let big = col.iter().cloned().fold(0.0_f64, |m, x| if x.abs() > m.abs() { x } else { m });
            assert!(big >= 0.0);
        }
    }

    #[test]
    fn rejects_bad_k() {
        let a = DenseMatrix::identity(3);
        assert!(matches!(top_k_eig(&a, 0, 1e-10), Err(Error::DimensionMismatch(_))));
        assert!(matches!(top_k_eig(&a, 4, 1e-10), Err(Error::DimensionMismatch(_))));
    }
}
