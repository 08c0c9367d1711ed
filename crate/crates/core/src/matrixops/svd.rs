use super::dense::{dot, norm, DenseMatrix};
use crate::error::{Error, Result};

pub const DEFAULT_ORACLE_CAP: usize = 512;

/// Thin SVD `M = left · diag(singular) · rightᵀ` with `r = min(m, n)` triplets.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// `m × r`.
    pub left: DenseMatrix,
    /// Descending, non-negative.
    pub singular: Vec<f64>,
    /// `n × r`.
    pub right: DenseMatrix,
}

impl SvdResult {
    pub fn rank_tol(&self, tol: f64) -> usize {
        let top = self.singular.first().copied().unwrap_or(0.0);
        self.singular.iter().filter(|&&s| s > tol * top.max(f64::MIN_POSITIVE)).count()
    }
}

/// Dense SVD oracle with the default cap.
pub fn dense_svd(m: &DenseMatrix) -> Result<SvdResult> {
    dense_svd_capped(m, DEFAULT_ORACLE_CAP)
}

/// One-sided (Hestenes) Jacobi SVD. Meant for verification on small
/// instances: refuses inputs with `min(m, n) > cap`.
pub fn dense_svd_capped(m: &DenseMatrix, cap: usize) -> Result<SvdResult> {
    let (rows, cols) = m.shape();
    let r = rows.min(cols);
    if r > cap {
        return Err(Error::OracleCapExceeded { cap, got: r });
    }
    if !m.all_finite() {
        return Err(Error::NonFinite("svd input"));
    }
    if rows < cols {
        let t = dense_svd_capped(&m.transpose(), cap)?;
        return Ok(SvdResult {
            left: t.right,
            singular: t.singular,
            right: t.left,
        });
    }
    // rows >= cols from here: orthogonalize the columns of W = M·V.
    let n = cols;
    let mut w: Vec<Vec<f64>> = (0..n).map(|j| m.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    let max_sweeps = 80;
    let mut converged = n < 2;
    for _ in 0..max_sweeps {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = dot(&w[p], &w[p]);
                let beta = dot(&w[q], &w[q]);
                let gamma = dot(&w[p], &w[q]);
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut w, p, q, c, s);
                rotate_pair(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence { iterations: max_sweeps });
    }

    let sigmas: Vec<f64> = w.iter().map(|c| norm(c)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sigmas[b].total_cmp(&sigmas[a]).then(a.cmp(&b)));

    let top = sigmas.iter().cloned().fold(0.0, f64::max);
    let null_tol = top * (rows as f64) * f64::EPSILON;
    let mut left_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut singular = Vec::with_capacity(n);
    let mut right = DenseMatrix::zeros(n, n);
    let mut pending = Vec::new();
    for (dst, &src) in order.iter().enumerate() {
        let s = sigmas[src];
        singular.push(s);
        right.set_column(dst, &v[src]);
        if s > null_tol {
            left_cols.push(w[src].iter().map(|x| x / s).collect());
        } else {
            left_cols.push(Vec::new());
            pending.push(dst);
        }
    }
    // Zero singular values: complete the left basis with unit vectors.
    let mut candidate = 0;
    for dst in pending {
        loop {
            assert!(candidate < rows, "could not complete the left singular basis");
            let mut u = vec![0.0; rows];
            u[candidate] = 1.0;
            candidate += 1;
            for _ in 0..2 {
                for other in left_cols.iter().filter(|c| !c.is_empty()) {
                    let c = dot(other, &u);
                    u.iter_mut().zip(other).for_each(|(x, o)| *x -= c * o);
                }
            }
            let nu = norm(&u);
            if nu > 1e-8 {
                u.iter_mut().for_each(|x| *x /= nu);
                left_cols[dst] = u;
                break;
            }
        }
    }
    let mut left = DenseMatrix::zeros(rows, n);
    for (j, c) in left_cols.iter().enumerate() {
        left.set_column(j, c);
    }
    Ok(SvdResult { left, singular, right })
}

fn rotate_pair(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = cols.split_at_mut(q);
    let cp = &mut head[p];
    let cq = &mut tail[0];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let a = *x;
        let b = *y;
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// Best rank-`k` Frobenius approximation `U_k · S_k · V_kᵀ`.
pub fn truncate_svd(s: &SvdResult, k: usize) -> Result<DenseMatrix> {
    let r = s.singular.len();
    if k > r {
        return Err(Error::DimensionMismatch(format!("truncation rank {k} exceeds {r}")));
    }
    let mut scaled = s.left.leading_columns(k);
    for i in 0..scaled.rows() {
        for j in 0..k {
            scaled[(i, j)] *= s.singular[j];
        }
    }
    scaled.matmul_t(&s.right.leading_columns(k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
    }

    fn orthonormal_cols(m: &DenseMatrix) -> f64 {
        m.t_matmul(m).unwrap().sub(&DenseMatrix::identity(m.cols())).unwrap().max_abs()
    }

    #[test]
    fn diagonal() {
        let s = dense_svd(&DenseMatrix::from_diag(&[2.0, 1.0])).unwrap();
        assert_eq!(s.singular, vec![2.0, 1.0]);
        let t = truncate_svd(&s, 1).unwrap();
        assert_eq!(t, DenseMatrix::from_diag(&[2.0, 0.0]));
    }

    #[test]
    fn zero_matrix() {
        let s = dense_svd(&DenseMatrix::zeros(4, 3)).unwrap();
        assert_eq!(s.singular, vec![0.0; 3]);
        assert!(orthonormal_cols(&s.left) < 1e-12);
        assert!(orthonormal_cols(&s.right) < 1e-12);
    }

    #[test]
    fn reconstruction_random_shapes() {
        for (r, c, seed) in [(5, 4, 1), (4, 5, 2), (7, 7, 3), (1, 6, 4)] {
            let m = random(r, c, seed);
            let s = dense_svd(&m).unwrap();
            let k = r.min(c);
            let back = truncate_svd(&s, k).unwrap();
            let rel = back.sub(&m).unwrap().frobenius_norm() / m.frobenius_norm();
            assert!(rel <= 1e-10, "{r}x{c}: {rel}");
            assert!(orthonormal_cols(&s.left) < 1e-10);
            assert!(orthonormal_cols(&s.right) < 1e-10);
            assert!(s.singular.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn rank_deficient_left_basis_is_completed() {
        let u = random(6, 1, 5);
        let v = random(4, 1, 6);
        let m = u.matmul_t(&v).unwrap();
        let s = dense_svd(&m).unwrap();
        assert_eq!(s.rank_tol(1e-10), 1);
        assert!(orthonormal_cols(&s.left) < 1e-10);
    }

    #[test]
    fn discarded_energy() {
        let m = random(6, 5, 7);
        let s = dense_svd(&m).unwrap();
        let t = truncate_svd(&s, 2).unwrap();
        let err = m.sub(&t).unwrap().frobenius_norm_sq();
        let tail: f64 = s.singular[2..].iter().map(|x| x * x).sum();
        assert!((err - tail).abs() <= 1e-10 * m.frobenius_norm_sq());
    }

    #[test]
    fn cap_and_bad_k() {
        let m = DenseMatrix::zeros(3, 3);
        assert!(matches!(dense_svd_capped(&m, 2), Err(Error::OracleCapExceeded { cap: 2, got: 3 })));
        let s = dense_svd(&m).unwrap();
        assert!(matches!(truncate_svd(&s, 4), Err(Error::DimensionMismatch(_))));
    }
}
