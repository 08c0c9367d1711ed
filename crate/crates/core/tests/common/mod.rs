//! Reference implementations shared by the integration tests. None of them
//! call into the crate's numerics: linear algebra goes through nalgebra and
//! the training objective is minimized by plain gradient descent.

#![allow(dead_code)]

use edlae::matrixops::DenseMatrix;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn to_na(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

pub fn from_na(m: &DMatrix<f64>) -> DenseMatrix {
    DenseMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

pub fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn binary(rows: usize, cols: usize, density: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| if rng.random::<f64>() < density { 1.0 } else { 0.0 })
}

/// `λ + p/(1−p)·G_ii`.
pub fn lambda_diag(g: &DMatrix<f64>, lambda: f64, p: f64) -> Vec<f64> {
    (0..g.nrows()).map(|i| lambda + p / (1.0 - p) * g[(i, i)]).collect()
}

/// Zero-diagonal teacher by explicit inversion: `B = I − C·diag(1/diag C)`.
pub fn teacher(g: &DMatrix<f64>, lam: &[f64]) -> DMatrix<f64> {
    let n = g.nrows();
    let mut a = g.clone();
    for i in 0..n {
        a[(i, i)] += lam[i];
    }
    let c = a.try_inverse().expect("regularized gram is invertible");
    DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { -c[(i, j)] / c[(j, j)] })
}

/// Best rank-`k` approximation via nalgebra's SVD.
pub fn truncated(m: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let u = svd.u.as_ref().expect("u");
    let vt = svd.v_t.as_ref().expect("v_t");
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for &i in order.iter().take(k) {
        out += svd.singular_values[i] * u.column(i) * vt.row(i);
    }
    out
}

pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// The training objective written through the Gram matrix:
/// `tr(G) − 2⟨G, D⟩ + ⟨D, (G + Λ)·D⟩` with `D = offdiag(U·Vᵀ)`.
///
/// With `masked == false` the diagonal is kept, which gives the
/// unconstrained (ridge) objective instead.
pub struct GramObjective {
    g: DMatrix<f64>,
    a: DMatrix<f64>,
    trace: f64,
    masked: bool,
}

impl GramObjective {
    pub fn new(g: &DMatrix<f64>, lam: &[f64]) -> Self {
        let mut a = g.clone();
        for (i, l) in lam.iter().enumerate() {
            a[(i, i)] += l;
        }
        Self {
            g: g.clone(),
            a,
            trace: g.trace(),
            masked: true,
        }
    }

    pub fn unconstrained(g: &DMatrix<f64>, lam: &[f64]) -> Self {
        Self {
            masked: false,
            ..Self::new(g, lam)
        }
    }

    fn d(&self, u: &DMatrix<f64>, v: &DMatrix<f64>) -> DMatrix<f64> {
        let mut d = u * v.transpose();
        if self.masked {
            d.fill_diagonal(0.0);
        }
        d
    }

    pub fn value_of(&self, d: &DMatrix<f64>) -> f64 {
        self.trace - 2.0 * self.g.dot(d) + d.dot(&(&self.a * d))
    }

    pub fn value(&self, u: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
        self.value_of(&self.d(u, v))
    }

    /// `(f, ∂f/∂U, ∂f/∂V)`.
    pub fn gradient(&self, u: &DMatrix<f64>, v: &DMatrix<f64>) -> (f64, DMatrix<f64>, DMatrix<f64>) {
        let d = self.d(u, v);
        let ad = &self.a * &d;
        let f = self.trace - 2.0 * self.g.dot(&d) + d.dot(&ad);
        let mut gamma = 2.0 * (ad - &self.g);
        if self.masked {
            gamma.fill_diagonal(0.0);
        }
        let gu = &gamma * v;
        let gv = gamma.transpose() * u;
        (f, gu, gv)
    }

    /// Best value over `restarts` runs of gradient descent with Armijo
    /// backtracking from Gaussian starting points.
    pub fn minimize(&self, k: usize, restarts: usize, iterations: usize, seed: u64) -> f64 {
        let n = self.g.nrows();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = (self.g.diagonal().mean().max(1e-12)).sqrt().recip();
        let mut best = f64::INFINITY;
        for _ in 0..restarts {
            let mut u = gaussian(n, k, &mut rng) * scale;
            let mut v = gaussian(n, k, &mut rng) * scale;
            let mut step = 1.0 / self.a.norm();
            let (mut f, mut gu, mut gv) = self.gradient(&u, &v);
            for _ in 0..iterations {
                let sq = gu.norm_squared() + gv.norm_squared();
                if sq < 1e-24 {
                    break;
                }
                loop {
                    let nu = &u - step * &gu;
                    let nv = &v - step * &gv;
                    let nf = self.value(&nu, &nv);
                    if nf <= f - 0.5 * step * sq {
                        u = nu;
                        v = nv;
                        step *= 2.0;
                        break;
                    }
                    step *= 0.5;
                    if step < 1e-30 {
                        break;
                    }
                }
                let next = self.gradient(&u, &v);
                if next.0 > f {
                    break;
                }
                (f, gu, gv) = next;
            }
            best = best.min(f);
        }
        best
    }
}

/// Complete ranking: every item sorted by descending score, ties by index,
/// masked (`-∞`) items dropped.
pub fn full_ranking(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).filter(|&i| scores[i] != f64::NEG_INFINITY).collect();
    idx.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
    idx
}

pub fn brute_ndcg(scores: &[f64], relevant: &[usize], cutoff: usize) -> f64 {
    let ranking = full_ranking(scores);
    let mut dcg = 0.0;
    for (r, item) in ranking.iter().enumerate() {
        if r < cutoff && relevant.contains(item) {
            dcg += 1.0 / ((r + 2) as f64).log2();
        }
    }
    let mut idcg = 0.0;
    for r in 0..relevant.len().min(cutoff) {
        idcg += 1.0 / ((r + 2) as f64).log2();
    }
    dcg / idcg
}

pub fn brute_recall(scores: &[f64], relevant: &[usize], cutoff: usize) -> f64 {
    let ranking = full_ranking(scores);
    let hits = ranking.iter().take(cutoff).filter(|i| relevant.contains(i)).count();
    hits as f64 / relevant.len().min(cutoff) as f64
}
