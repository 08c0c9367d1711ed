//! Seeded random data for tests, benchmarks and the proposition runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::InteractionMatrix;
use crate::error::{Error, Result};
use crate::matrixops::DenseMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent `N(0, 1)` entries.
pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DenseMatrix {
    let values = (0..rows * cols).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    DenseMatrix::from_vec(rows, cols, values).expect("finite samples")
}

/// `P·Qᵀ/√rank + noise·E` with Gaussian `P`, `Q` and `E`.
pub fn low_rank_plus_noise<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    rank: usize,
    noise: f64,
    rng: &mut R,
) -> DenseMatrix {
    let p = gaussian_matrix(rows, rank, rng);
    let q = gaussian_matrix(cols, rank, rng);
    let e = gaussian_matrix(rows, cols, rng);
    let scale = 1.0 / (rank.max(1) as f64).sqrt();
    p.matmul_t(&q).expect("shapes").scale(scale).add(&e.scale(noise)).expect("shapes")
}

/// Bernoulli(`density`) 0/1 entries.
pub fn binary_sparse<R: Rng + ?Sized>(rows: usize, cols: usize, density: f64, rng: &mut R) -> DenseMatrix {
    let values = (0..rows * cols)
        .map(|_| if rng.random::<f64>() < density { 1.0 } else { 0.0 })
        .collect();
    DenseMatrix::from_vec(rows, cols, values).expect("finite samples")
}

/// Parameters of [`implicit_feedback`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImplicitFeedbackSpec {
    pub users: usize,
    pub items: usize,
    pub rank: usize,
    pub noise: f64,
    /// Target fraction of observed entries.
    pub density: f64,
    /// Zipf-like exponent of item popularity; 0 disables the popularity bias.
    pub popularity: f64,
    pub seed: u64,
}

impl Default for ImplicitFeedbackSpec {
    fn default() -> Self {
        Self {
            users: 2000,
            items: 300,
            rank: 16,
            noise: 0.5,
            density: 0.05,
            popularity: 1.0,
            seed: 17,
        }
    }
}

/// Binary interactions obtained by thresholding a low-rank-plus-noise score
/// matrix (plus a per-item popularity offset) at its `1 − density` quantile.
/// Every user is guaranteed at least two interactions.
pub fn implicit_feedback(spec: &ImplicitFeedbackSpec) -> Result<InteractionMatrix> {
    if spec.users == 0 || spec.items < 2 || spec.rank == 0 || !(spec.density > 0.0 && spec.density < 1.0) {
        return Err(Error::InvalidConfig(format!("bad synthetic data spec {spec:?}")));
    }
    let mut rng = rng(spec.seed);
    let mut scores = low_rank_plus_noise(spec.users, spec.items, spec.rank, spec.noise, &mut rng);
    for j in 0..spec.items {
        let bias = -spec.popularity * ((j + 1) as f64).ln();
        for u in 0..spec.users {
            scores[(u, j)] += bias;
        }
    }
    let mut sorted = scores.as_slice().to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let cut = ((spec.density * sorted.len() as f64) as usize).clamp(1, sorted.len() - 1);
    let threshold = sorted[cut];

    let rows: Vec<Vec<usize>> = (0..spec.users)
        .map(|u| {
            let row = scores.row(u);
            let mut items: Vec<usize> = (0..spec.items).filter(|&j| row[j] > threshold).collect();
            if items.len() < 2 {
                let mut order: Vec<usize> = (0..spec.items).collect();
                order.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
                items = order[..2].to_vec();
                items.sort_unstable();
            }
            items
        })
        .collect();
    InteractionMatrix::from_rows(spec.items, &rows)
}
