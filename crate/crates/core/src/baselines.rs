//! Unconstrained linear autoencoder baselines.
//!
//! The full-rank ridge solution `(XᵀX + Λ)⁻¹XᵀX` plays the teacher, and the
//! same eigenvector projection used for EDLAE yields its rank-k student. For
//! the unconstrained objective this projection is exact, not approximate.

use crate::dataset::{GramMatrix, InteractionMatrix};
use crate::edlae::{penalized_squared_error, project_teacher, regularized_inverse, EdlaeConfig, LowRankModel, ModelKind, RegularizerDiag};
use crate::error::{Error, Result};
use crate::matrixops::{DenseMatrix, EigOptions};
use crate::par;

/// Full-rank ridge weights `B = (XᵀX + Λ)⁻¹XᵀX`.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeModel {
    pub b: DenseMatrix,
}

/// Uses `(G + Λ)⁻¹G = I − (G + Λ)⁻¹Λ`, which avoids a second cubic product.
pub fn ridge_full_rank(g: &GramMatrix, reg: &RegularizerDiag) -> Result<RidgeModel> {
    let c = regularized_inverse(g, reg)?;
    let n = c.rows();
    let lam = reg.values();
    let mut b = c;
    par::for_each_row(b.as_mut_slice(), n, |i, row| {
        for (j, x) in row.iter_mut().enumerate() {
            let eye = if i == j { 1.0 } else { 0.0 };
            *x = eye - *x * lam[j];
        }
    });
    Ok(RidgeModel { b })
}

/// Rank-k ridge solution: `V` = top-k eigenvectors of `Bᵀ(G + Λ)B = G·B`, `U = B·V`.
pub fn ridge_low_rank(g: &GramMatrix, reg: &RegularizerDiag, k: usize) -> Result<LowRankModel> {
    ridge_low_rank_with(g, reg, k, &EigOptions::default())
}

pub fn ridge_low_rank_with(g: &GramMatrix, reg: &RegularizerDiag, k: usize, eig: &EigOptions) -> Result<LowRankModel> {
    if k == 0 || k > g.n() {
        return Err(Error::InvalidConfig(format!("rank must satisfy 1 <= k <= n, got k={k}, n={}", g.n())));
    }
    let ridge = ridge_full_rank(g, reg)?;
    let m = g.as_matrix().matmul(&ridge.b)?.symmetrized();
    let (u, v) = project_teacher(&ridge.b, &m, k, eig)?;
    Ok(LowRankModel {
        u,
        v,
        // Λ is opaque here; `train_ridge` records the hyper-parameters it came from.
        config: EdlaeConfig::new(0.0, 0.0, k),
        kind: ModelKind::Ridge,
    })
}

/// Trains the rank-k ridge baseline with the same `Λ` construction as EDLAE.
pub fn train_ridge(g: &GramMatrix, config: &EdlaeConfig) -> Result<LowRankModel> {
    train_ridge_with(g, config, &EigOptions::default())
}

pub fn train_ridge_with(g: &GramMatrix, config: &EdlaeConfig, eig: &EigOptions) -> Result<LowRankModel> {
    config.validate()?;
    let reg = crate::edlae::regularizer(&g.diag(), config.lambda, config.dropout)?;
    let mut model = ridge_low_rank_with(g, &reg, config.rank, eig)?;
    model.config = *config;
    Ok(model)
}

/// `‖X − X·UVᵀ‖_F² + ‖Λ^{1/2}·UVᵀ‖_F²`, diagonal included.
pub fn ridge_objective(x: &InteractionMatrix, reg: &RegularizerDiag, model: &LowRankModel) -> Result<f64> {
    penalized_squared_error(x, reg, &model.product())
}
