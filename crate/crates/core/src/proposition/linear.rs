use crate::error::{Error, Result};
use crate::matrixops::{dense_svd, DenseMatrix, SvdResult};

/// Best rank-`k` linear autoencoder `X ↦ X·V_k·V_kᵀ` (encoder `V_k`, decoder
/// `V_kᵀ`), one of possibly many optimal weight pairs.
#[derive(Debug, Clone)]
pub struct LinearOptimum {
    /// Top-`k` right singular vectors of `X`, `n × k`.
    pub v_k: DenseMatrix,
    /// Sum of the squared discarded singular values.
    pub se: f64,
    pub svd: SvdResult,
}

impl LinearOptimum {
    /// `X·V_k·V_kᵀ`.
    pub fn reconstruct(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        x.matmul(&self.v_k)?.matmul_t(&self.v_k)
    }
}

pub fn linear_ae_optimum(x: &DenseMatrix, k: usize) -> Result<LinearOptimum> {
    let (m, n) = x.shape();
    if k == 0 || k >= m.min(n) {
        return Err(Error::InvalidConfig(format!(
            "bottleneck must satisfy 1 <= k < min(m, n), got k={k}, m={m}, n={n}"
        )));
    }
    let svd = dense_svd(x)?;
    let se = svd.singular[k..].iter().map(|s| s * s).sum();
    Ok(LinearOptimum {
        v_k: svd.right.leading_columns(k),
        se,
        svd,
    })
}
