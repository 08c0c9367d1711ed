//! Closed-form approximate training of the low-rank EDLAE.
//!
//! Training runs in two steps. A full-rank *teacher* `B̂` with zero diagonal
//! is computed in closed form from the regularized Gram matrix. A rank-`k`
//! *student* `ÛV̂ᵀ` is then fitted to the teacher's predictions `Z·B̂`, with
//! the diagonal of the student assumed to be zero during the fit. That fit is
//! solved by the top-`k` eigenvectors `Q_k` of `B̂ᵀ(XᵀX + Λ)B̂`:
//! `V̂ = Q_k`, `Û = B̂·Q_k`.
//!
//! Here `Z` stacks `X` on top of `Λ^{1/2}` so that the penalized objective
//! becomes a plain least-squares fit, and `Λ = λ·I + p/(1−p)·diagM(diag(XᵀX))`
//! is the dropout-derived regularizer.

use crate::dataset::{GramMatrix, InteractionMatrix};
use crate::error::{Error, Result};
use crate::matrixops::{sym_inverse, top_k_eig_with, DenseMatrix, EigOptions};
use crate::par;

/// Hyper-parameters of one closed-form fit.
///
/// The student's diagonal is always assumed to be zero while fitting; no
/// other diagonal surrogate is supported.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EdlaeConfig {
    /// Uniform L2 weight λ ≥ 0.
    pub lambda: f64,
    /// Dropout probability p in [0, 1).
    pub dropout: f64,
    /// Rank k ≥ 1.
    pub rank: usize,
}

impl EdlaeConfig {
    pub fn new(lambda: f64, dropout: f64, rank: usize) -> Self {
        Self { lambda, dropout, rank }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dropout >= 0.0 && self.dropout < 1.0) {
            return Err(Error::InvalidDropout(self.dropout));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidConfig(format!("lambda must be finite and >= 0, got {}", self.lambda)));
        }
        if self.rank == 0 {
            return Err(Error::InvalidConfig("rank must be at least 1".into()));
        }
        Ok(())
    }
}

/// How the student Gram matrix `B̂ᵀ(XᵀX + Λ)B̂` is formed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum StudentGramMethod {
    /// `XᵀX + Λ − diagM(1 ⊘ diag(Ĉ))·(I + B̂)`, quadratic in `n`.
    #[default]
    Identity,
    /// Explicit triple product; cubic in `n`. For cross-checking.
    Direct,
}

#[derive(Debug, Clone, Default)]
pub struct TrainOptions {
    pub student_gram: StudentGramMethod,
    pub eig: EigOptions,
}

/// Diagonal of `Λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularizerDiag {
    values: Vec<f64>,
}

impl RegularizerDiag {
    /// `λ·I` without the dropout term.
    pub fn lambda_only(n: usize, lambda: f64) -> Result<Self> {
        regularizer(&vec![0.0; n], lambda, 0.0)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `Λ_ii = λ + p/(1−p) · gram_diag[i]`.
pub fn regularizer(gram_diag: &[f64], lambda: f64, dropout: f64) -> Result<RegularizerDiag> {
    if !(0.0..1.0).contains(&dropout) {
        return Err(Error::InvalidDropout(dropout));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidConfig(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    if gram_diag.iter().any(|&d| !(d >= 0.0)) {
        return Err(Error::InvalidConfig("gram diagonal must be non-negative".into()));
    }
    let ratio = dropout / (1.0 - dropout);
    Ok(RegularizerDiag {
        values: gram_diag.iter().map(|&d| lambda + ratio * d).collect(),
    })
}

/// Full-rank zero-diagonal teacher `B̂ = I − Ĉ·diagM(1 ⊘ diag(Ĉ))`, `Ĉ = (XᵀX + Λ)⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct FullRankModel {
    pub b: DenseMatrix,
    /// `diag(Ĉ)`, needed by the student Gram identity.
    pub c_diag: Vec<f64>,
}

impl FullRankModel {
    pub fn n(&self) -> usize {
        self.b.rows()
    }
}

/// Rank-k factorization `U·Vᵀ` (both `n × k`).
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankModel {
    pub u: DenseMatrix,
    pub v: DenseMatrix,
    pub config: EdlaeConfig,
    pub kind: ModelKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Zero-diagonal teacher distilled to rank k.
    Edlae,
    /// Unconstrained ridge solution truncated to rank k.
    Ridge,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Edlae => "edlae",
            ModelKind::Ridge => "ridge",
        }
    }
}

impl LowRankModel {
    pub fn n(&self) -> usize {
        self.u.rows()
    }

    pub fn rank(&self) -> usize {
        self.u.cols()
    }

    /// Materializes `U·Vᵀ`.
    pub fn product(&self) -> DenseMatrix {
        self.u.matmul_t(&self.v).expect("factor shapes agree")
    }
}

fn check_n(g: &GramMatrix, reg: &RegularizerDiag) -> Result<()> {
    if g.n() != reg.len() {
        return Err(Error::DimensionMismatch(format!(
            "gram is {n}x{n} but regularizer has {} entries",
            reg.len(),
            n = g.n()
        )));
    }
    Ok(())
}

/// `Ĉ = (G + Λ)⁻¹`.
pub(crate) fn regularized_inverse(g: &GramMatrix, reg: &RegularizerDiag) -> Result<DenseMatrix> {
    check_n(g, reg)?;
    sym_inverse(&g.as_matrix().add_diag(reg.values())?)
}

pub fn full_rank_teacher(g: &GramMatrix, reg: &RegularizerDiag) -> Result<FullRankModel> {
    let c = regularized_inverse(g, reg)?;
    let n = c.rows();
    let c_diag = c.diag();
    let inv_diag: Vec<f64> = c_diag.iter().map(|d| 1.0 / d).collect();
    let mut b = c;
    par::for_each_row(b.as_mut_slice(), n, |i, row| {
        for (j, x) in row.iter_mut().enumerate() {
            *x = if i == j { 0.0 } else { -*x * inv_diag[j] };
        }
    });
    Ok(FullRankModel { b, c_diag })
}

/// `B̂ᵀ(G + Λ)B̂`, symmetrized.
pub fn student_gram(teacher: &FullRankModel, g: &GramMatrix, reg: &RegularizerDiag) -> Result<DenseMatrix> {
    student_gram_with(teacher, g, reg, StudentGramMethod::Identity)
}

pub fn student_gram_with(
    teacher: &FullRankModel,
    g: &GramMatrix,
    reg: &RegularizerDiag,
    method: StudentGramMethod,
) -> Result<DenseMatrix> {
    check_n(g, reg)?;
    let n = g.n();
    if teacher.n() != n || teacher.c_diag.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "teacher is {}x{} but gram is {n}x{n}",
            teacher.n(),
            teacher.n()
        )));
    }
    let m = match method {
        StudentGramMethod::Identity => {
            let gm = g.as_matrix();
            let lam = reg.values();
            let mut m = DenseMatrix::zeros(n, n);
            par::for_each_row(m.as_mut_slice(), n, |i, row| {
                let scale = 1.0 / teacher.c_diag[i];
                let b_row = teacher.b.row(i);
                for (j, x) in row.iter_mut().enumerate() {
                    let eye = if i == j { 1.0 } else { 0.0 };
                    *x = gm[(i, j)] + eye * lam[i] - scale * (eye + b_row[j]);
                }
            });
            m
        }
        StudentGramMethod::Direct => {
            let a = g.as_matrix().add_diag(reg.values())?;
            teacher.b.t_matmul(&a.matmul(&teacher.b)?)?
        }
    };
    Ok(m.symmetrized())
}

/// Top-`k` eigenvectors `Q_k` of `student_gram`; returns `(teacher·Q_k, Q_k)`.
pub(crate) fn project_teacher(
    teacher: &DenseMatrix,
    student_gram: &DenseMatrix,
    k: usize,
    eig: &EigOptions,
) -> Result<(DenseMatrix, DenseMatrix)> {
    let n = teacher.rows();
    if student_gram.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "student gram is {}x{}, teacher is {n}x{n}",
            student_gram.rows(),
            student_gram.cols()
        )));
    }
    if k == 0 || k > n {
        return Err(Error::DimensionMismatch(format!("rank must satisfy 1 <= k <= n, got k={k}, n={n}")));
    }
    let q = top_k_eig_with(student_gram, k, eig)?.eigenvectors;
    let u = teacher.matmul(&q)?;
    Ok((u, q))
}

pub fn student_projection(
    teacher: &FullRankModel,
    student_gram: &DenseMatrix,
    config: &EdlaeConfig,
) -> Result<LowRankModel> {
    student_projection_with(teacher, student_gram, config, &EigOptions::default())
}

pub fn student_projection_with(
    teacher: &FullRankModel,
    student_gram: &DenseMatrix,
    config: &EdlaeConfig,
    eig: &EigOptions,
) -> Result<LowRankModel> {
    let (u, v) = project_teacher(&teacher.b, student_gram, config.rank, eig)?;
    Ok(LowRankModel {
        u,
        v,
        config: *config,
        kind: ModelKind::Edlae,
    })
}

/// Regularizer → teacher → student Gram → projection.
pub fn train_closed_form(g: &GramMatrix, config: &EdlaeConfig) -> Result<LowRankModel> {
    train_closed_form_with(g, config, &TrainOptions::default())
}

pub fn train_closed_form_with(g: &GramMatrix, config: &EdlaeConfig, opts: &TrainOptions) -> Result<LowRankModel> {
    config.validate()?;
    if config.rank > g.n() {
        return Err(Error::InvalidConfig(format!("rank {} exceeds item count {}", config.rank, g.n())));
    }
    let reg = regularizer(&g.diag(), config.lambda, config.dropout)?;
    let teacher = full_rank_teacher(g, &reg)?;
    let m = student_gram_with(&teacher, g, &reg, opts.student_gram)?;
    student_projection_with(&teacher, &m, config, &opts.eig)
}

/// `‖X − X·W‖_F² + ‖Λ^{1/2}·W‖_F²` for an arbitrary `n × n` weight matrix.
pub fn penalized_squared_error(x: &InteractionMatrix, reg: &RegularizerDiag, w: &DenseMatrix) -> Result<f64> {
    let n = x.num_items();
    if w.shape() != (n, n) || reg.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "data has {n} items, weights are {}x{}, regularizer has {}",
            w.rows(),
            w.cols(),
            reg.len()
        )));
    }
    let fit = par::ordered_sum(x.num_users(), |u| {
        let mut r = x.row_times(u, w);
        r.iter_mut().for_each(|v| *v = -*v);
        let (items, values) = x.row(u);
        for (&i, &v) in items.iter().zip(values) {
            r[i] += v;
        }
        r.iter().map(|v| v * v).sum()
    });
    let penalty = par::ordered_sum(n, |i| reg.values()[i] * w.row(i).iter().map(|v| v * v).sum::<f64>());
    Ok(fit + penalty)
}

/// The EDLAE training objective: the penalized squared error of `UVᵀ` with
/// its diagonal removed.
pub fn edlae_objective(x: &InteractionMatrix, reg: &RegularizerDiag, model: &LowRankModel) -> Result<f64> {
    penalized_squared_error(x, reg, &model.product().without_diag())
}
