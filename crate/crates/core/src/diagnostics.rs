//! Self-checks of the closed-form pipeline on random instances.
//!
//! Each suite draws seeded Gaussian data, runs the production code, and
//! measures one algebraic property against a tolerance. The CLI `verify`
//! command runs them next to the proposition trials.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::GramMatrix;
use crate::edlae::{
    full_rank_teacher, regularizer, student_gram_with, student_projection, EdlaeConfig, FullRankModel,
    LowRankModel, RegularizerDiag, StudentGramMethod,
};
use crate::error::Result;
use crate::matrixops::{dense_svd, truncate_svd, DenseMatrix};
use crate::proposition::{
    finite_difference_gradient, full_arch_grid, linear_ae_optimum, loss_and_gradient, max_relative_error,
    DeepAEParams,
};
use crate::synthetic;

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CheckResult {
    pub name: String,
    pub cases: usize,
    /// Largest measured violation, in the suite's own units.
    pub worst: f64,
    pub tol: f64,
    pub passed: bool,
}

impl CheckResult {
    fn new(name: &str, measurements: &[f64], tol: f64) -> Self {
        let worst = measurements.iter().copied().fold(0.0f64, |a, b| if b.is_nan() { f64::NAN } else { a.max(b) });
        Self {
            name: name.into(),
            cases: measurements.len(),
            worst,
            tol,
            passed: worst <= tol,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {:<24} cases={:<4} worst={:.3e} tol={:.0e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.cases,
            self.worst,
            self.tol
        )
    }
}

/// A random problem: data `X`, its Gram matrix and regularizer.
pub struct Instance {
    pub x: DenseMatrix,
    pub gram: GramMatrix,
    pub reg: RegularizerDiag,
    pub lambda: f64,
    pub dropout: f64,
}

impl Instance {
    pub fn random(m: usize, n: usize, lambda: f64, dropout: f64, rng: &mut ChaCha8Rng) -> Result<Self> {
        let x = synthetic::gaussian_matrix(m, n, rng);
        let gram = GramMatrix::from_dense(x.t_matmul(&x)?.symmetrized())?;
        let reg = regularizer(&gram.diag(), lambda, dropout)?;
        Ok(Self {
            x,
            gram,
            reg,
            lambda,
            dropout,
        })
    }

    /// `Z = [X; Λ^{1/2}]`.
    pub fn augmented_input(&self) -> DenseMatrix {
        let (m, n) = self.x.shape();
        DenseMatrix::from_fn(m + n, n, |i, j| {
            if i < m {
                self.x[(i, j)]
            } else if i - m == j {
                self.reg.values()[j].sqrt()
            } else {
                0.0
            }
        })
    }

    /// `Y = [X; 0]`.
    pub fn augmented_target(&self) -> DenseMatrix {
        let (m, n) = self.x.shape();
        DenseMatrix::from_fn(m + n, n, |i, j| if i < m { self.x[(i, j)] } else { 0.0 })
    }

    pub fn teacher(&self) -> Result<FullRankModel> {
        full_rank_teacher(&self.gram, &self.reg)
    }

    pub fn student(&self, teacher: &FullRankModel, k: usize) -> Result<LowRankModel> {
        let m = student_gram_with(teacher, &self.gram, &self.reg, StudentGramMethod::Identity)?;
        student_projection(teacher, &m, &EdlaeConfig::new(self.lambda, self.dropout, k))
    }
}

const LAMBDAS: [f64; 3] = [0.1, 1.0, 10.0];
const DROPOUTS: [f64; 3] = [0.0, 0.25, 0.5];

fn small_instance(rng: &mut ChaCha8Rng) -> Result<Instance> {
    let n = rng.random_range(4..=50);
    let m = rng.random_range(n / 2 + 1..=2 * n);
    let lambda = *LAMBDAS.choose(rng).expect("non-empty");
    let dropout = *DROPOUTS.choose(rng).expect("non-empty");
    Instance::random(m, n, lambda, dropout, rng)
}

fn ranks(n: usize) -> Vec<usize> {
    let mut k = vec![1, (n / 4).max(1), (n / 2).max(1)];
    k.dedup();
    k
}

/// `max |diag(B̂)|` over 50 instances with `n ∈ {10, 50, 200}`, `λ ∈ {0.1, 1, 10}`.
pub fn zero_diagonal(seed: u64) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = Vec::new();
    for t in 0..50 {
        let n = [10, 50, 200][t % 3];
        let lambda = LAMBDAS[(t / 3) % 3];
        let inst = Instance::random(n + n / 2, n, lambda, DROPOUTS[t % 2], &mut rng)?;
        let b = inst.teacher()?.b;
        worst.push(b.diag().iter().fold(0.0f64, |a, d| a.max(d.abs())));
    }
    Ok(CheckResult::new("zero-diagonal", &worst, 1e-12))
}

/// `‖Z·B̂·Q_kQ_kᵀ − truncate_svd(Z·B̂, k)‖_F / ‖Z·B̂‖_F`.
pub fn projection_optimality(seed: u64) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut errs = Vec::new();
    for _ in 0..20 {
        let inst = small_instance(&mut rng)?;
        let teacher = inst.teacher()?;
        let zb = inst.augmented_input().matmul(&teacher.b)?;
        let svd = dense_svd(&zb)?;
        let scale = zb.frobenius_norm();
        for k in ranks(inst.gram.n()) {
            let student = inst.student(&teacher, k)?;
            let projected = zb.matmul(&student.v)?.matmul_t(&student.v)?;
            let best = truncate_svd(&svd, k)?;
            errs.push(projected.sub(&best)?.frobenius_norm() / scale);
        }
    }
    Ok(CheckResult::new("projection-optimality", &errs, 1e-8))
}

/// Cross term `|tr[(Y − Z·B̂)ᵀ·Z·(B̂ − D)]| / ‖Y‖_F²` with `D = offdiag(UVᵀ)`,
/// and the relative error of `f(D) = ‖Y − Z·B̂‖² + ‖Z·(B̂ − D)‖²`.
pub fn cross_term(seed: u64) -> Result<(CheckResult, CheckResult)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cross = Vec::new();
    let mut additive = Vec::new();
    for _ in 0..20 {
        let inst = small_instance(&mut rng)?;
        let teacher = inst.teacher()?;
        let z = inst.augmented_input();
        let y = inst.augmented_target();
        let residual = y.sub(&z.matmul(&teacher.b)?)?;
        let y_norm_sq = y.frobenius_norm_sq();
        for k in ranks(inst.gram.n()) {
            let d = inst.student(&teacher, k)?.product().without_diag();
            let zdiff = z.matmul(&teacher.b.sub(&d)?)?;
            let trace: f64 = residual.as_slice().iter().zip(zdiff.as_slice()).map(|(a, b)| a * b).sum();
            cross.push(trace.abs() / y_norm_sq);

            let total = y.sub(&z.matmul(&d)?)?.frobenius_norm_sq();
            let parts = residual.frobenius_norm_sq() + zdiff.frobenius_norm_sq();
            additive.push((total - parts).abs() / total);
        }
    }
    Ok((
        CheckResult::new("cross-term", &cross, 1e-8),
        CheckResult::new("additive-decomposition", &additive, 1e-6),
    ))
}

/// Identity-based vs explicit student Gram, relative Frobenius difference.
pub fn efficiency_identity(seed: u64) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut errs = Vec::new();
    for _ in 0..20 {
        let inst = small_instance(&mut rng)?;
        let teacher = inst.teacher()?;
        let fast = student_gram_with(&teacher, &inst.gram, &inst.reg, StudentGramMethod::Identity)?;
        let direct = student_gram_with(&teacher, &inst.gram, &inst.reg, StudentGramMethod::Direct)?;
        errs.push(fast.sub(&direct)?.frobenius_norm() / direct.frobenius_norm());
    }
    Ok(CheckResult::new("efficiency-identity", &errs, 1e-10))
}

/// `X·V_kV_kᵀ = U_kS_kV_kᵀ` and `‖X − X·V_kV_kᵀ‖² = Σ discarded σ²`, relative.
pub fn svd_identities(seed: u64) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut errs = Vec::new();
    for _ in 0..20 {
        let m = rng.random_range(6..=30);
        let n = rng.random_range(4..=20);
        let k = rng.random_range(1..m.min(n));
        let x = synthetic::gaussian_matrix(m, n, &mut rng);
        let opt = linear_ae_optimum(&x, k)?;
        let projected = opt.reconstruct(&x)?;
        let truncated = truncate_svd(&opt.svd, k)?;
        errs.push(projected.sub(&truncated)?.frobenius_norm() / truncated.frobenius_norm());
        let se = x.sub(&projected)?.frobenius_norm_sq();
        errs.push((se - opt.se).abs() / opt.se);
    }
    Ok(CheckResult::new("svd-identities", &errs, 1e-9))
}

/// Backpropagation vs central differences (step 1e-6) at 10 random points
/// for every architecture in the full grid.
pub fn gradient_check(seed: u64) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut errs = Vec::new();
    let (m, n, k) = (6, 5, 2);
    for arch in full_arch_grid() {
        for _ in 0..10 {
            let x = synthetic::gaussian_matrix(m, n, &mut rng);
            let mut p = DeepAEParams::init(&arch, n, k, rng.random())?;
            p.w_out = synthetic::gaussian_matrix(k, n, &mut rng);
            for l in &mut p.hidden {
                l.b.iter_mut().for_each(|b| *b = 0.1 * rng.random::<f64>());
            }
            let (_, g) = loss_and_gradient(&p, &x)?;
            let fd = finite_difference_gradient(&p, &x, 1e-6)?;
            errs.push(max_relative_error(&g, &fd));
        }
    }
    Ok(CheckResult::new("gradient", &errs, 1e-5))
}

/// All closed-form and SVD suites.
pub fn run_invariant_suites(seed: u64) -> Result<Vec<CheckResult>> {
    let (cross, additive) = cross_term(seed.wrapping_add(2))?;
    Ok(vec![
        zero_diagonal(seed)?,
        projection_optimality(seed.wrapping_add(1))?,
        cross,
        additive,
        efficiency_identity(seed.wrapping_add(3))?,
        svd_identities(seed.wrapping_add(4))?,
        gradient_check(seed.wrapping_add(5))?,
    ])
}
