//! Per-rank hyper-parameter selection on validation nDCG@100.

use crate::baselines::train_ridge_with;
use crate::dataset::{GramMatrix, HeldOutSet};
use crate::edlae::{train_closed_form_with, EdlaeConfig, LowRankModel, ModelKind, TrainOptions};
use crate::error::{Error, Result};
use crate::evaluation::{ndcg_at_k, score_users};

/// Candidate values; every `(λ, p)` pair is tried for each rank.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Grid {
    pub ranks: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub dropouts: Vec<f64>,
}

impl Grid {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.ranks.is_empty() || self.lambdas.is_empty() || self.dropouts.is_empty() {
            return Err(Error::InvalidConfig("grid axes must be non-empty".into()));
        }
        if let Some(&k) = self.ranks.iter().find(|&&k| k == 0 || k > n) {
            return Err(Error::InvalidConfig(format!("rank {k} outside 1..={n}")));
        }
        for &l in &self.lambdas {
            EdlaeConfig::new(l, 0.0, 1).validate()?;
        }
        for &p in &self.dropouts {
            EdlaeConfig::new(0.0, p, 1).validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct GridPoint {
    pub kind: &'static str,
    pub rank: usize,
    pub lambda: f64,
    pub dropout: f64,
    pub validation_ndcg: f64,
}

/// Best model for one rank plus the full trace of evaluated points.
#[derive(Debug, Clone)]
pub struct Selection {
    pub model: LowRankModel,
    pub validation_ndcg: f64,
    pub trace: Vec<GridPoint>,
}

pub fn train_kind(g: &GramMatrix, config: &EdlaeConfig, kind: ModelKind, opts: &TrainOptions) -> Result<LowRankModel> {
    match kind {
        ModelKind::Edlae => train_closed_form_with(g, config, opts),
        ModelKind::Ridge => train_ridge_with(g, config, &opts.eig),
    }
}

/// For every rank, fits all `(λ, p)` pairs and keeps the one with the highest
/// validation nDCG@100. Ties keep the earlier grid point.
pub fn select_per_rank(
    g: &GramMatrix,
    validation: &HeldOutSet,
    grid: &Grid,
    kind: ModelKind,
    opts: &TrainOptions,
) -> Result<Vec<Selection>> {
    grid.validate(g.n())?;
    let mut out = Vec::with_capacity(grid.ranks.len());
    for &k in &grid.ranks {
        let mut best: Option<(LowRankModel, f64)> = None;
        let mut trace = Vec::new();
        for &lambda in &grid.lambdas {
            for &dropout in &grid.dropouts {
                let config = EdlaeConfig::new(lambda, dropout, k);
                let model = train_kind(g, &config, kind, opts).map_err(|e| with_context(e, kind, &config))?;
                let scores = score_users(&model, &validation.foldin)?;
                let ndcg = ndcg_at_k(&scores, &validation.holdout, 100)?.mean;
                trace.push(GridPoint {
                    kind: kind.name(),
                    rank: k,
                    lambda,
                    dropout,
                    validation_ndcg: ndcg,
                });
                if best.as_ref().is_none_or(|(_, b)| ndcg > *b) {
                    best = Some((model, ndcg));
                }
            }
        }
        let (model, validation_ndcg) = best.expect("grid is non-empty");
        out.push(Selection {
            model,
            validation_ndcg,
            trace,
        });
    }
    Ok(out)
}

fn with_context(e: Error, kind: ModelKind, c: &EdlaeConfig) -> Error {
    match e {
        Error::NotPositiveDefinite { .. } | Error::NoConvergence { .. } | Error::NonFinite(_) => Error::GridPoint {
            kind: kind.name(),
            rank: c.rank,
            lambda: c.lambda,
            dropout: c.dropout,
            source: Box::new(e),
        },
        other => other,
    }
}
