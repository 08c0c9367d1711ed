//! Fold-in scoring of held-out users and binary-relevance ranking metrics.
//!
//! Scores are `x·U·Vᵀ` (low rank) or `x·B` (full rank) for a user's fold-in
//! row `x`; fold-in items are then masked out. Because a fold-in item is the
//! only place a diagonal weight can contribute to a score, masking also makes
//! the ranking independent of the model's diagonal.
//!
//! Rankings sort by descending score with ties broken by ascending item index.

use std::fmt::Write as _;

use crate::baselines::RidgeModel;
use crate::dataset::InteractionMatrix;
use crate::edlae::{FullRankModel, LowRankModel};
use crate::error::{Error, Result};
use crate::matrixops::DenseMatrix;
use crate::par;

/// Anything that maps a sparse user row to dense item scores.
pub trait Scorer: Sync {
    fn num_items(&self) -> usize;
    fn score_user(&self, foldin: &InteractionMatrix, user: usize) -> Vec<f64>;
}

impl Scorer for LowRankModel {
    fn num_items(&self) -> usize {
        self.n()
    }

    fn score_user(&self, foldin: &InteractionMatrix, user: usize) -> Vec<f64> {
        let latent = foldin.row_times(user, &self.u);
        self.v.matvec(&latent).expect("rank matches")
    }
}

impl Scorer for FullRankModel {
    fn num_items(&self) -> usize {
        self.n()
    }

    fn score_user(&self, foldin: &InteractionMatrix, user: usize) -> Vec<f64> {
        foldin.row_times(user, &self.b)
    }
}

impl Scorer for RidgeModel {
    fn num_items(&self) -> usize {
        self.b.rows()
    }

    fn score_user(&self, foldin: &InteractionMatrix, user: usize) -> Vec<f64> {
        foldin.row_times(user, &self.b)
    }
}

impl Scorer for DenseMatrix {
    fn num_items(&self) -> usize {
        self.rows()
    }

    fn score_user(&self, foldin: &InteractionMatrix, user: usize) -> Vec<f64> {
        foldin.row_times(user, self)
    }
}

/// `users × items` scores with fold-in items set to `-∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    pub scores: DenseMatrix,
}

impl ScoreMatrix {
    pub fn num_users(&self) -> usize {
        self.scores.rows()
    }

    /// Item indices of the top `cutoff` unmasked scores of `user`.
    pub fn top_items(&self, user: usize, cutoff: usize) -> Vec<usize> {
        top_k_indices(self.scores.row(user), cutoff)
    }
}

pub fn score_users<S: Scorer + ?Sized>(model: &S, foldin: &InteractionMatrix) -> Result<ScoreMatrix> {
    let n = foldin.num_items();
    if model.num_items() != n {
        return Err(Error::DimensionMismatch(format!(
            "model has {} items, fold-in data has {n}",
            model.num_items()
        )));
    }
    let mut scores = DenseMatrix::zeros(foldin.num_users(), n);
    par::for_each_row(scores.as_mut_slice(), n, |u, row| {
        row.copy_from_slice(&model.score_user(foldin, u));
        for &i in foldin.row(u).0 {
            row[i] = f64::NEG_INFINITY;
        }
    });
    Ok(ScoreMatrix { scores })
}

/// Ranking order: higher score first, then lower index.
#[inline]
fn ranks_before(scores: &[f64], a: usize, b: usize) -> bool {
    scores[a] > scores[b] || (scores[a] == scores[b] && a < b)
}

/// Indices of the `cutoff` best finite scores, best first.
pub fn top_k_indices(scores: &[f64], cutoff: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).filter(|&i| scores[i] > f64::NEG_INFINITY).collect();
    let cmp = |&a: &usize, &b: &usize| {
        if ranks_before(scores, a, b) {
            std::cmp::Ordering::Less
        } else if ranks_before(scores, b, a) {
            std::cmp::Ordering::Greater
        } else {
            std::cmp::Ordering::Equal
        }
    };
    if cutoff < idx.len() {
        idx.select_nth_unstable_by(cutoff, cmp);
        idx.truncate(cutoff);
    }
    idx.sort_by(cmp);
    idx
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MetricResult {
    pub metric: String,
    pub cutoff: usize,
    pub mean: f64,
    /// Sample standard deviation over users divided by `√users`.
    pub stderr: f64,
    #[serde(skip)]
    pub per_user: Vec<f64>,
}

impl MetricResult {
    fn from_values(metric: &str, cutoff: usize, per_user: Vec<f64>) -> Self {
        let n = per_user.len();
        let mean = if n == 0 { 0.0 } else { per_user.iter().sum::<f64>() / n as f64 };
        let stderr = if n < 2 {
            0.0
        } else {
            let var = per_user.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        };
        Self {
            metric: metric.to_owned(),
            cutoff,
            mean,
            stderr,
            per_user,
        }
    }
}

fn check_holdout(scores: &ScoreMatrix, holdout: &InteractionMatrix) -> Result<()> {
    if scores.num_users() != holdout.num_users() || scores.scores.cols() != holdout.num_items() {
        return Err(Error::DimensionMismatch(format!(
            "scores are {}x{}, holdout is {}x{}",
            scores.num_users(),
            scores.scores.cols(),
            holdout.num_users(),
            holdout.num_items()
        )));
    }
    if let Some(user) = (0..holdout.num_users()).find(|&u| holdout.row_len(u) == 0) {
        return Err(Error::EmptyHoldout { user });
    }
    Ok(())
}

fn per_user<F>(scores: &ScoreMatrix, holdout: &InteractionMatrix, cutoff: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(&[usize], &[usize]) -> f64 + Send + Sync,
{
    check_holdout(scores, holdout)?;
    Ok(par::map_range(scores.num_users(), |u| {
        let top = scores.top_items(u, cutoff);
        f(&top, holdout.row(u).0)
    }))
}

/// Binary-relevance nDCG@cutoff: `Σ rel(r)/log₂(r+1)` over the top
/// `cutoff` ranks, normalized by the ideal DCG of `min(cutoff, |holdout|)` hits.
pub fn ndcg_at_k(scores: &ScoreMatrix, holdout: &InteractionMatrix, cutoff: usize) -> Result<MetricResult> {
    let values = per_user(scores, holdout, cutoff, |top, relevant| {
        let dcg: f64 = top
            .iter()
            .enumerate()
            .filter(|(_, item)| relevant.binary_search(item).is_ok())
            .map(|(r, _)| 1.0 / ((r + 2) as f64).log2())
            .sum();
        let ideal: f64 = (0..cutoff.min(relevant.len())).map(|r| 1.0 / ((r + 2) as f64).log2()).sum();
        dcg / ideal
    })?;
    Ok(MetricResult::from_values("ndcg", cutoff, values))
}

/// `|top-cutoff ∩ holdout| / min(cutoff, |holdout|)`.
pub fn recall_at_k(scores: &ScoreMatrix, holdout: &InteractionMatrix, cutoff: usize) -> Result<MetricResult> {
    let values = per_user(scores, holdout, cutoff, |top, relevant| {
        let hits = top.iter().filter(|item| relevant.binary_search(item).is_ok()).count();
        hits as f64 / cutoff.min(relevant.len()) as f64
    })?;
    Ok(MetricResult::from_values("recall", cutoff, values))
}

/// The standard report: nDCG@100, Recall@20, Recall@50.
pub fn standard_metrics(scores: &ScoreMatrix, holdout: &InteractionMatrix) -> Result<Vec<MetricResult>> {
    Ok(vec![
        ndcg_at_k(scores, holdout, 100)?,
        recall_at_k(scores, holdout, 20)?,
        recall_at_k(scores, holdout, 50)?,
    ])
}

/// One row of the metric table.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MetricRecord {
    pub model_id: String,
    pub metric: String,
    pub cutoff: usize,
    pub mean: f64,
    pub stderr: f64,
}

impl MetricRecord {
    pub fn new(model_id: &str, m: &MetricResult) -> Self {
        Self {
            model_id: model_id.to_owned(),
            metric: m.metric.clone(),
            cutoff: m.cutoff,
            mean: m.mean,
            stderr: m.stderr,
        }
    }
}

/// Line-delimited JSON, one record per line.
pub fn records_to_jsonl(records: &[MetricRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn records_to_table(records: &[MetricRecord]) -> String {
    let width = records.iter().map(|r| r.model_id.len()).max().unwrap_or(5).max(5);
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$}  {:<12}  {:>8}  {:>8}", "model", "metric", "mean", "stderr");
    for r in records {
        let name = format!("{}@{}", r.metric, r.cutoff);
        let _ = writeln!(out, "{:<width$}  {:<12}  {:>8.4}  {:>8.4}", r.model_id, name, r.mean, r.stderr);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(rows: &[&[f64]]) -> ScoreMatrix {
        ScoreMatrix {
            scores: DenseMatrix::from_rows(rows),
        }
    }

    fn holdout(n: usize, rows: &[Vec<usize>]) -> InteractionMatrix {
        InteractionMatrix::from_rows(n, rows).unwrap()
    }

    #[test]
    fn ideal_single_item() {
        let s = scores(&[&[0.9, 0.1, 0.2]]);
        let r = ndcg_at_k(&s, &holdout(3, &[vec![0]]), 100).unwrap();
        assert_eq!(r.mean, 1.0);
    }

    #[test]
    fn two_items_ranks_one_and_three() {
        // DCG = 1 + 1/log₂4, IDCG = 1 + 1/log₂3.
        let s = scores(&[&[0.9, 0.8, 0.7, 0.1]]);
        let r = ndcg_at_k(&s, &holdout(4, &[vec![0, 2]]), 100).unwrap();
        let expected = (1.0 + 0.5) / (1.0 + 1.0 / 3f64.log2());
        assert!((r.mean - expected).abs() < 1e-15);
        assert!((r.mean - 0.9197).abs() < 1e-4);
    }

    #[test]
    fn miss_outside_cutoff() {
        let s = scores(&[&[0.9, 0.8, 0.1]]);
        let h = holdout(3, &[vec![2]]);
        assert_eq!(ndcg_at_k(&s, &h, 2).unwrap().mean, 0.0);
        assert_eq!(recall_at_k(&s, &h, 2).unwrap().mean, 0.0);
    }

    #[test]
    fn recall_cases() {
        let s = scores(&[&[0.9, 0.8, 0.1, 0.0]]);
        assert_eq!(recall_at_k(&s, &holdout(4, &[vec![0, 1]]), 2).unwrap().mean, 1.0);
        assert_eq!(recall_at_k(&s, &holdout(4, &[vec![0, 3]]), 2).unwrap().mean, 0.5);
        assert_eq!(recall_at_k(&s, &holdout(4, &[vec![2, 3]]), 2).unwrap().mean, 0.0);
    }

    #[test]
    fn ties_break_by_index() {
        assert_eq!(top_k_indices(&[1.0, 2.0, 2.0, 1.0], 4), vec![1, 2, 0, 3]);
        assert_eq!(top_k_indices(&[0.0, f64::NEG_INFINITY, 0.0], 5), vec![0, 2]);
        assert_eq!(top_k_indices(&[3.0, 1.0, 2.0, 5.0, 4.0], 2), vec![3, 4]);
    }

    #[test]
    fn masking_and_unit_vector_scores() {
        let b = DenseMatrix::from_rows(&[&[0.0, 0.5, 0.2], &[0.1, 0.0, 0.3], &[0.4, 0.6, 0.0]]);
        let teacher = FullRankModel {
            b: b.clone(),
            c_diag: vec![1.0; 3],
        };
        let foldin = InteractionMatrix::from_rows(3, &[vec![1]]).unwrap();
        let s = score_users(&teacher, &foldin).unwrap();
        assert_eq!(s.scores.row(0), &[0.1, f64::NEG_INFINITY, 0.3]);
        assert!(!s.top_items(0, 3).contains(&1));
    }

    #[test]
    fn zero_model_scores() {
        let foldin = InteractionMatrix::from_rows(3, &[vec![0], vec![1, 2]]).unwrap();
        let s = score_users(&DenseMatrix::zeros(3, 3), &foldin).unwrap();
        assert_eq!(s.scores.row(0), &[f64::NEG_INFINITY, 0.0, 0.0]);
        assert_eq!(s.scores.row(1), &[0.0, f64::NEG_INFINITY, f64::NEG_INFINITY]);
    }

    #[test]
    fn errors() {
        let s = scores(&[&[0.1, 0.2]]);
        assert!(matches!(
            ndcg_at_k(&s, &holdout(2, &[vec![]]), 10),
            Err(Error::EmptyHoldout { user: 0 })
        ));
        assert!(ndcg_at_k(&s, &holdout(3, &[vec![0]]), 10).is_err());
        let foldin = InteractionMatrix::from_rows(3, &[vec![0]]).unwrap();
        assert!(score_users(&DenseMatrix::zeros(2, 2), &foldin).is_err());
    }

    #[test]
    fn stderr_is_sample_std_over_sqrt_n() {
        let m = MetricResult::from_values("x", 1, vec![0.0, 1.0, 0.0, 1.0]);
        assert_eq!(m.mean, 0.5);
        let sd = (4.0 * 0.25 / 3.0f64).sqrt();
        assert!((m.stderr - sd / 2.0).abs() < 1e-15);
        assert_eq!(MetricResult::from_values("x", 1, vec![0.3]).stderr, 0.0);
    }

    #[test]
    fn table_and_jsonl() {
        let rec = MetricRecord {
            model_id: "edlae_k2".into(),
            metric: "ndcg".into(),
            cutoff: 100,
            mean: 0.5,
            stderr: 0.01,
        };
        let j = records_to_jsonl(std::slice::from_ref(&rec));
        assert_eq!(
            j,
            "{\"model_id\":\"edlae_k2\",\"metric\":\"ndcg\",\"cutoff\":100,\"mean\":0.5,\"stderr\":0.01}\n"
        );
        assert!(records_to_table(&[rec]).contains("ndcg@100"));
    }
}
