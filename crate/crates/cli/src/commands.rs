use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, ensure, Context};
use edlae::baselines::ridge_objective;
use edlae::dataset::{gram, load_interactions, read_split_dir, split_strong_generalization, write_split_dir, InputFormat};
use edlae::diagnostics::run_invariant_suites;
use edlae::edlae::{edlae_objective, full_rank_teacher, regularizer, student_gram, ModelKind, TrainOptions};
use edlae::evaluation::{records_to_jsonl, records_to_table, score_users, standard_metrics, MetricRecord};
use edlae::matrixops::{top_k_eig_with, EigOptions};
use edlae::model_io;
use edlae::proposition::verify_proposition;
use edlae::synthetic::{implicit_feedback, ImplicitFeedbackSpec};
use edlae::tuning::select_per_rank;
use serde::Serialize;

use crate::config::{prepare_out_dir, JobConfig};

pub fn run(c: &JobConfig, force: bool) -> anyhow::Result<()> {
    match c.command.as_str() {
        "ingest" => ingest(c, force),
        "train" => train(c, force),
        "eval" => eval(c, force),
        "verify" => verify(c, force),
        "bench" => bench(c, force),
        other => bail!("unknown command {other:?}"),
    }
}

fn split_dir(c: &JobConfig) -> anyhow::Result<&Path> {
    c.data
        .split_dir
        .as_deref()
        .context("no split directory: pass --split or set data.split_dir")
}

fn jsonl<T: Serialize>(rows: impl IntoIterator<Item = T>) -> String {
    rows.into_iter()
        .map(|r| serde_json::to_string(&r).expect("plain records serialize") + "\n")
        .collect()
}

fn ingest(c: &JobConfig, force: bool) -> anyhow::Result<()> {
    let input = c.data.input.as_deref().context("no input file: pass --input or set data.input")?;
    let format = match &c.data.format {
        Some(f) => f.parse::<InputFormat>()?,
        None => InputFormat::from_path(input),
    };
    let spec = c.split.spec();
    spec.validate()?;
    let (x, ids) = load_interactions(input, format, c.data.binarize)
        .with_context(|| format!("loading {}", input.display()))?;
    let split = split_strong_generalization(&x, &spec)?;
    let dir = prepare_out_dir(c, force)?;
    write_split_dir(&dir, &split, &ids, &spec, &input.display().to_string(), format)?;
    println!(
        "{} users, {} items, {} interactions -> {}",
        x.num_users(),
        x.num_items(),
        x.nnz(),
        dir.display()
    );
    println!(
        "train {} / validation {} / test {} users",
        split.train_users.len(),
        split.validation.users.len(),
        split.test.users.len()
    );
    Ok(())
}

fn parse_kind(s: &str) -> anyhow::Result<ModelKind> {
    match s {
        "edlae" => Ok(ModelKind::Edlae),
        "ridge" => Ok(ModelKind::Ridge),
        other => Err(edlae::Error::InvalidConfig(format!("unknown model {other:?}; expected edlae or ridge")).into()),
    }
}

#[derive(Serialize)]
struct ObjectiveRow<'a> {
    kind: &'a str,
    rank: usize,
    lambda: f64,
    dropout: f64,
    train_objective: f64,
    validation_ndcg: f64,
    file: String,
}

fn train(c: &JobConfig, force: bool) -> anyhow::Result<()> {
    let kinds = c.train.models.iter().map(|m| parse_kind(m)).collect::<anyhow::Result<Vec<_>>>()?;
    ensure!(!kinds.is_empty(), edlae::Error::InvalidConfig("no models to train".into()));
    let (split, ids) = read_split_dir(split_dir(c)?)?;
    let grid = c.grid.grid();
    grid.validate(ids.items.len())?;
    let dir = prepare_out_dir(c, force)?;

    let g = gram(&split.train);
    let mut trace = Vec::new();
    let mut log = Vec::new();
    for kind in kinds {
        for s in select_per_rank(&g, &split.validation, &grid, kind, &TrainOptions::default())? {
            let cfg = s.model.config;
            let file = format!("model_{}_k{}.bin", kind.name(), cfg.rank);
            model_io::save(&s.model, dir.join(&file))?;
            let reg = regularizer(&g.diag(), cfg.lambda, cfg.dropout)?;
            let objective = match kind {
                ModelKind::Edlae => edlae_objective(&split.train, &reg, &s.model)?,
                ModelKind::Ridge => ridge_objective(&split.train, &reg, &s.model)?,
            };
            println!(
                "{:<6} k={:<5} lambda={:<8} p={:<5} val nDCG@100={:.4} objective={:.6e}",
                kind.name(),
                cfg.rank,
                cfg.lambda,
                cfg.dropout,
                s.validation_ndcg,
                objective
            );
            log.push(ObjectiveRow {
                kind: kind.name(),
                rank: cfg.rank,
                lambda: cfg.lambda,
                dropout: cfg.dropout,
                train_objective: objective,
                validation_ndcg: s.validation_ndcg,
                file,
            });
            trace.extend(s.trace);
        }
    }
    fs::write(dir.join("grid_trace.jsonl"), jsonl(&trace))?;
    fs::write(dir.join("objective_log.jsonl"), jsonl(&log))?;
    Ok(())
}

fn model_paths(c: &JobConfig) -> anyhow::Result<Vec<PathBuf>> {
    let mut paths = c.eval.models.clone();
    if let Some(dir) = &c.eval.model_dir {
        let mut found: Vec<PathBuf> = fs::read_dir(dir)
            .with_context(|| format!("reading {}", dir.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "bin"))
            .collect();
        found.sort();
        paths.extend(found);
    }
    ensure!(
        !paths.is_empty(),
        edlae::Error::InvalidConfig("no models: pass --model or --model-dir".into())
    );
    Ok(paths)
}

fn eval(c: &JobConfig, force: bool) -> anyhow::Result<()> {
    let paths = model_paths(c)?;
    let (split, _) = read_split_dir(split_dir(c)?)?;
    let models = paths
        .iter()
        .map(|p| model_io::load(p).with_context(|| format!("loading {}", p.display())))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let dir = prepare_out_dir(c, force)?;

    let mut records = Vec::new();
    for (path, model) in paths.iter().zip(&models) {
        let id = path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
        let scores = score_users(model, &split.test.foldin).with_context(|| format!("scoring {id}"))?;
        for m in standard_metrics(&scores, &split.test.holdout)? {
            records.push(MetricRecord::new(&id, &m));
        }
    }
    let table = records_to_table(&records);
    print!("{table}");
    fs::write(dir.join("metrics.txt"), table)?;
    fs::write(dir.join("metrics.jsonl"), records_to_jsonl(&records))?;
    Ok(())
}

fn verify(c: &JobConfig, force: bool) -> anyhow::Result<()> {
    let config = c.verify.config();
    config.validate()?;
    let dir = prepare_out_dir(c, force)?;

    let report = verify_proposition(&config)?;
    fs::write(dir.join("proposition.jsonl"), report.to_jsonl())?;
    let mut summary = report.summary();
    let mut suites_pass = true;
    if c.verify.suites {
        let checks = run_invariant_suites(c.verify.seed)?;
        fs::write(dir.join("invariants.jsonl"), jsonl(&checks))?;
        summary.push('\n');
        for check in &checks {
            let _ = writeln!(summary, "{}", check.line());
            suites_pass &= check.passed;
        }
    }
    print!("{summary}");
    fs::write(dir.join("summary.txt"), &summary)?;
    if !report.pass || !suites_pass {
        bail!("verification failed; see {}", dir.join("summary.txt").display());
    }
    Ok(())
}

#[derive(Serialize)]
struct StageTiming {
    k: usize,
    stage: &'static str,
    mean_s: f64,
    std_s: f64,
    repeats: usize,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

const STAGES: [&str; 4] = ["inversion", "student_gram", "eig", "projection"];

fn bench(c: &JobConfig, force: bool) -> anyhow::Result<()> {
    let b = &c.bench;
    let invalid = |msg: String| anyhow::Error::from(edlae::Error::InvalidConfig(msg));
    if b.repeats == 0 {
        return Err(invalid("repeats must be at least 1".into()));
    }
    if let Some(&k) = b.ks.iter().find(|&&k| k == 0 || k > b.items) {
        return Err(invalid(format!("rank {k} outside 1..={}", b.items)));
    }
    let dir = prepare_out_dir(c, force)?;

    let x = implicit_feedback(&ImplicitFeedbackSpec {
        users: b.users,
        items: b.items,
        seed: b.seed,
        ..Default::default()
    })?;
    let g = gram(&x);
    let reg = regularizer(&g.diag(), b.lambda, b.dropout)?;
    let opts = EigOptions::default();
    let mut rows = Vec::new();
    for &k in &b.ks {
        let mut samples = vec![Vec::with_capacity(b.repeats); STAGES.len()];
        for _ in 0..b.repeats {
            let t = Instant::now();
            let teacher = full_rank_teacher(&g, &reg)?;
            samples[0].push(t.elapsed().as_secs_f64());

            let t = Instant::now();
            let m = student_gram(&teacher, &g, &reg)?;
            samples[1].push(t.elapsed().as_secs_f64());

            let t = Instant::now();
            let eig = top_k_eig_with(&m, k, &opts)?;
            samples[2].push(t.elapsed().as_secs_f64());

            let t = Instant::now();
            let u = teacher.b.matmul(&eig.eigenvectors)?;
            samples[3].push(t.elapsed().as_secs_f64());
            std::hint::black_box(u);
        }
        for (stage, s) in STAGES.iter().zip(&samples) {
            let (mean_s, std_s) = mean_std(s);
            rows.push(StageTiming {
                k,
                stage,
                mean_s,
                std_s,
                repeats: b.repeats,
            });
        }
    }

    let mut table = format!(
        "n={} users={} lambda={} p={} parallel={}\n{:<6} {:<13} {:>10} {:>10}\n",
        b.items,
        b.users,
        b.lambda,
        b.dropout,
        edlae::par::is_parallel(),
        "k",
        "stage",
        "mean_s",
        "std_s"
    );
    for r in &rows {
        let _ = writeln!(table, "{:<6} {:<13} {:>10.4} {:>10.4}", r.k, r.stage, r.mean_s, r.std_s);
    }
    print!("{table}");
    fs::write(dir.join("bench.txt"), table)?;
    fs::write(dir.join("bench.jsonl"), jsonl(&rows))?;
    Ok(())
}
