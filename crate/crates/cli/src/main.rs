mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::JobConfig;

#[derive(Parser, Debug)]
#[command(name = "edlae", version, about = "Low-rank EDLAE training and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML job file; flags given on the command line take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for every artifact of the job.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Reuse a non-empty output directory.
    #[arg(long, global = true)]
    force: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Read an interaction file and write a strong-generalization split.
    Ingest {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: Option<PathBuf>,
        /// csv or tsv
        #[arg(long)]
        format: Option<String>,
        /// Keep counts instead of mapping them to 1.
        #[arg(long)]
        no_binarize: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        validation_fraction: Option<f64>,
        #[arg(long)]
        test_fraction: Option<f64>,
        #[arg(long)]
        foldin_fraction: Option<f64>,
    },
    /// Grid-search (λ, p) per rank on validation nDCG@100 and save the best models.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        split: Option<PathBuf>,
        /// Comma-separated: edlae, ridge
        #[arg(long, value_delimiter = ',')]
        models: Option<Vec<String>>,
        #[arg(long, value_delimiter = ',')]
        ranks: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        lambdas: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        dropouts: Option<Vec<f64>>,
    },
    /// Score the test users of a split and report ranking metrics.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        split: Option<PathBuf>,
        /// Model file; repeatable.
        #[arg(long = "model")]
        models: Vec<PathBuf>,
        #[arg(long)]
        model_dir: Option<PathBuf>,
    },
    /// Deep-vs-linear autoencoder trials plus the closed-form invariant suites.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        ks: Option<Vec<usize>>,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Skip the closed-form invariant suites.
        #[arg(long)]
        no_suites: bool,
    },
    /// Time the stages of closed-form training on synthetic data.
    Bench {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        items: Option<usize>,
        #[arg(long)]
        users: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        ks: Option<Vec<usize>>,
        #[arg(long)]
        repeats: Option<usize>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        dropout: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// Loads the config file and applies flag overrides. Returns the resolved
/// config and the `--force` flag.
fn resolve(command: Command) -> anyhow::Result<(JobConfig, bool)> {
    let (name, common) = match &command {
        Command::Ingest { common, .. } => ("ingest", common),
        Command::Train { common, .. } => ("train", common),
        Command::Eval { common, .. } => ("eval", common),
        Command::Verify { common, .. } => ("verify", common),
        Command::Bench { common, .. } => ("bench", common),
    };
    let mut c = JobConfig::load(common.config.as_deref())?;
    c.command = name.into();
    if common.out.is_some() {
        c.out = common.out.clone();
    }
    let force = common.force;
    match command {
        Command::Ingest {
            input,
            format,
            no_binarize,
            seed,
            validation_fraction,
            test_fraction,
            foldin_fraction,
            ..
        } => {
            if input.is_some() {
                c.data.input = input;
            }
            if format.is_some() {
                c.data.format = format;
            }
            if no_binarize {
                c.data.binarize = false;
            }
            set(&mut c.split.seed, seed);
            set(&mut c.split.validation_fraction, validation_fraction);
            set(&mut c.split.test_fraction, test_fraction);
            set(&mut c.split.foldin_fraction, foldin_fraction);
        }
        Command::Train {
            split,
            models,
            ranks,
            lambdas,
            dropouts,
            ..
        } => {
            if split.is_some() {
                c.data.split_dir = split;
            }
            set(&mut c.train.models, models);
            set(&mut c.grid.ranks, ranks);
            set(&mut c.grid.lambdas, lambdas);
            set(&mut c.grid.dropouts, dropouts);
        }
        Command::Eval {
            split,
            models,
            model_dir,
            ..
        } => {
            if split.is_some() {
                c.data.split_dir = split;
            }
            if !models.is_empty() {
                c.eval.models = models;
            }
            if model_dir.is_some() {
                c.eval.model_dir = model_dir;
            }
        }
        Command::Verify {
            trials,
            m,
            n,
            ks,
            restarts,
            steps,
            seed,
            no_suites,
            ..
        } => {
            let v = &mut c.verify;
            set(&mut v.trials, trials);
            set(&mut v.m, m);
            set(&mut v.n, n);
            set(&mut v.ks, ks);
            set(&mut v.restarts, restarts);
            set(&mut v.steps, steps);
            set(&mut v.seed, seed);
            if no_suites {
                v.suites = false;
            }
        }
        Command::Bench {
            items,
            users,
            ks,
            repeats,
            lambda,
            dropout,
            seed,
            ..
        } => {
            let b = &mut c.bench;
            set(&mut b.items, items);
            set(&mut b.users, users);
            set(&mut b.ks, ks);
            set(&mut b.repeats, repeats);
            set(&mut b.lambda, lambda);
            set(&mut b.dropout, dropout);
            set(&mut b.seed, seed);
        }
    }
    Ok((c, force))
}

/// 2 for numerical failures, 1 for everything else.
fn exit_code(e: &anyhow::Error) -> u8 {
    let numerical = e
        .chain()
        .any(|c| c.downcast_ref::<edlae::Error>().is_some_and(edlae::Error::is_numerical));
    if numerical {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = resolve(cli.command).and_then(|(config, force)| commands::run(&config, force));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
