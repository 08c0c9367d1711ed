//! Job configuration: a TOML file, overridden by command-line flags, and
//! written back verbatim into the output directory.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use edlae::dataset::SplitSpec;
use edlae::proposition::{default_archs, ArchSpec, Generator, TrainSettings, VerifyConfig};
use edlae::tuning::Grid;
use serde::{Deserialize, Serialize};

pub const RESOLVED_CONFIG: &str = "config.toml";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JobConfig {
    /// Filled in from the subcommand; ignored when read from a file.
    pub command: String,
    pub out: Option<PathBuf>,
    pub data: DataSection,
    pub split: SplitSection,
    pub grid: GridSection,
    pub train: TrainSection,
    pub eval: EvalSection,
    pub verify: VerifySection,
    pub bench: BenchSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    /// Raw interaction file for `ingest`.
    pub input: Option<PathBuf>,
    /// `csv` or `tsv`; inferred from the extension when absent.
    pub format: Option<String>,
    pub binarize: bool,
    /// Directory written by `ingest`, read by `train` and `eval`.
    pub split_dir: Option<PathBuf>,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            input: None,
            format: None,
            binarize: true,
            split_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub validation_fraction: f64,
    pub test_fraction: f64,
    pub foldin_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSection {
    fn default() -> Self {
        let s = SplitSpec::default();
        Self {
            validation_fraction: s.validation_fraction,
            test_fraction: s.test_fraction,
            foldin_fraction: s.foldin_fraction,
            seed: s.seed,
        }
    }
}

impl SplitSection {
    pub fn spec(&self) -> SplitSpec {
        SplitSpec {
            validation_fraction: self.validation_fraction,
            test_fraction: self.test_fraction,
            foldin_fraction: self.foldin_fraction,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub ranks: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub dropouts: Vec<f64>,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            ranks: vec![10, 50, 100],
            lambdas: vec![1.0, 10.0, 100.0, 1000.0],
            dropouts: vec![0.0, 0.25, 0.5],
        }
    }
}

impl GridSection {
    pub fn grid(&self) -> Grid {
        Grid {
            ranks: self.ranks.clone(),
            lambdas: self.lambdas.clone(),
            dropouts: self.dropouts.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    /// Any of `edlae`, `ridge`.
    pub models: Vec<String>,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            models: vec!["edlae".into(), "ridge".into()],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub models: Vec<PathBuf>,
    /// Every `*.bin` file in this directory is evaluated, in name order.
    pub model_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    pub m: usize,
    pub n: usize,
    pub ks: Vec<usize>,
    pub trials: usize,
    pub restarts: usize,
    pub steps: usize,
    pub lr: f64,
    pub tol_rel: f64,
    pub seed: u64,
    pub archs: Vec<ArchSpec>,
    pub generators: Vec<Generator>,
    /// Also run the closed-form invariant suites.
    pub suites: bool,
}

impl Default for VerifySection {
    fn default() -> Self {
        let c = VerifyConfig::default();
        Self {
            m: c.m,
            n: c.n,
            ks: c.ks,
            trials: c.trials,
            restarts: c.restarts,
            steps: c.train.steps,
            lr: c.train.lr,
            tol_rel: c.tol_rel,
            seed: c.seed,
            archs: default_archs(),
            generators: c.generators,
            suites: true,
        }
    }
}

impl VerifySection {
    pub fn config(&self) -> VerifyConfig {
        VerifyConfig {
            m: self.m,
            n: self.n,
            ks: self.ks.clone(),
            trials: self.trials,
            archs: self.archs.clone(),
            generators: self.generators.clone(),
            restarts: self.restarts,
            train: TrainSettings {
                steps: self.steps,
                lr: self.lr,
                ..Default::default()
            },
            tol_rel: self.tol_rel,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSection {
    pub items: usize,
    pub users: usize,
    pub ks: Vec<usize>,
    pub repeats: usize,
    pub lambda: f64,
    pub dropout: f64,
    pub seed: u64,
}

impl Default for BenchSection {
    fn default() -> Self {
        Self {
            items: 1000,
            users: 10000,
            ks: vec![10, 100, 500],
            repeats: 3,
            lambda: 100.0,
            dropout: 0.25,
            seed: 17,
        }
    }
}

impl JobConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn out_dir(&self) -> anyhow::Result<&Path> {
        match &self.out {
            Some(p) => Ok(p),
            None => bail!("no output directory: pass --out or set `out` in the config"),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config is always serializable")
    }
}

/// Creates `dir`, refusing to reuse a non-empty one unless `force` is set,
/// and records the resolved configuration in it.
pub fn prepare_out_dir(config: &JobConfig, force: bool) -> anyhow::Result<PathBuf> {
    let dir = config.out_dir()?.to_owned();
    if dir.exists() {
        let occupied = fs::read_dir(&dir)
            .with_context(|| format!("reading {}", dir.display()))?
            .next()
            .is_some();
        if occupied && !force {
            bail!("output directory {} is not empty; pass --force to overwrite", dir.display());
        }
    }
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    fs::write(dir.join(RESOLVED_CONFIG), config.to_toml())?;
    Ok(dir)
}
