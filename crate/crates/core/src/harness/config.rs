use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::datapipe::BatchMode;
use crate::error::{Error, Result};
use crate::fusion::Mode;
use crate::hatedict::DEFAULT_CUTOFF;
use crate::micronet::OptimizerKind;
use crate::tokenscalar::ScalarScale;

/// Environment variable that overrides every configured seed.
pub const SEED_ENV: &str = "DICTNN_SEED";

pub const LEARNING_RATES: [f64; 3] = [1e-4, 1e-3, 1e-2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Balancing {
    /// Weighted sampler in the loader, unit loss weights.
    Sampler,
    /// Inverse-frequency loss weights with shuffled batches.
    ClassWeights,
}

impl Balancing {
    pub fn batch_mode(self) -> BatchMode {
        match self {
            Balancing::Sampler => BatchMode::WeightedSampler,
            Balancing::ClassWeights => BatchMode::Shuffle,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Balancing::Sampler => "sampler",
            Balancing::ClassWeights => "class_weights",
        }
    }
}

fn default_optimizer() -> OptimizerKind {
    OptimizerKind::Adam
}
fn default_lr() -> f64 {
    0.01
}
fn default_balancing() -> Balancing {
    Balancing::ClassWeights
}
fn default_epochs() -> usize {
    90
}
fn default_batch_size() -> usize {
    16
}
fn default_model() -> Mode {
    Mode::OneD
}

/// One training configuration. Defaults: adam, lr 0.01, class weights,
/// scheduler off, 90 epochs, batch 16, seed 0, 1D model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default = "default_optimizer")]
    pub optimizer: OptimizerKind,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_balancing")]
    pub balancing: Balancing,
    #[serde(default)]
    pub scheduler: bool,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_model")]
    pub model: Mode,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            optimizer: default_optimizer(),
            lr: default_lr(),
            balancing: default_balancing(),
            scheduler: false,
            epochs: default_epochs(),
            batch_size: default_batch_size(),
            seed: 0,
            model: default_model(),
        }
    }
}

impl RunConfig {
    /// Batching follows the balancing choice: class weights always shuffle.
    pub fn batch_mode(&self) -> BatchMode {
        self.balancing.batch_mode()
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.lr)));
        }
        Ok(())
    }

    /// Short identifier, e.g. `adam_lr0.01_class_weights_sched-off`.
    pub fn label(&self) -> String {
        format!(
            "{}_lr{}_{}_sched-{}",
            self.optimizer,
            self.lr,
            self.balancing.as_str(),
            if self.scheduler { "on" } else { "off" }
        )
    }
}

fn default_grid_epochs() -> usize {
    45
}
fn default_cutoff() -> f64 {
    DEFAULT_CUTOFF
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

/// A config file: run settings plus the files they operate on. Relative
/// paths resolve against the config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub run: RunConfig,
    /// Normalized `id,label,text` corpus written by `prepare`.
    pub corpus: PathBuf,
    /// Directory holding `train_ids.txt`, `validation_ids.txt`, `test_ids.txt`.
    pub splits_dir: PathBuf,
    pub vocab: Option<PathBuf>,
    pub precomputed: Option<PathBuf>,
    pub dictionary: Option<PathBuf>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_grid_epochs")]
    pub grid_epochs: usize,
    #[serde(default = "default_cutoff")]
    pub cutoff: f64,
    #[serde(default)]
    pub scalar_scale: ScalarScale,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.apply_env()?;
        cfg.run.validate()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.corpus);
        fix(&mut self.splits_dir);
        fix(&mut self.output_dir);
        for p in [&mut self.vocab, &mut self.precomputed, &mut self.dictionary].into_iter().flatten() {
            fix(p);
        }
    }

    /// Applies the [`SEED_ENV`] override when set.
    pub fn apply_env(&mut self) -> Result<()> {
        if let Some(seed) = seed_override()? {
            self.run.seed = seed;
        }
        Ok(())
    }
}

pub fn seed_override() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}
