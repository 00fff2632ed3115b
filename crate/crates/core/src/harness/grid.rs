use serde::{Deserialize, Serialize};

use super::config::{Balancing, RunConfig, LEARNING_RATES};
use super::train::{train, EncodedSplit};
use crate::error::Result;
use crate::micronet::OptimizerKind;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub optimizer: OptimizerKind,
    pub lr: f64,
    pub balancing: Balancing,
    pub scheduler: bool,
}

impl GridPoint {
    pub fn apply(&self, base: &RunConfig) -> RunConfig {
        RunConfig {
            optimizer: self.optimizer,
            lr: self.lr,
            balancing: self.balancing,
            scheduler: self.scheduler,
            ..base.clone()
        }
    }
}

/// optimizer × learning rate × balancing × scheduler: 36 points.
pub fn full_grid() -> Vec<GridPoint> {
    let mut points = Vec::with_capacity(36);
    for optimizer in OptimizerKind::ALL {
        for lr in LEARNING_RATES {
            for balancing in [Balancing::Sampler, Balancing::ClassWeights] {
                for scheduler in [false, true] {
                    points.push(GridPoint {
                        optimizer,
                        lr,
                        balancing,
                        scheduler,
                    });
                }
            }
        }
    }
    points
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRun {
    pub point: GridPoint,
    pub label: String,
    /// Best validation macro F1; `None` when the run failed.
    pub best_val_f1: Option<f64>,
    pub best_epoch: Option<usize>,
    pub error: Option<String>,
}

impl GridRun {
    fn score(&self) -> f64 {
        self.best_val_f1.unwrap_or(f64::NEG_INFINITY)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub runs: Vec<GridRun>,
    /// Index into `runs` of the highest validation macro F1.
    pub best: Option<usize>,
    /// Expected best validation score after k = 1..n runs (successful runs only).
    pub expected_validation_performance: Vec<f64>,
}

impl GridReport {
    pub fn best_run(&self) -> Option<&GridRun> {
        self.best.map(|i| &self.runs[i])
    }
}

/// Trains every point for `base.epochs` epochs. A failing run is recorded
/// with its error and never wins the argmax.
pub fn grid_search(
    base: &RunConfig,
    points: &[GridPoint],
    train_split: &EncodedSplit,
    validation: &EncodedSplit,
    mut on_run: impl FnMut(&GridRun),
) -> Result<GridReport> {
    base.validate()?;
    let mut runs = Vec::with_capacity(points.len());
    for point in points {
        let cfg = point.apply(base);
        let run = match train(&cfg, train_split, validation, None) {
            Ok(out) => GridRun {
                point: *point,
                label: cfg.label(),
                best_val_f1: out.best_val_f1(),
                best_epoch: out.best_epoch,
                error: None,
            },
            Err(e) => GridRun {
                point: *point,
                label: cfg.label(),
                best_val_f1: None,
                best_epoch: None,
                error: Some(e.to_string()),
            },
        };
        on_run(&run);
        runs.push(run);
    }
    let best = runs
        .iter()
        .enumerate()
        .filter(|(_, r)| r.best_val_f1.is_some())
        .fold(None, |best: Option<usize>, (i, r)| match best {
            Some(b) if runs[b].score() >= r.score() => Some(b),
            _ => Some(i),
        });
    let scores: Vec<f64> = runs.iter().filter_map(|r| r.best_val_f1).collect();
    Ok(GridReport {
        best,
        expected_validation_performance: expected_validation_performance(&scores),
        runs,
    })
}

/// Expected maximum of k draws with replacement from the observed scores,
/// for k = 1..=n, using the empirical distribution of the order statistics.
pub fn expected_validation_performance(scores: &[f64]) -> Vec<f64> {
    let n = scores.len();
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    (1..=n)
        .map(|k| {
            sorted
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let hi = ((i + 1) as f64 / n as f64).powi(k as i32);
                    let lo = (i as f64 / n as f64).powi(k as i32);
                    s * (hi - lo)
                })
                .sum()
        })
        .collect()
}
