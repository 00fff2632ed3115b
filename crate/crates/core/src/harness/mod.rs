//! Training, grid search, evaluation and diagnostics.

mod config;
mod diagnostics;
mod evaluate;
mod grid;
mod metrics;
mod train;

pub use config::{seed_override, Balancing, ExperimentConfig, RunConfig, LEARNING_RATES, SEED_ENV};
pub use diagnostics::{avg_hate_score_per_class, tweet_hate_score};
pub use evaluate::{evaluate, evaluate_checkpoint, write_report, ReportFiles};
pub use grid::{expected_validation_performance, full_grid, grid_search, GridPoint, GridReport, GridRun};
pub use metrics::{compute_metrics, AverageMetrics, ClassMetrics, MetricsReport, METRICS_SCHEMA_VERSION};
pub use train::{
    evaluate_network, history_csv, predict, train, EncodedSplit, EpochRecord, TrainOutcome, TrainStatus,
};
