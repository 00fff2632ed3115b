use std::fs;
use std::path::{Path, PathBuf};

use super::metrics::MetricsReport;
use super::train::{evaluate_network, EncodedSplit};
use crate::error::Result;
use crate::micronet::{load_checkpoint, Network};

/// Evaluation-mode forward over `split`. Fails when the inputs were not
/// vectorized for the network's architecture.
pub fn evaluate(net: &Network<f32>, split: &EncodedSplit) -> Result<MetricsReport> {
    let mut net = net.clone();
    evaluate_network(&mut net, split)
}

pub fn evaluate_checkpoint(checkpoint_dir: &Path, split: &EncodedSplit) -> Result<MetricsReport> {
    let (net, manifest) = load_checkpoint(checkpoint_dir)?;
    Ok(evaluate(&net, split)?.with_epoch(manifest.epoch))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportFiles {
    pub json: PathBuf,
    pub table: PathBuf,
    pub confusion: PathBuf,
    pub confusion_percent: PathBuf,
}

/// Writes `<stem>.json`, `<stem>.txt`, `<stem>_confusion.csv` and
/// `<stem>_confusion_pct.csv` into `dir`.
pub fn write_report(report: &MetricsReport, dir: &Path, stem: &str) -> Result<ReportFiles> {
    fs::create_dir_all(dir)?;
    let files = ReportFiles {
        json: dir.join(format!("{stem}.json")),
        table: dir.join(format!("{stem}.txt")),
        confusion: dir.join(format!("{stem}_confusion.csv")),
        confusion_percent: dir.join(format!("{stem}_confusion_pct.csv")),
    };
    fs::write(&files.json, report.to_json())?;
    fs::write(&files.table, report.to_table())?;
    fs::write(&files.confusion, report.confusion_csv())?;
    fs::write(&files.confusion_percent, report.confusion_percent_csv())?;
    Ok(files)
}
