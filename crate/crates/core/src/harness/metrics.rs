use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Label;

pub const METRICS_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AverageMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Classification report: per-class rows, accuracy, macro and micro
/// averages, and the confusion matrix (rows = true, columns = predicted).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub schema_version: u32,
    pub epoch: Option<usize>,
    pub hateful: ClassMetrics,
    pub abusive: ClassMetrics,
    pub normal: ClassMetrics,
    pub accuracy: f64,
    pub macro_avg: AverageMetrics,
    pub micro_avg: AverageMetrics,
    pub confusion_matrix: [[usize; Label::COUNT]; Label::COUNT],
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Per-class precision/recall/F1 (0 where undefined), accuracy, and the
/// unweighted macro average over the three classes.
pub fn compute_metrics(predictions: &[Label], targets: &[Label]) -> Result<MetricsReport> {
    if predictions.len() != targets.len() {
        return Err(Error::Metrics(format!(
            "{} predictions for {} targets",
            predictions.len(),
            targets.len()
        )));
    }
    if targets.is_empty() {
        return Err(Error::Metrics("no predictions to score".into()));
    }
    let mut cm = [[0usize; Label::COUNT]; Label::COUNT];
    for (p, t) in predictions.iter().zip(targets) {
        cm[t.index()][p.index()] += 1;
    }
    let per_class: Vec<ClassMetrics> = (0..Label::COUNT)
        .map(|c| {
            let tp = cm[c][c];
            let predicted: usize = (0..Label::COUNT).map(|t| cm[t][c]).sum();
            let support: usize = cm[c].iter().sum();
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, support);
            ClassMetrics {
                precision,
                recall,
                f1: harmonic(precision, recall),
                support,
            }
        })
        .collect();
    let k = Label::COUNT as f64;
    let macro_avg = AverageMetrics {
        precision: per_class.iter().map(|m| m.precision).sum::<f64>() / k,
        recall: per_class.iter().map(|m| m.recall).sum::<f64>() / k,
        f1: per_class.iter().map(|m| m.f1).sum::<f64>() / k,
    };
    let correct: usize = (0..Label::COUNT).map(|c| cm[c][c]).sum();
    let accuracy = ratio(correct, targets.len());
    // single-label: every error is one FP and one FN, so micro P = R = accuracy
    let micro_avg = AverageMetrics {
        precision: accuracy,
        recall: accuracy,
        f1: accuracy,
    };
    Ok(MetricsReport {
        schema_version: METRICS_SCHEMA_VERSION,
        epoch: None,
        hateful: per_class[0],
        abusive: per_class[1],
        normal: per_class[2],
        accuracy,
        macro_avg,
        micro_avg,
        confusion_matrix: cm,
    })
}

impl MetricsReport {
    pub fn class(&self, label: Label) -> &ClassMetrics {
        match label {
            Label::Hateful => &self.hateful,
            Label::Abusive => &self.abusive,
            Label::Normal => &self.normal,
        }
    }

    pub fn macro_f1(&self) -> f64 {
        self.macro_avg.f1
    }

    pub fn total(&self) -> usize {
        self.confusion_matrix.iter().flatten().sum()
    }

    pub fn with_epoch(mut self, epoch: Option<usize>) -> Self {
        self.epoch = epoch;
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned text table with the rows of a classification report.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:>12} {:>10} {:>10} {:>10} {:>10}", "", "precision", "recall", "f1-score", "support");
        for label in Label::ALL {
            let m = self.class(label);
            let _ = writeln!(
                s,
                "{:>12} {:>10.2} {:>10.2} {:>10.2} {:>10}",
                label.as_str(),
                m.precision,
                m.recall,
                m.f1,
                m.support
            );
        }
        let total = self.total();
        let _ = writeln!(s);
        let _ = writeln!(s, "{:>12} {:>10} {:>10} {:>10.2} {:>10}", "accuracy", "", "", self.accuracy, total);
        for (name, avg) in [("macro avg", &self.macro_avg), ("micro avg", &self.micro_avg)] {
            let _ = writeln!(
                s,
                "{:>12} {:>10.2} {:>10.2} {:>10.2} {:>10}",
                name, avg.precision, avg.recall, avg.f1, total
            );
        }
        s
    }

    /// Confusion counts as CSV, true classes down, predicted across.
    pub fn confusion_csv(&self) -> String {
        self.confusion_rows(|row, c| row[c].to_string())
    }

    /// Row-normalized confusion matrix in percent (two decimals).
    pub fn confusion_percent_csv(&self) -> String {
        self.confusion_rows(|row, c| {
            let support: usize = row.iter().sum();
            format!("{:.2}", 100.0 * ratio(row[c], support))
        })
    }

    fn confusion_rows(&self, cell: impl Fn(&[usize; Label::COUNT], usize) -> String) -> String {
        let mut s = String::from("true\\predicted");
        for l in Label::ALL {
            s.push(',');
            s.push_str(l.as_str());
        }
        s.push('\n');
        for t in Label::ALL {
            s.push_str(t.as_str());
            let row = &self.confusion_matrix[t.index()];
            for c in 0..Label::COUNT {
                s.push(',');
                s.push_str(&cell(row, c));
            }
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::*;

    #[test]
    fn perfect_predictions() {
        let t = [Hateful, Abusive, Normal, Normal];
        let r = compute_metrics(&t, &t).unwrap();
        assert_eq!(r.macro_f1(), 1.0);
        assert_eq!(r.accuracy, 1.0);
        for l in Label::ALL {
            assert_eq!(r.class(l).f1, 1.0);
        }
    }

    #[test]
    fn hand_confusion_matrix() {
        let r = compute_metrics(&[Hateful, Abusive, Abusive, Normal], &[Hateful, Hateful, Abusive, Normal]).unwrap();
        assert!((r.hateful.f1 - 2.0 / 3.0).abs() < 1e-15);
        assert!((r.abusive.f1 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.normal.f1, 1.0);
        assert!((r.macro_f1() - 7.0 / 9.0).abs() < 1e-15);
        assert_eq!(r.confusion_matrix, [[1, 1, 0], [0, 1, 0], [0, 0, 1]]);
    }

    #[test]
    fn majority_predictor() {
        let r = compute_metrics(&[Normal; 3], &[Hateful, Abusive, Normal]).unwrap();
        assert!((r.macro_f1() - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(r.hateful.precision, 0.0);
    }

    #[test]
    fn empty_and_mismatched_inputs() {
        assert!(compute_metrics(&[], &[]).is_err());
        assert!(compute_metrics(&[Normal], &[]).is_err());
    }

    #[test]
    fn tables_and_csv() {
        let r = compute_metrics(&[Hateful, Abusive, Abusive, Normal], &[Hateful, Hateful, Abusive, Normal]).unwrap();
        let table = r.to_table();
        for row in ["hateful", "abusive", "normal", "accuracy", "macro avg", "micro avg"] {
            assert!(table.contains(row), "{row}");
        }
        assert_eq!(
            r.confusion_csv(),
            "true\\predicted,hateful,abusive,normal\nhateful,1,1,0\nabusive,0,1,0\nnormal,0,0,1\n"
        );
        assert!(r.confusion_percent_csv().contains("hateful,50.00,50.00,0.00"));
    }
}
