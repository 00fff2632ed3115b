use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::metrics::{compute_metrics, MetricsReport};
use crate::datapipe::{class_counts, class_weights, make_batches, BatchMode, ClassWeights, TweetRecord};
use crate::error::{Error, Result};
use crate::fusion::{Vectorizer, MAX_LEN};
use crate::micronet::{
    cross_entropy_weighted, save_checkpoint, Architecture, NetMode, Network, OptimizerState, PlateauScheduler, Tensor,
};
use crate::Label;

const EVAL_BATCH: usize = 256;

/// Vectorized split: one fixed-size matrix per record, stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedSplit {
    pub arch: Architecture,
    pub ids: Vec<String>,
    pub inputs: Vec<f32>,
    pub labels: Vec<Label>,
}

impl EncodedSplit {
    pub fn encode(records: &[TweetRecord], vectorizer: &Vectorizer<'_>) -> Result<Self> {
        let arch = Architecture::from(vectorizer.mode);
        let mut inputs = Vec::with_capacity(records.len() * arch.input_rows() * MAX_LEN);
        for r in records {
            inputs.extend_from_slice(vectorizer.vectorize(&r.id, &r.text)?.values());
        }
        Ok(EncodedSplit {
            arch,
            ids: records.iter().map(|r| r.id.clone()).collect(),
            inputs,
            labels: records.iter().map(|r| r.label).collect(),
        })
    }

    pub fn from_parts(arch: Architecture, inputs: Vec<f32>, labels: Vec<Label>) -> Self {
        assert_eq!(inputs.len(), labels.len() * arch.input_rows() * MAX_LEN);
        EncodedSplit {
            arch,
            ids: (0..labels.len()).map(|i| i.to_string()).collect(),
            inputs,
            labels,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    fn width(&self) -> usize {
        self.arch.input_rows() * MAX_LEN
    }

    pub fn batch(&self, indices: &[usize]) -> Tensor<f32> {
        let w = self.width();
        let mut data = Vec::with_capacity(indices.len() * w);
        for &i in indices {
            data.extend_from_slice(&self.inputs[i * w..(i + 1) * w]);
        }
        Tensor::from_vec(&self.arch.input_shape(indices.len()), data)
    }

    pub fn targets(&self, indices: &[usize]) -> Vec<usize> {
        indices.iter().map(|&i| self.labels[i].index()).collect()
    }
}

fn argmax_labels(logits: &Tensor<f32>) -> Vec<Label> {
    logits
        .data()
        .chunks_exact(Label::COUNT)
        .map(|row| {
            let best = row
                .iter()
                .enumerate()
                .fold(0, |best, (i, &v)| if v > row[best] { i } else { best });
            Label::ALL[best]
        })
        .collect()
}

/// Evaluation-mode predictions for every record, with the weighted loss.
pub fn predict(net: &mut Network<f32>, data: &EncodedSplit, weights: &ClassWeights) -> Result<(Vec<Label>, f64)> {
    if data.arch != net.architecture() {
        return Err(Error::Shape {
            layer: "input".into(),
            expected: format!("{} inputs", net.architecture().id()),
            actual: data.arch.input_shape(data.len()),
        });
    }
    let previous = net.mode();
    net.set_mode(NetMode::Evaluation);
    let mut preds = Vec::with_capacity(data.len());
    let (mut loss_sum, mut weight_sum) = (0.0, 0.0);
    for batch in make_batches(&data.labels, EVAL_BATCH, BatchMode::Sequential, 0, 0) {
        let logits = net.forward(&data.batch(&batch))?;
        let targets = data.targets(&batch);
        let (loss, _) = cross_entropy_weighted(&logits, &targets, weights.as_slice());
        let w: f64 = targets.iter().map(|&t| weights.0[t]).sum();
        loss_sum += loss * w;
        weight_sum += w;
        preds.extend(argmax_labels(&logits));
    }
    net.set_mode(previous);
    let loss = if weight_sum > 0.0 { loss_sum / weight_sum } else { 0.0 };
    Ok((preds, loss))
}

pub fn evaluate_network(net: &mut Network<f32>, data: &EncodedSplit) -> Result<MetricsReport> {
    let (preds, _) = predict(net, data, &ClassWeights::UNIT)?;
    compute_metrics(&preds, &data.labels)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub train_macro_f1: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
    pub val_macro_f1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainStatus {
    Completed,
    /// Zero epochs requested.
    NoTraining,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub status: TrainStatus,
    pub history: Vec<EpochRecord>,
    pub best_epoch: Option<usize>,
    pub best_report: Option<MetricsReport>,
    pub best_network: Option<Network<f32>>,
    pub final_network: Network<f32>,
    pub loss_weights: ClassWeights,
}

impl TrainOutcome {
    pub fn best_val_f1(&self) -> Option<f64> {
        self.best_report.as_ref().map(|r| r.macro_f1())
    }
}

pub fn history_csv(history: &[EpochRecord]) -> String {
    let mut s = String::from("epoch,lr,train_loss,train_accuracy,train_macro_f1,val_loss,val_accuracy,val_macro_f1\n");
    for e in history {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            e.epoch, e.lr, e.train_loss, e.train_accuracy, e.train_macro_f1, e.val_loss, e.val_accuracy, e.val_macro_f1
        );
    }
    s
}

/// Trains a fresh network on `train`, scoring `validation` after every
/// epoch. The network from the epoch with the highest validation macro F1
/// is kept (and written to `checkpoint_dir` each time it improves).
pub fn train(
    config: &RunConfig,
    train: &EncodedSplit,
    validation: &EncodedSplit,
    checkpoint_dir: Option<&Path>,
) -> Result<TrainOutcome> {
    config.validate()?;
    let arch = Architecture::from(config.model);
    if train.arch != arch || validation.arch != arch {
        return Err(Error::Config(format!(
            "model {} but inputs are {}/{}",
            arch.id(),
            train.arch.id(),
            validation.arch.id()
        )));
    }
    let loss_weights = match config.balancing {
        super::config::Balancing::ClassWeights => class_weights(class_counts(&train.labels))?,
        super::config::Balancing::Sampler => ClassWeights::UNIT,
    };
    let mut net = Network::<f32>::build(arch, config.seed);
    let mut outcome = TrainOutcome {
        status: TrainStatus::NoTraining,
        history: Vec::new(),
        best_epoch: None,
        best_report: None,
        best_network: None,
        final_network: net.clone(),
        loss_weights,
    };
    if config.epochs == 0 {
        return Ok(outcome);
    }
    if train.is_empty() || validation.is_empty() {
        return Err(Error::Config("training and validation splits must be non-empty".into()));
    }

    let mut optimizer = OptimizerState::new(config.optimizer, &net);
    let mut scheduler = PlateauScheduler::new(config.scheduler);
    let mut lr = config.lr;
    let batch_seed = config.seed.wrapping_add(1);

    for epoch in 1..=config.epochs {
        net.set_mode(NetMode::Training);
        let batches = make_batches(&train.labels, config.batch_size, config.batch_mode(), batch_seed, epoch);
        let (mut loss_sum, mut weight_sum) = (0.0, 0.0);
        let mut seen_preds = Vec::with_capacity(train.len());
        let mut seen_targets = Vec::with_capacity(train.len());
        for (b, idx) in batches.iter().enumerate() {
            let x = train.batch(idx);
            let targets = train.targets(idx);
            let logits = net.forward(&x)?;
            let (loss, dlogits) = cross_entropy_weighted(&logits, &targets, loss_weights.as_slice());
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b, lr });
            }
            net.backward(&dlogits)?;
            optimizer.step(&mut net, lr);

            let w: f64 = targets.iter().map(|&t| loss_weights.0[t]).sum();
            loss_sum += loss * w;
            weight_sum += w;
            seen_preds.extend(argmax_labels(&logits));
            seen_targets.extend(idx.iter().map(|&i| train.labels[i]));
        }
        let train_report = compute_metrics(&seen_preds, &seen_targets)?;

        let (val_preds, val_loss) = predict(&mut net, validation, &loss_weights)?;
        let val_report = compute_metrics(&val_preds, &validation.labels)?.with_epoch(Some(epoch));
        outcome.history.push(EpochRecord {
            epoch,
            lr,
            train_loss: loss_sum / weight_sum,
            train_accuracy: train_report.accuracy,
            train_macro_f1: train_report.macro_f1(),
            val_loss,
            val_accuracy: val_report.accuracy,
            val_macro_f1: val_report.macro_f1(),
        });

        let improved = outcome
            .best_report
            .as_ref()
            .is_none_or(|best| val_report.macro_f1() > best.macro_f1());
        if improved {
            if let Some(dir) = checkpoint_dir {
                let metrics = serde_json::to_value(&val_report)?;
                save_checkpoint(dir, &net, config.seed, Some(epoch), metrics)?;
            }
            outcome.best_epoch = Some(epoch);
            outcome.best_report = Some(val_report.clone());
            outcome.best_network = Some(net.clone());
        }
        lr = scheduler.step(val_report.macro_f1(), lr);
    }
    outcome.status = TrainStatus::Completed;
    outcome.final_network = net;
    Ok(outcome)
}
