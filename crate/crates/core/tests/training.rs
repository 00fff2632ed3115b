use dictnn::datapipe::TweetRecord;
use dictnn::error::Error;
use dictnn::fusion::{Mode, Vectorizer, MAX_LEN};
use dictnn::harness::{
    evaluate, evaluate_checkpoint, full_grid, grid_search, train, write_report, Balancing, EncodedSplit, RunConfig,
    TrainStatus,
};
use dictnn::hatedict::TokenScorer;
use dictnn::micronet::{load_checkpoint, Architecture, Network, OptimizerKind};
use dictnn::synthetic::{generate, SyntheticOptions};
use dictnn::tokenscalar::VocabEncoder;
use dictnn::Label;

fn toy(n: usize, mode: Mode, seed: u64) -> (EncodedSplit, Vec<TweetRecord>) {
    let corpus = generate(&SyntheticOptions {
        tweets: n,
        seed,
        ..SyntheticOptions::default()
    });
    let scorer = TokenScorer::new(&corpus.dictionary);
    let enc = VocabEncoder::new(corpus.vocab.clone());
    let v = Vectorizer {
        mode,
        provider: &enc,
        scorer: Some(&scorer),
    };
    (EncodedSplit::encode(&corpus.records, &v).unwrap(), corpus.records)
}

fn config(mode: Mode, epochs: usize) -> RunConfig {
    RunConfig {
        model: mode,
        epochs,
        seed: 1,
        ..RunConfig::default()
    }
}

#[test]
fn memorizes_ten_tweets() {
    for mode in [Mode::OneD, Mode::TwoD] {
        let (data, _) = toy(10, mode, 3);
        let cfg = RunConfig {
            lr: 0.001,
            batch_size: 10,
            ..config(mode, 60)
        };
        let out = train(&cfg, &data, &data, None).unwrap();
        let report = evaluate(out.best_network.as_ref().unwrap(), &data).unwrap();
        assert_eq!(report.accuracy, 1.0, "{mode}: {}", report.to_table());
        assert_eq!(report.micro_avg.f1, report.accuracy);
    }
}

#[test]
fn best_epoch_checkpoint_matches_history_maximum() {
    let (data, _) = toy(120, Mode::TwoD, 4);
    let dir = tempfile::tempdir().unwrap();
    let out = train(&config(Mode::TwoD, 6), &data, &data, Some(dir.path())).unwrap();
    assert_eq!(out.status, TrainStatus::Completed);
    assert_eq!(out.history.len(), 6);
    assert_eq!(out.history.iter().map(|e| e.epoch).collect::<Vec<_>>(), [1, 2, 3, 4, 5, 6]);
    let best = out.history.iter().map(|e| e.val_macro_f1).fold(f64::MIN, f64::max);
    let best_epoch = out.best_epoch.unwrap();
    assert_eq!(out.history[best_epoch - 1].val_macro_f1, best);
    assert!(out.history[..best_epoch - 1].iter().all(|e| e.val_macro_f1 < best));

    let (net, manifest) = load_checkpoint(dir.path()).unwrap();
    assert_eq!(manifest.epoch, Some(best_epoch));
    let reloaded = evaluate_checkpoint(dir.path(), &data).unwrap();
    assert_eq!(reloaded.macro_f1(), best);
    assert_eq!(reloaded.epoch, Some(best_epoch));
    let direct = evaluate(&net, &data).unwrap();
    assert_eq!(direct.confusion_matrix, reloaded.confusion_matrix);

    let files = write_report(&reloaded, dir.path(), "test_report").unwrap();
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(files.json).unwrap()).unwrap();
    assert_eq!(json["macro_avg"]["f1"].as_f64().unwrap(), best);
    let pct = std::fs::read_to_string(files.confusion_percent).unwrap();
    assert_eq!(pct.lines().count(), 4);
}

#[test]
fn training_is_deterministic() {
    let (data, _) = toy(64, Mode::OneD, 5);
    let a = train(&config(Mode::OneD, 3), &data, &data, None).unwrap();
    let b = train(&config(Mode::OneD, 3), &data, &data, None).unwrap();
    assert_eq!(a.history, b.history);
    assert_eq!(
        a.best_report.unwrap().to_json(),
        b.best_report.unwrap().to_json()
    );
    let x = Network::<f32>::build(Architecture::TwoD, 9);
    let y = Network::<f32>::build(Architecture::TwoD, 9);
    for (p, q) in x.params().iter().zip(y.params()) {
        assert_eq!(p.1.value.data(), q.1.value.data());
    }
}

#[test]
fn zero_epochs_is_no_training() {
    let (data, _) = toy(20, Mode::OneD, 6);
    let out = train(&config(Mode::OneD, 0), &data, &data, None).unwrap();
    assert_eq!(out.status, TrainStatus::NoTraining);
    assert!(out.history.is_empty() && out.best_network.is_none());
}

#[test]
fn architecture_mismatch_is_an_error() {
    let (one, _) = toy(20, Mode::OneD, 6);
    let net = Network::<f32>::build(Architecture::TwoD, 0);
    assert!(matches!(evaluate(&net, &one), Err(Error::Shape { .. })));
    assert!(train(&config(Mode::TwoD, 1), &one, &one, None).is_err());
}

#[test]
fn exploding_learning_rate_aborts() {
    let labels = vec![Label::Hateful, Label::Abusive, Label::Normal, Label::Normal];
    let inputs: Vec<f32> = (0..4 * MAX_LEN).map(|i| (i % 97) as f32 * 1e3).collect();
    let data = EncodedSplit::from_parts(Architecture::OneD, inputs, labels);
    let cfg = RunConfig {
        optimizer: OptimizerKind::Sgd,
        lr: 1e30,
        batch_size: 2,
        ..config(Mode::OneD, 5)
    };
    match train(&cfg, &data, &data, None) {
        Err(Error::NonFiniteLoss { epoch, .. }) => assert!(epoch >= 1),
        other => panic!("expected a non-finite loss, got {:?}", other.map(|o| o.history)),
    }
}

#[test]
fn grid_runs_and_picks_the_best() {
    let (data, _) = toy(48, Mode::OneD, 8);
    let points: Vec<_> = full_grid()
        .into_iter()
        .filter(|p| p.optimizer == OptimizerKind::Adam && p.balancing == Balancing::ClassWeights && !p.scheduler)
        .collect();
    assert_eq!(points.len(), 3);
    let mut seen = 0;
    let report = grid_search(&config(Mode::OneD, 2), &points, &data, &data, |_| seen += 1).unwrap();
    assert_eq!(seen, 3);
    let best = report.best_run().unwrap().best_val_f1.unwrap();
    assert!(report.runs.iter().all(|r| r.best_val_f1.unwrap() <= best));
    assert_eq!(report.expected_validation_performance.len(), 3);
    assert!(report.expected_validation_performance[2] <= best + 1e-12);
}
