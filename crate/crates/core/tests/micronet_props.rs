use dictnn::micronet::{
    cross_entropy_weighted, gradient_check, GradCheckOptions, load_checkpoint, save_checkpoint, Architecture, NetMode, Network, OptimizerKind,
    OptimizerState, Tensor,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn batch(arch: Architecture, n: usize, seed: u64) -> Tensor<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = arch.input_shape(n);
    let len = shape.iter().product();
    Tensor::from_vec(&shape, (0..len).map(|_| rng.gen_range(-3.0..3.0)).collect())
}

#[test]
fn batch_norm_output_is_standardized_in_training() {
    for arch in [Architecture::OneD, Architecture::TwoD] {
        let mut net = Network::<f32>::build(arch, 1);
        let outputs = net.forward_trace(&batch(arch, 8, 2)).unwrap();
        let names: Vec<String> = net.layers().map(|(n, _)| n.to_string()).collect();
        for (name, y) in names.iter().zip(&outputs).filter(|(n, _)| n.starts_with("bn")) {
            let (b, c) = (y.shape()[0], y.shape()[1]);
            let per = y.len() / (b * c);
            for ch in 0..c {
                let vals: Vec<f64> = (0..b)
                    .flat_map(|i| y.data()[(i * c + ch) * per..(i * c + ch + 1) * per].iter().map(|&v| v as f64))
                    .collect();
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
                assert!(mean.abs() < 1e-5, "{name} channel {ch}: mean {mean}");
                assert!((var - 1.0).abs() < 1e-3, "{name} channel {ch}: var {var}");
            }
        }
    }
}

#[test]
fn optimizer_moments_match_parameters() {
    let mut net = Network::<f32>::build(Architecture::OneD, 0);
    for kind in OptimizerKind::ALL {
        let mut opt = OptimizerState::new(kind, &net);
        assert_eq!(opt.steps(), 0);
        net.set_mode(NetMode::Training);
        let logits = net.forward(&batch(Architecture::OneD, 4, 1)).unwrap();
        let (_, d) = cross_entropy_weighted(&logits, &[0, 1, 2, 0], &[1.0; 3]);
        net.backward(&d).unwrap();
        opt.step(&mut net, 1e-3);
        assert_eq!(opt.steps(), 1);
    }
}

#[test]
fn checkpoint_round_trip_keeps_running_stats() {
    let mut net = Network::<f32>::build(Architecture::TwoD, 4);
    net.set_mode(NetMode::Training);
    net.forward(&batch(Architecture::TwoD, 6, 3)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_checkpoint(dir.path(), &net, 4, Some(7), serde_json::json!({"note": 1})).unwrap();
    let (loaded, manifest) = load_checkpoint(dir.path()).unwrap();
    assert_eq!(manifest.epoch, Some(7));
    assert_eq!(manifest.seed, 4);
    let a: Vec<_> = net.named_tensors().into_iter().map(|t| (t.name, t.tensor.data().to_vec())).collect();
    let b: Vec<_> = loaded.named_tensors().into_iter().map(|t| (t.name, t.tensor.data().to_vec())).collect();
    assert_eq!(a, b);
    let (mut x, mut y) = (net.clone(), loaded);
    x.set_mode(NetMode::Evaluation);
    y.set_mode(NetMode::Evaluation);
    let input = batch(Architecture::TwoD, 3, 9);
    assert_eq!(x.forward(&input).unwrap().data(), y.forward(&input).unwrap().data());
}

#[test]
fn corrupt_checkpoint_is_rejected() {
    let net = Network::<f32>::build(Architecture::OneD, 0);
    let dir = tempfile::tempdir().unwrap();
    save_checkpoint(dir.path(), &net, 0, None, serde_json::Value::Null).unwrap();
    let params = dir.path().join("params.bin");
    let bytes = std::fs::read(&params).unwrap();
    std::fs::write(&params, &bytes[..bytes.len() - 4]).unwrap();
    assert!(load_checkpoint(dir.path()).is_err());
}

#[test]
fn zero_input_conv_bias_gradients_agree() {
    for arch in [Architecture::OneD, Architecture::TwoD] {
        let net = Network::<f32>::build(arch, 5);
        let x = Tensor::zeros(&arch.input_shape(4));
        let opts = GradCheckOptions { samples: 60, ..Default::default() };
        let report = gradient_check(&net, &x, &[0, 1, 2, 1], &[1.0, 2.0, 0.5], opts).unwrap();
        let biases: Vec<_> = report.samples.iter().filter(|s| s.param.starts_with("conv") && s.param.ends_with("bias")).collect();
        assert!(!biases.is_empty());
        for s in biases {
            assert!((s.analytic - s.numeric).abs() < 1e-6, "{s:?}");
        }
    }
}

#[test]
fn gradient_check_small_batch_is_tight() {
    let net = Network::<f32>::build(Architecture::OneD, 11);
    let report = gradient_check(&net, &batch(Architecture::OneD, 2, 4), &[2, 0], &[1.0; 3], GradCheckOptions::default()).unwrap();
    assert!(report.checked().count() >= 200);
    assert!(report.max_rel_error < 1e-3, "{:?}", report.worst());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn uniform_logits_give_ln3(v in -50.0f64..50.0, w in prop::array::uniform3(0.01f64..10.0), t in prop::collection::vec(0usize..3, 1..8)) {
        let logits = Tensor::<f64>::from_vec(&[t.len(), 3], vec![v; 3 * t.len()]);
        let (loss, grad) = cross_entropy_weighted(&logits, &t, &w);
        prop_assert!((loss - 3f64.ln()).abs() < 1e-9);
        for row in grad.data().chunks(3) {
            prop_assert!(row.iter().sum::<f64>().abs() < 1e-12);
        }
    }

    #[test]
    fn eval_forward_is_finite(seed in any::<u64>(), n in 1usize..5) {
        let mut net = Network::<f32>::build(Architecture::OneD, seed);
        net.set_mode(NetMode::Evaluation);
        let y = net.forward(&batch(Architecture::OneD, n, seed)).unwrap();
        prop_assert_eq!(y.shape(), &[n, 3][..]);
        prop_assert!(y.is_finite());
    }
}
