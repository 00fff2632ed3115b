use super::real::Real;
use super::tensor::Tensor;

/// Class-weighted cross-entropy, normalized by the summed weight of the
/// batch's targets (the weighted mean; plain mean for unit weights).
///
/// Returns the loss and its gradient with respect to the logits.
pub fn cross_entropy_weighted<T: Real>(logits: &Tensor<T>, targets: &[usize], weights: &[f64]) -> (f64, Tensor<T>) {
    let shape = logits.shape();
    assert_eq!(shape.len(), 2, "logits must be B×K");
    let (batch, classes) = (shape[0], shape[1]);
    assert_eq!(targets.len(), batch, "one target per row");
    assert_eq!(weights.len(), classes, "one weight per class");

    let total_weight: f64 = targets.iter().map(|&y| weights[y]).sum();
    let mut grad = Tensor::zeros(shape);
    let mut loss = 0.0;
    for (b, &y) in targets.iter().enumerate() {
        let row: Vec<f64> = logits.data()[b * classes..(b + 1) * classes].iter().map(|v| v.as_f64()).collect();
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum_exp: f64 = row.iter().map(|z| (z - max).exp()).sum();
        let lse = max + sum_exp.ln();
        let w = weights[y] / total_weight;
        loss += w * (lse - row[y]);
        for (c, z) in row.iter().enumerate() {
            let p = (z - lse).exp();
            let onehot = if c == y { 1.0 } else { 0.0 };
            grad.data_mut()[b * classes + c] = T::from_f64_lossy(w * (p - onehot));
        }
    }
    (loss, grad)
}
