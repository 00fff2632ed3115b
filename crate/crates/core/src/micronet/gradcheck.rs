use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::loss::cross_entropy_weighted;
use super::network::{NetMode, Network};
use super::real::Real;
use super::tensor::Tensor;
use crate::error::Result;

// Entries tried per wanted entry before a tensor gives up on kink-free ones.
const KINK_RETRIES: usize = 25;

#[derive(Debug, Clone, Copy)]
pub struct GradCheckOptions {
    /// Central-difference step.
    pub eps: f64,
    /// Minimum number of parameters compared.
    pub samples: usize,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            eps: 1e-3,
            samples: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradSample {
    pub param: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
    /// A ReLU input changed sign between the two perturbed passes, so the
    /// loss is not differentiable within `eps` of this point.
    pub kink: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// Over the samples without a kink.
    pub max_rel_error: f64,
    /// Compared entries followed by any skipped for crossing a kink.
    pub samples: Vec<GradSample>,
}

impl GradCheckReport {
    pub fn worst(&self) -> Option<&GradSample> {
        self.checked().max_by(|a, b| a.rel_error.total_cmp(&b.rel_error))
    }

    pub fn checked(&self) -> impl Iterator<Item = &GradSample> {
        self.samples.iter().filter(|s| !s.kink)
    }

    pub fn kinks(&self) -> usize {
        self.samples.iter().filter(|s| s.kink).count()
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Loss plus the on/off pattern of every ReLU.
fn loss_at(net: &mut Network<f64>, batch: &Tensor<f64>, targets: &[usize], weights: &[f64]) -> Result<(f64, Vec<bool>)> {
    let outputs = net.forward_trace(batch)?;
    let mut pattern = Vec::new();
    for ((_, layer), y) in net.layers().zip(&outputs) {
        if layer.kind() == "ReLU" {
            pattern.extend(y.data().iter().map(|&v| v > 0.0));
        }
    }
    let logits = outputs.last().expect("network has layers");
    Ok((cross_entropy_weighted(logits, targets, weights).0, pattern))
}

/// Compares backprop gradients with central finite differences on a
/// double-precision copy of `net`, in training mode with running
/// statistics frozen.
///
/// Every parameter tensor contributes at least `min(len, 4)` entries; the
/// rest of the budget is spread in proportion to tensor size. Entries whose
/// perturbation flips a ReLU are recorded as kinks and replaced by further
/// entries of the same tensor.
pub fn gradient_check<T: Real>(
    net: &Network<T>,
    batch: &Tensor<T>,
    targets: &[usize],
    weights: &[f64],
    opts: GradCheckOptions,
) -> Result<GradCheckReport> {
    let mut net: Network<f64> = net.cast();
    net.set_mode(NetMode::Training);
    net.set_update_running_stats(false);
    let batch: Tensor<f64> = batch.cast();

    let (_, base_pattern) = loss_at(&mut net, &batch, targets, weights)?;
    let logits = net.forward(&batch)?;
    let (_, dlogits) = cross_entropy_weighted(&logits, targets, weights);
    net.backward(&dlogits)?;

    let sizes: Vec<(String, usize)> = net.params().iter().map(|(n, p)| (n.clone(), p.value.len())).collect();
    let grads: Vec<Vec<f64>> = net.params().iter().map(|(_, p)| p.grad.data().to_vec()).collect();
    let total: usize = sizes.iter().map(|(_, n)| n).sum();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut samples = Vec::new();
    for (slot, (name, len)) in sizes.iter().enumerate() {
        let wanted = (opts.samples * len).div_ceil(total.max(1)).max(4).min(*len);
        let mut checked = 0;
        for idx in sample(&mut rng, *len, *len).into_iter().take(KINK_RETRIES * wanted) {
            if checked == wanted {
                break;
            }
            let original = net.params()[slot].1.value.data()[idx];
            let set = |net: &mut Network<f64>, v: f64| {
                net.params_mut()[slot].1.value.data_mut()[idx] = v;
            };
            set(&mut net, original + opts.eps);
            let (plus, plus_pattern) = loss_at(&mut net, &batch, targets, weights)?;
            set(&mut net, original - opts.eps);
            let (minus, minus_pattern) = loss_at(&mut net, &batch, targets, weights)?;
            set(&mut net, original);
            let numeric = (plus - minus) / (2.0 * opts.eps);
            let analytic = grads[slot][idx];
            let kink = plus_pattern != base_pattern || minus_pattern != base_pattern;
            checked += usize::from(!kink);
            samples.push(GradSample {
                param: name.clone(),
                index: idx,
                analytic,
                numeric,
                rel_error: relative_error(analytic, numeric),
                kink,
            });
        }
    }
    let max_rel_error = samples.iter().filter(|s| !s.kink).map(|s| s.rel_error).fold(0.0, f64::max);
    Ok(GradCheckReport { max_rel_error, samples })
}
