use super::layers::Param;
use super::network::Network;
use super::real::Real;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const RMSPROP_DECAY: f64 = 0.99;
pub const OPTIM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    #[serde(rename = "rmsprop")]
    RmsProp,
    Adam,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 3] = [OptimizerKind::Adam, OptimizerKind::RmsProp, OptimizerKind::Sgd];

    pub fn as_str(self) -> &'static str {
        match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::RmsProp => "rmsprop",
            OptimizerKind::Adam => "adam",
        }
    }
}

impl std::fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for OptimizerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sgd" => Ok(OptimizerKind::Sgd),
            "rmsprop" => Ok(OptimizerKind::RmsProp),
            "adam" => Ok(OptimizerKind::Adam),
            other => Err(format!("unknown optimizer {other:?}")),
        }
    }
}

/// Moment buffers for one optimizer rule, one per parameter tensor in
/// [`Network::params`] order.
#[derive(Debug, Clone)]
pub struct OptimizerState<T> {
    kind: OptimizerKind,
    first: Vec<Vec<T>>,
    second: Vec<Vec<T>>,
    step: u64,
}

impl<T: Real> OptimizerState<T> {
    pub fn new(kind: OptimizerKind, net: &Network<T>) -> Self {
        Self::for_sizes(kind, net.params().iter().map(|(_, p)| p.value.len()))
    }

    pub fn for_sizes(kind: OptimizerKind, sizes: impl IntoIterator<Item = usize>) -> Self {
        let sizes: Vec<usize> = sizes.into_iter().collect();
        let buffers = |used: bool| -> Vec<Vec<T>> {
            if used {
                sizes.iter().map(|&n| vec![T::zero(); n]).collect()
            } else {
                Vec::new()
            }
        };
        OptimizerState {
            kind,
            first: buffers(kind == OptimizerKind::Adam),
            second: buffers(kind != OptimizerKind::Sgd),
            step: 0,
        }
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Applies one update to every parameter of `net` from its gradients.
    pub fn step(&mut self, net: &mut Network<T>, lr: f64) {
        let mut params = net.params_mut();
        let mut refs: Vec<&mut Param<T>> = params.iter_mut().map(|(_, p)| &mut **p).collect();
        self.step_params(&mut refs, lr);
    }

    pub fn step_params(&mut self, params: &mut [&mut Param<T>], lr: f64) {
        self.step += 1;
        let t = self.step as i32;
        for (i, param) in params.iter_mut().enumerate() {
            let Param { value, grad } = &mut **param;
            let (p, g) = (value.data_mut(), grad.data());
            match self.kind {
                OptimizerKind::Sgd => {
                    for (p, &g) in p.iter_mut().zip(g) {
                        *p = T::from_f64_lossy(p.as_f64() - lr * g.as_f64());
                    }
                }
                OptimizerKind::RmsProp => {
                    let sq = &mut self.second[i];
                    for ((p, &g), s) in p.iter_mut().zip(g).zip(sq.iter_mut()) {
                        let g = g.as_f64();
                        let v = RMSPROP_DECAY * s.as_f64() + (1.0 - RMSPROP_DECAY) * g * g;
                        *s = T::from_f64_lossy(v);
                        *p = T::from_f64_lossy(p.as_f64() - lr * g / (v.sqrt() + OPTIM_EPS));
                    }
                }
                OptimizerKind::Adam => {
                    let bc1 = 1.0 - ADAM_BETA1.powi(t);
                    let bc2 = 1.0 - ADAM_BETA2.powi(t);
                    let (m1, m2) = (&mut self.first[i], &mut self.second[i]);
                    for (((p, &g), m), v) in p.iter_mut().zip(g).zip(m1.iter_mut()).zip(m2.iter_mut()) {
                        let g = g.as_f64();
                        let m_new = ADAM_BETA1 * m.as_f64() + (1.0 - ADAM_BETA1) * g;
                        let v_new = ADAM_BETA2 * v.as_f64() + (1.0 - ADAM_BETA2) * g * g;
                        *m = T::from_f64_lossy(m_new);
                        *v = T::from_f64_lossy(v_new);
                        let (m_hat, v_hat) = (m_new / bc1, v_new / bc2);
                        *p = T::from_f64_lossy(p.as_f64() - lr * m_hat / (v_hat.sqrt() + OPTIM_EPS));
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::micronet::Tensor;

    fn scalar(p: f64, g: f64) -> Param<f64> {
        let mut param = Param::new(Tensor::from_vec(&[1], vec![p]));
        param.grad.data_mut()[0] = g;
        param
    }

    fn run(kind: OptimizerKind, p: f64, g: f64, lr: f64) -> f64 {
        let mut param = scalar(p, g);
        let mut state = OptimizerState::<f64>::for_sizes(kind, [1]);
        state.step_params(&mut [&mut param], lr);
        assert_eq!(state.steps(), 1);
        param.value.data()[0]
    }

    #[test]
    fn sgd_rule() {
        assert_eq!(run(OptimizerKind::Sgd, 1.0, 0.5, 0.01), 0.995);
        assert_eq!(run(OptimizerKind::Sgd, 1.0, 0.0, 0.01), 1.0);
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        // m̂ = v̂ = 1 after bias correction
        let p = run(OptimizerKind::Adam, 0.0, 1.0, 0.01);
        assert!((p + 0.01 / (1.0 + OPTIM_EPS)).abs() < 1e-15);
    }

    #[test]
    fn rmsprop_first_step() {
        // v = 0.01·g², step = lr·g/(|g|·0.1 + eps)
        let p = run(OptimizerKind::RmsProp, 0.0, 2.0, 0.001);
        assert!((p + 0.001 * 2.0 / (0.2 + OPTIM_EPS)).abs() < 1e-15);
    }

    #[test]
    fn adam_follows_recurrence_over_steps() {
        let mut param = scalar(1.0, 0.0);
        let mut state = OptimizerState::<f64>::for_sizes(OptimizerKind::Adam, [1]);
        let grads = [0.3, -0.1, 0.7];
        let (mut m, mut v, mut p) = (0.0, 0.0, 1.0);
        for (t, &g) in grads.iter().enumerate() {
            param.grad.data_mut()[0] = g;
            state.step_params(&mut [&mut param], 0.01);
            m = 0.9 * m + 0.1 * g;
            v = 0.999 * v + 0.001 * g * g;
            let k = t as i32 + 1;
            p -= 0.01 * (m / (1.0 - 0.9f64.powi(k))) / ((v / (1.0 - 0.999f64.powi(k))).sqrt() + 1e-8);
            assert!((param.value.data()[0] - p).abs() < 1e-14);
        }
    }
}
