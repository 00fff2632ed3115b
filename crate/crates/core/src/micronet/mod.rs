//! A small from-scratch CNN kernel covering exactly the layer set of the two
//! classifiers: conv → batch norm → ReLU (three times), flatten, linear.
//!
//! | model | input       | conv kernels | linear        | trainable |
//! |-------|-------------|--------------|---------------|-----------|
//! | 1D    | `B×1×120`   | 3            | 7,680 → 3     | 31,107    |
//! | 2D    | `B×1×2×120` | 3×3          | 15,360 → 3    | 69,603    |

mod checkpoint;
mod gradcheck;
pub mod layers;
mod loss;
mod network;
mod optim;
mod real;
mod schedule;
mod tensor;

pub use checkpoint::{load_checkpoint, save_checkpoint, LayerEntry, Manifest, TensorEntry, MANIFEST_FILE, PARAMS_FILE};
pub use gradcheck::{gradient_check, relative_error, GradCheckOptions, GradCheckReport, GradSample};
pub use layers::{BatchNorm, Conv, Flatten, Linear, Param, Pass, Relu};
pub use loss::cross_entropy_weighted;
pub use network::{
    build_model_1d, build_model_2d, Architecture, Layer, LayerSummary, NamedTensor, NetMode, Network, NUM_CLASSES,
};
pub use optim::{OptimizerKind, OptimizerState, ADAM_BETA1, ADAM_BETA2, OPTIM_EPS, RMSPROP_DECAY};
pub use real::{matmul, Mat, Real};
pub use schedule::{PlateauScheduler, PLATEAU_FACTOR, PLATEAU_MIN_DELTA, PLATEAU_PATIENCE};
pub use tensor::Tensor;

/// Trainable parameter count (batch-norm running statistics excluded).
pub fn param_count<T: Real>(net: &Network<T>) -> usize {
    net.param_count()
}
