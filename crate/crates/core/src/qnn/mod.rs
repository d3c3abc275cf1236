//! Variational quantum classifier: angle encoding, a layered rotation
//! ansatz, `⟨Z⟩` logits under softmax cross-entropy, exact parameter-shift
//! gradients and momentum training.

mod dataset;
mod grad;
mod model;
mod train;

pub use dataset::{Dataset, Splits};
pub use grad::{grad_parameter_shift, sample_gradient};
pub use model::{
    build_vqc, evaluate_accuracy, forward, loss, mean_loss, predict, softmax, EncodingSpec,
    ModelJson, QnnModel,
};
pub use train::{train, train_with, Proximal, TrainConfig, TrainExtras, TrainReport};

pub(crate) use train::signed_diff;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Uniform random angles in `[0, 2π)`.
pub fn init_theta(n_params: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_params)
        .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
        .collect()
}
