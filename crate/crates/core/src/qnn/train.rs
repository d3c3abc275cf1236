use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::grad::grad_parameter_shift;
use super::model::{mean_loss_with, QnnModel};
use crate::error::{Error, Result};
use crate::qcore::{normalize_angle, NoiseModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub momentum: f64,
    pub seed: u64,
    /// Noise injection: forward and gradients run on the noisy simulator.
    #[serde(skip)]
    pub noise: Option<NoiseModel>,
    /// Return the parameters with the lowest selection loss seen (the
    /// starting point included) instead of the last iterate.
    pub keep_best: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch_size: 16,
            lr: 0.05,
            momentum: 0.9,
            seed: 0,
            noise: None,
            keep_best: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("learning rate {} invalid", self.lr)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!("momentum {} outside [0, 1)", self.momentum)));
        }
        Ok(())
    }
}

/// Quadratic pull `ρ/2 · Σ d(θ_i, target_i)²` with `d` the signed circular
/// difference, as used by the augmented Lagrangian of compression.
#[derive(Debug, Clone, PartialEq)]
pub struct Proximal {
    pub rho: f64,
    pub target: Vec<f64>,
}

pub(crate) fn signed_diff(a: f64, b: f64) -> f64 {
    let d = normalize_angle(a - b);
    if d > std::f64::consts::PI {
        d - std::f64::consts::TAU
    } else {
        d
    }
}

/// Optional extras for a training run.
#[derive(Debug, Clone, Default)]
pub struct TrainExtras<'a> {
    pub frozen: Option<&'a [bool]>,
    pub proximal: Option<&'a Proximal>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean training loss per epoch (data term only).
    pub train_loss: Vec<f64>,
    /// Selection loss per epoch when tracked.
    pub select_loss: Vec<f64>,
    pub best_epoch: Option<usize>,
}

/// Mini-batch gradient descent with momentum on the cross-entropy loss,
/// under `config.noise` when given. Angles are wrapped to `[0, 2π)` after every
/// step. Selection uses `val` when non-empty, otherwise `train`.
pub fn train(
    model: &QnnModel,
    train: &Dataset,
    val: Option<&Dataset>,
    config: &TrainConfig,
) -> Result<(QnnModel, TrainReport)> {
    train_with(model, train, val, config, &TrainExtras::default())
}

pub fn train_with(
    model: &QnnModel,
    train: &Dataset,
    val: Option<&Dataset>,
    config: &TrainConfig,
    extras: &TrainExtras<'_>,
) -> Result<(QnnModel, TrainReport)> {
    config.validate()?;
    let noise = config.noise.as_ref();
    if train.is_empty() {
        return Err(Error::Dataset("empty training set".into()));
    }
    if let Some(p) = extras.proximal {
        if p.target.len() != model.theta.len() {
            return Err(Error::ParamLength {
                expected: model.theta.len(),
                got: p.target.len(),
            });
        }
    }
    let select = match val {
        Some(v) if !v.is_empty() => v,
        _ => train,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut theta = model.theta.clone();
    let mut velocity = vec![0.0; theta.len()];
    let mut report = TrainReport {
        train_loss: Vec::with_capacity(config.epochs),
        select_loss: Vec::new(),
        best_epoch: None,
    };
    let mut best = if config.keep_best {
        Some((mean_loss_with(model, &theta, select, noise)?, theta.clone()))
    } else {
        None
    };
    let mut order: Vec<usize> = (0..train.len()).collect();

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch = train.subset(chunk);
            let (l, mut grad) = grad_parameter_shift(model, &theta, &batch, noise, extras.frozen)?;
            epoch_loss += l * chunk.len() as f64;
            if let Some(p) = extras.proximal {
                for (i, g) in grad.iter_mut().enumerate() {
                    if extras.frozen.is_none_or(|f| !f[i]) {
                        *g += p.rho * signed_diff(theta[i], p.target[i]);
                    }
                }
            }
            for ((t, v), g) in theta.iter_mut().zip(velocity.iter_mut()).zip(&grad) {
                *v = config.momentum * *v + g;
                *t = normalize_angle(*t - config.lr * *v);
            }
        }
        report.train_loss.push(epoch_loss / train.len() as f64);
        if let Some((best_loss, best_theta)) = best.as_mut() {
            let l = mean_loss_with(model, &theta, select, noise)?;
            report.select_loss.push(l);
            if l < *best_loss {
                *best_loss = l;
                best_theta.clone_from(&theta);
                report.best_epoch = Some(epoch);
            }
        }
    }
    let mut out = model.clone();
    out.theta = match best {
        Some((_, t)) => t,
        None => theta,
    };
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::pair;
    use crate::qnn::dataset::Splits;
    use crate::qnn::model::{build_vqc, evaluate_accuracy, EncodingSpec};
    use std::collections::BTreeSet;

    fn iris_model() -> (QnnModel, Splits) {
        let data = Dataset::iris();
        let splits = Splits::new(&data, 0.6, 0.1, 0);
        let coupling: BTreeSet<_> = (0..4).map(|i| pair(i, (i + 1) % 4)).collect();
        let c = build_vqc(4, 3, &coupling).unwrap();
        let theta = crate::qnn::init_theta(c.n_params, 0);
        let enc = EncodingSpec::fitted(4, &splits.train);
        (QnnModel::new(c, theta, enc, vec![0, 1, 2]).unwrap(), splits)
    }

    #[test]
    fn zero_lr_keeps_parameters() {
        let (m, s) = iris_model();
        let cfg = TrainConfig {
            epochs: 2,
            lr: 0.0,
            ..TrainConfig::default()
        };
        let (out, _) = train(&m, &s.train, Some(&s.val), &cfg).unwrap();
        assert_eq!(out.theta, m.theta);
    }

    #[test]
    fn same_seed_same_trace() {
        let (m, s) = iris_model();
        let cfg = TrainConfig {
            epochs: 2,
            ..TrainConfig::default()
        };
        let a = train(&m, &s.train, Some(&s.val), &cfg).unwrap();
        let b = train(&m, &s.train, Some(&s.val), &cfg).unwrap();
        assert_eq!(a.1, b.1);
        assert_eq!(a.0.theta, b.0.theta);
    }

    #[test]
    fn signed_diff_wraps() {
        assert!((signed_diff(0.1, 6.2) - (0.1 + std::f64::consts::TAU - 6.2)).abs() < 1e-12);
        assert!((signed_diff(6.2, 0.1) + (0.1 + std::f64::consts::TAU - 6.2)).abs() < 1e-12);
    }

    #[test]
    fn learns_iris() {
        let (m, s) = iris_model();
        let (out, report) = train(&m, &s.train, Some(&s.val), &TrainConfig::default()).unwrap();
        let acc = evaluate_accuracy(&out, &s.train, None).unwrap();
        assert!(acc >= 0.90, "train accuracy {acc}, losses {:?}", report.train_loss);
    }
}
