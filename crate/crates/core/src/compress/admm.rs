use std::path::Path;

use serde::{Deserialize, Serialize};

use super::levels::{
    make_mask, nearest_level, priority_table, project_z, CompressionTable, PriorityMode,
    ThresholdPolicy,
};
use crate::calib::{build_noise_model_with_cost, CalibrationSnapshot};
use crate::error::{Error, Result};
use crate::qcore::{GateCostModel, NoiseModel};
use crate::qnn::{self, train_with, Dataset, ModelJson, Proximal, QnnModel, TrainConfig, TrainExtras};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompressConfig {
    pub table: CompressionTable,
    pub rho: f64,
    pub rounds: usize,
    pub inner_epochs: usize,
    pub threshold: ThresholdPolicy,
    pub finetune_epochs: usize,
    pub priority: PriorityMode,
    pub batch_size: usize,
    pub lr: f64,
    pub momentum: f64,
    pub cost: GateCostModel,
    pub seed: u64,
}

impl Default for CompressConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        CompressConfig {
            table: CompressionTable::default(),
            rho: 0.01,
            rounds: 5,
            inner_epochs: 5,
            threshold: ThresholdPolicy::Fraction(0.5),
            finetune_epochs: 10,
            priority: PriorityMode::NoiseAware,
            batch_size: t.batch_size,
            lr: t.lr,
            momentum: t.momentum,
            cost: GateCostModel::default(),
            seed: 0,
        }
    }
}

impl CompressConfig {
    pub fn validate(&self) -> Result<()> {
        self.table.validate()?;
        self.threshold.validate()?;
        self.cost.validate()?;
        if self.rounds == 0 {
            return Err(Error::Config("ADMM needs at least one round".into()));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::Config(format!("rho {} must be positive", self.rho)));
        }
        Ok(())
    }

    fn train_config(&self, epochs: usize, seed: u64, noise: Option<NoiseModel>, keep_best: bool) -> TrainConfig {
        TrainConfig {
            epochs,
            batch_size: self.batch_size,
            lr: self.lr,
            momentum: self.momentum,
            seed,
            noise,
            keep_best,
        }
    }
}

/// ADMM variables after the last round.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressionState {
    pub t_admm: Vec<f64>,
    pub dist: Vec<f64>,
    pub priority: Vec<f64>,
    pub mask: Vec<bool>,
    pub z: Vec<f64>,
    pub u: Vec<f64>,
    pub rho: f64,
    pub round: usize,
}

/// Nearest levels, distances, priorities and mask for `theta`.
pub fn mask_step(
    model: &QnnModel,
    theta: &[f64],
    snapshot: &CalibrationSnapshot,
    config: &CompressConfig,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<bool>)> {
    let (t_admm, dist): (Vec<f64>, Vec<f64>) =
        theta.iter().map(|&t| nearest_level(t, &config.table)).unzip();
    let priority = priority_table(&model.circuit, &dist, snapshot, config.priority)?;
    let mask = make_mask(&priority, config.threshold.resolve(&priority));
    Ok((t_admm, dist, priority, mask))
}

/// Compressed model with its freeze mask.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressResult {
    pub model: QnnModel,
    pub mask: Vec<bool>,
    pub state: CompressionState,
}

/// Noise-aware ADMM compression under `snapshot`, followed by
/// noise-injected fine-tuning of the unmasked parameters.
///
/// Each round recomputes the mask from the current angles, runs
/// `inner_epochs` of noiseless training on the loss plus
/// `ρ/2‖θ − Z + U‖²`, projects `Z` and updates the dual `U`. After the last
/// round masked parameters are set exactly to their levels.
pub fn admm_compress(
    model: &QnnModel,
    train: &Dataset,
    val: Option<&Dataset>,
    snapshot: &CalibrationSnapshot,
    config: &CompressConfig,
) -> Result<CompressResult> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::Dataset("compression needs training data".into()));
    }
    model.circuit.check_routed()?;
    let noise = build_noise_model_with_cost(snapshot, config.cost.clone())?;
    let n = model.theta.len();
    let mut theta = model.theta.clone();
    let mut u = vec![0.0; n];
    let mut z = Vec::new();
    let mut state = None;

    for round in 0..config.rounds {
        let (t_admm, dist, priority, mask) = mask_step(model, &theta, snapshot, config)?;
        if round == 0 {
            z = project_z(&theta, &mask, &t_admm);
        }
        let proximal = Proximal {
            rho: config.rho,
            target: z.iter().zip(&u).map(|(z, u)| z - u).collect(),
        };
        let mut current = model.clone();
        current.theta = theta;
        let cfg = config.train_config(config.inner_epochs, config.seed.wrapping_add(round as u64), None, false);
        let extras = TrainExtras {
            frozen: None,
            proximal: Some(&proximal),
        };
        theta = train_with(&current, train, None, &cfg, &extras)?.0.theta;

        let theta_plus_u: Vec<f64> = theta.iter().zip(&u).map(|(t, u)| t + u).collect();
        z = project_z(&theta_plus_u, &mask, &t_admm);
        for ((ui, t), zi) in u.iter_mut().zip(&theta).zip(&z) {
            *ui += qnn::signed_diff(*t, *zi);
        }
        state = Some(CompressionState {
            t_admm,
            dist,
            priority,
            mask,
            z: z.clone(),
            u: u.clone(),
            rho: config.rho,
            round,
        });
    }
    let state = state.expect("at least one round");
    for ((t, &m), &level) in theta.iter_mut().zip(&state.mask).zip(&state.t_admm) {
        if m {
            *t = level;
        }
    }
    let mut hard = model.clone();
    hard.theta = theta;
    let tuned = finetune(
        &hard,
        &state.mask,
        train,
        val,
        &noise,
        config.finetune_epochs,
        config,
    )?;
    Ok(CompressResult {
        model: tuned,
        mask: state.mask.clone(),
        state,
    })
}

/// Noise-injected training of the parameters with `mask_i = 0`; masked
/// parameters are left bit-identical.
pub fn finetune(
    model: &QnnModel,
    mask: &[bool],
    train: &Dataset,
    val: Option<&Dataset>,
    noise: &NoiseModel,
    epochs: usize,
    config: &CompressConfig,
) -> Result<QnnModel> {
    if mask.len() != model.theta.len() {
        return Err(Error::ParamLength {
            expected: model.theta.len(),
            got: mask.len(),
        });
    }
    if mask.iter().all(|&m| m) {
        return Ok(model.clone());
    }
    let cfg = config.train_config(epochs, config.seed.wrapping_add(0x5eed), Some(noise.clone()), true);
    let extras = TrainExtras {
        frozen: Some(mask),
        proximal: None,
    };
    Ok(train_with(model, train, val, &cfg, &extras)?.0)
}

/// Compressed model file: the model JSON plus mask, table and the id of
/// the snapshot it was compressed for.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedModel {
    pub model: QnnModel,
    pub mask: Vec<bool>,
    pub table: CompressionTable,
    pub snapshot_id: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompressedModelJson {
    #[serde(flatten)]
    pub model: ModelJson,
    pub mask: Vec<u8>,
    pub table: Vec<f64>,
    pub snapshot_id: String,
}

impl CompressedModel {
    pub fn to_json(&self) -> CompressedModelJson {
        CompressedModelJson {
            model: self.model.to_json(),
            mask: self.mask.iter().map(|&m| m as u8).collect(),
            table: self.table.levels.clone(),
            snapshot_id: self.snapshot_id.clone(),
        }
    }

    pub fn from_json(j: &CompressedModelJson) -> Result<Self> {
        let model = QnnModel::from_json(&j.model)?;
        if j.mask.len() != model.theta.len() || j.mask.iter().any(|&m| m > 1) {
            return Err(Error::Config("mask must hold one 0/1 entry per parameter".into()));
        }
        Ok(CompressedModel {
            model,
            mask: j.mask.iter().map(|&m| m == 1).collect(),
            table: CompressionTable::new(j.table.clone())?,
            snapshot_id: j.snapshot_id.clone(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_json()).expect("serializable");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let j: CompressedModelJson = serde_json::from_str(&text).map_err(|e| Error::parse(path, e))?;
        Self::from_json(&j)
    }
}
