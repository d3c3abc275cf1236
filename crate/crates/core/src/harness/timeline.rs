use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calib::{build_noise_model_with_cost, CalibrationSnapshot};
use crate::compress::{admm_compress, CompressConfig, PriorityMode};
use crate::error::{Error, Result};
use crate::qcore::{NoiseModel, Pair};
use crate::qnn::{
    build_vqc, evaluate_accuracy, init_theta, train, Dataset, EncodingSpec, QnnModel, Splits,
    TrainConfig,
};
use crate::repo::{
    build_repository, history_accuracies, match_online, Decision, OnlineContext, RepoConfig,
    Repository,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Baseline,
    NoiseAwareTrainOnce,
    NoiseAwareTrainEveryday,
    OneTimeCompression,
    QucadNoOffline,
    Qucad,
    /// Noise-aware compression for every day: the practical upper bound.
    CompressEveryday,
}

impl Strategy {
    pub const ALL: [Strategy; 7] = [
        Strategy::Baseline,
        Strategy::NoiseAwareTrainOnce,
        Strategy::NoiseAwareTrainEveryday,
        Strategy::OneTimeCompression,
        Strategy::QucadNoOffline,
        Strategy::Qucad,
        Strategy::CompressEveryday,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Baseline => "baseline",
            Strategy::NoiseAwareTrainOnce => "noise-aware-train-once",
            Strategy::NoiseAwareTrainEveryday => "noise-aware-train-everyday",
            Strategy::OneTimeCompression => "one-time-compression",
            Strategy::QucadNoOffline => "qucad-no-offline",
            Strategy::Qucad => "qucad",
            Strategy::CompressEveryday => "compress-everyday",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('_', "-");
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == key)
            .ok_or_else(|| {
                let names: Vec<_> = Strategy::ALL.iter().map(|s| s.name()).collect();
                Error::Usage(format!("unknown strategy `{s}` (expected one of {})", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub n_qubits: usize,
    pub n_blocks: usize,
    pub train_fraction: f64,
    pub val_fraction: f64,
    /// Noiseless training of the starting model.
    pub train: TrainConfig,
    /// Epochs of noise-aware training for the training-based strategies.
    pub adapt_epochs: usize,
    pub repo: RepoConfig,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_qubits: 4,
            n_blocks: 3,
            train_fraction: 0.6,
            val_fraction: 0.1,
            train: TrainConfig::default(),
            adapt_epochs: 10,
            repo: RepoConfig::default(),
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    fn compress(&self) -> &CompressConfig {
        &self.repo.compress
    }

    fn day_seed(&self, day: usize) -> u64 {
        self.seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(day as u64 + 1)
    }
}

/// Everything a timeline needs: data splits, the noiselessly trained
/// model, offline history and online days.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub splits: Splits,
    pub model: QnnModel,
    pub offline: Vec<CalibrationSnapshot>,
    pub online: Vec<CalibrationSnapshot>,
    repo: OnceLock<(Repository, f64)>,
}

/// Fresh ansatz over `coupling` with an encoder fitted on `train`.
pub fn initial_model(
    train: &Dataset,
    coupling: &std::collections::BTreeSet<Pair>,
    n_qubits: usize,
    n_blocks: usize,
    seed: u64,
) -> Result<QnnModel> {
    if train.n_classes > n_qubits {
        return Err(Error::Config(format!(
            "{} classes need at least as many qubits, got {n_qubits}",
            train.n_classes
        )));
    }
    let circuit = build_vqc(n_qubits, n_blocks, coupling)?;
    let theta = init_theta(circuit.n_params, seed);
    QnnModel::new(
        circuit,
        theta,
        EncodingSpec::fitted(n_qubits, train),
        (0..train.n_classes).collect(),
    )
}

impl Experiment {
    /// Splits `data`, then trains the starting model without noise.
    pub fn new(
        data: &Dataset,
        offline: Vec<CalibrationSnapshot>,
        online: Vec<CalibrationSnapshot>,
        config: ExperimentConfig,
    ) -> Result<Self> {
        let splits = Splits::new(data, config.train_fraction, config.val_fraction, config.seed);
        let coupling = online
            .first()
            .or(offline.first())
            .ok_or_else(|| Error::Config("no calibration days".into()))?
            .coupling();
        let init = initial_model(&splits.train, &coupling, config.n_qubits, config.n_blocks, config.seed)?;
        let cfg = TrainConfig {
            seed: config.seed,
            noise: None,
            ..config.train.clone()
        };
        let (model, _) = train(&init, &splits.train, Some(&splits.val), &cfg)?;
        Self::with_model(model, splits, offline, online, config)
    }

    pub fn with_model(
        model: QnnModel,
        splits: Splits,
        offline: Vec<CalibrationSnapshot>,
        online: Vec<CalibrationSnapshot>,
        config: ExperimentConfig,
    ) -> Result<Self> {
        if online.is_empty() {
            return Err(Error::Config("no online days".into()));
        }
        model.validate()?;
        Ok(Experiment {
            config,
            splits,
            model,
            offline,
            online,
            repo: OnceLock::new(),
        })
    }

    /// Supplies a prebuilt repository instead of building one from the
    /// offline history.
    pub fn set_repository(&mut self, repo: Repository) {
        self.repo = OnceLock::new();
        let _ = self.repo.set((repo, 0.0));
    }

    fn noise(&self, day: &CalibrationSnapshot) -> Result<NoiseModel> {
        build_noise_model_with_cost(day, self.config.compress().cost.clone())
    }

    /// The offline repository (built on first use) and its build time.
    pub fn repository(&self) -> Result<(&Repository, f64)> {
        if let Some((r, t)) = self.repo.get() {
            return Ok((r, *t));
        }
        if self.offline.len() < 2 {
            return Err(Error::Config("repository needs at least 2 offline days".into()));
        }
        let start = Instant::now();
        let acc = history_accuracies(&self.model, &self.offline, &self.splits.val, self.config.compress())?;
        let repo = build_repository(
            &self.model,
            &self.offline,
            &acc,
            &self.splits.train,
            Some(&self.splits.val),
            &self.config.repo,
        )?;
        let _ = self.repo.set((repo, start.elapsed().as_secs_f64()));
        let (r, t) = self.repo.get().expect("just set");
        Ok((r, *t))
    }

    fn test_accuracy(&self, model: &QnnModel, day: &CalibrationSnapshot) -> Result<f64> {
        evaluate_accuracy(model, &self.splits.test, Some(&self.noise(day)?))
    }

    fn noise_aware_train(&self, day: usize) -> Result<QnnModel> {
        let cfg = TrainConfig {
            epochs: self.config.adapt_epochs,
            seed: self.config.day_seed(day),
            noise: Some(self.noise(&self.online[day])?),
            ..self.config.train.clone()
        };
        Ok(train(&self.model, &self.splits.train, Some(&self.splits.val), &cfg)?.0)
    }

    fn compress_for(&self, day: usize, mode: PriorityMode) -> Result<QnnModel> {
        let cfg = CompressConfig {
            priority: mode,
            seed: self.config.day_seed(day),
            ..self.config.compress().clone()
        };
        Ok(admm_compress(
            &self.model,
            &self.splits.train,
            Some(&self.splits.val),
            &self.online[day],
            &cfg,
        )?
        .model)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayRecord {
    pub day: usize,
    pub date: String,
    pub accuracy: f64,
    /// Repository decision (repository-based strategies only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision: Option<Decision>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance: Option<f64>,
    /// Whether a training or compression job ran for this day.
    pub optimized: bool,
    /// Adaptation time for this day, evaluation excluded.
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineResult {
    pub strategy: Strategy,
    pub records: Vec<DayRecord>,
    pub online_optimizations: usize,
    /// Online adaptation time, evaluation excluded.
    pub wall_time_s: f64,
    /// Offline repository construction time, when one was built here.
    #[serde(default)]
    pub offline_time_s: f64,
}

impl TimelineResult {
    pub fn accuracies(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.accuracy).collect()
    }

    pub fn mean_accuracy(&self) -> f64 {
        let a = self.accuracies();
        a.iter().sum::<f64>() / a.len().max(1) as f64
    }

    fn from_records(strategy: Strategy, records: Vec<DayRecord>, offline_time_s: f64) -> Self {
        TimelineResult {
            strategy,
            online_optimizations: records.iter().filter(|r| r.optimized).count(),
            wall_time_s: records.iter().map(|r| r.wall_time_s).sum(),
            records,
            offline_time_s,
        }
    }
}

fn record(exp: &Experiment, day: usize, accuracy: f64, optimized: bool, wall: f64) -> DayRecord {
    DayRecord {
        day,
        date: exp.online[day].date.clone(),
        accuracy,
        decision: None,
        distance: None,
        optimized,
        wall_time_s: wall,
    }
}

/// Runs one strategy over the online days. Each day's accuracy is measured
/// on the test split under that day's noise.
pub fn run_timeline(strategy: Strategy, exp: &Experiment) -> Result<TimelineResult> {
    let days = 0..exp.online.len();
    let fixed = |model: &QnnModel, first_day_cost: f64| -> Result<Vec<DayRecord>> {
        days.clone()
            .into_par_iter()
            .map(|d| {
                let acc = exp.test_accuracy(model, &exp.online[d])?;
                let (opt, wall) = if d == 0 && first_day_cost >= 0.0 {
                    (true, first_day_cost)
                } else {
                    (false, 0.0)
                };
                Ok(record(exp, d, acc, opt, wall))
            })
            .collect()
    };
    let timed = |f: &dyn Fn() -> Result<QnnModel>| -> Result<(QnnModel, f64)> {
        let start = Instant::now();
        let m = f()?;
        Ok((m, start.elapsed().as_secs_f64()))
    };
    let result = match strategy {
        Strategy::Baseline => TimelineResult::from_records(strategy, fixed(&exp.model, -1.0)?, 0.0),
        Strategy::NoiseAwareTrainOnce => {
            let (m, wall) = timed(&|| exp.noise_aware_train(0))?;
            TimelineResult::from_records(strategy, fixed(&m, wall)?, 0.0)
        }
        Strategy::OneTimeCompression => {
            let (m, wall) = timed(&|| exp.compress_for(0, PriorityMode::NoiseAgnostic))?;
            TimelineResult::from_records(strategy, fixed(&m, wall)?, 0.0)
        }
        Strategy::NoiseAwareTrainEveryday | Strategy::CompressEveryday => {
            let mut records = Vec::with_capacity(exp.online.len());
            for d in days {
                let (m, wall) = if strategy == Strategy::CompressEveryday {
                    timed(&|| exp.compress_for(d, PriorityMode::NoiseAware))?
                } else {
                    timed(&|| exp.noise_aware_train(d))?
                };
                records.push(record(exp, d, exp.test_accuracy(&m, &exp.online[d])?, true, wall));
            }
            TimelineResult::from_records(strategy, records, 0.0)
        }
        Strategy::Qucad | Strategy::QucadNoOffline => {
            let (built, offline_time) = exp.repository()?;
            let mut repo = built.clone();
            let offline_time = if strategy == Strategy::QucadNoOffline {
                repo.entries.clear();
                0.0
            } else {
                offline_time
            };
            let ctx = OnlineContext {
                model: &exp.model,
                train: &exp.splits.train,
                val: Some(&exp.splits.val),
            };
            let mut records = Vec::with_capacity(exp.online.len());
            for d in days {
                let today = &exp.online[d];
                let start = Instant::now();
                let (decision, distance) = if repo.is_empty() {
                    let entry = repo.add_online(today, &ctx)?;
                    (Decision::CompressNew { entry }, None)
                } else {
                    let od = match_online(&mut repo, today, &ctx)?;
                    (od.decision, Some(od.distance))
                };
                let wall = start.elapsed().as_secs_f64();
                let entry = match &decision {
                    Decision::Reuse { entry } | Decision::CompressNew { entry } | Decision::Fail { entry, .. } => *entry,
                };
                let acc = exp.test_accuracy(&repo.entries[entry].model.model, today)?;
                let mut r = record(exp, d, acc, matches!(decision, Decision::CompressNew { .. }), wall);
                r.decision = Some(decision);
                r.distance = distance;
                records.push(r);
            }
            TimelineResult::from_records(strategy, records, offline_time)
        }
    };
    Ok(result)
}
