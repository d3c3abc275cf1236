use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cluster::{weighted_kmeans, wl1, WeightVector};
use crate::calib::{build_noise_model_with_cost, vectorize, CalibrationSnapshot, CalibrationVector, Label, Schema};
use crate::compress::{admm_compress, CompressConfig, CompressedModel};
use crate::error::{Error, Result};
use crate::qnn::{evaluate_accuracy, Dataset, QnnModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Offline,
    Online,
}

/// A compressed model and the calibration it was compressed for.
#[derive(Debug, Clone, PartialEq)]
pub struct RepoEntry {
    pub centroid: CalibrationVector,
    pub model: CompressedModel,
    pub mean_acc: f64,
    pub mean_dist: f64,
    pub invalid: bool,
    pub source: Source,
    /// Offline history days in this cluster.
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Repository {
    pub schema: Arc<Schema>,
    pub weights: WeightVector,
    /// Largest mean weighted distance of an offline cluster; frozen online.
    pub th_w: f64,
    pub acc_requirement: f64,
    pub compress: CompressConfig,
    pub entries: Vec<RepoEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RepoConfig {
    pub k: usize,
    pub acc_requirement: f64,
    pub seed: u64,
    pub compress: CompressConfig,
}

impl Default for RepoConfig {
    fn default() -> Self {
        RepoConfig {
            k: 6,
            acc_requirement: 0.5,
            seed: 0,
            compress: CompressConfig::default(),
        }
    }
}

/// Accuracy of `model` on `data` under each day's noise.
pub fn history_accuracies(
    model: &QnnModel,
    days: &[CalibrationSnapshot],
    data: &Dataset,
    config: &CompressConfig,
) -> Result<Vec<f64>> {
    days.par_iter()
        .map(|d| {
            let noise = build_noise_model_with_cost(d, config.cost.clone())?;
            evaluate_accuracy(model, data, Some(&noise))
        })
        .collect()
}

/// Offline stage: cluster `history` by weighted L1 distance, snap each
/// median centroid to its nearest member day, merge clusters that snap to
/// the same vector, and compress one model per cluster under that day's
/// calibration.
pub fn build_repository(
    model: &QnnModel,
    history: &[CalibrationSnapshot],
    accuracies: &[f64],
    train: &Dataset,
    val: Option<&Dataset>,
    config: &RepoConfig,
) -> Result<Repository> {
    let first = history
        .first()
        .ok_or_else(|| Error::Repository("empty offline history".into()))?;
    let schema = first.schema();
    let vectors = history
        .iter()
        .map(|d| vectorize(d, &schema))
        .collect::<Result<Vec<_>>>()?;
    let clusters = weighted_kmeans(&vectors, accuracies, config.k, config.seed)?;
    let w = &clusters.weights.w;

    // snap, then merge clusters whose representatives coincide
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for (ci, centroid) in clusters.centroids.iter().enumerate() {
        let members: Vec<usize> = (0..history.len())
            .filter(|&i| clusters.assignment[i] == ci)
            .collect();
        let Some(&rep) = members.iter().min_by(|&&a, &&b| {
            wl1(&vectors[a].values, &centroid.values, w)
                .total_cmp(&wl1(&vectors[b].values, &centroid.values, w))
                .then(a.cmp(&b))
        }) else {
            continue;
        };
        match groups
            .iter_mut()
            .find(|(r, _)| vectors[*r].values == vectors[rep].values)
        {
            Some((_, m)) => m.extend(members),
            None => groups.push((rep, members)),
        }
    }

    let entries = groups
        .par_iter()
        .enumerate()
        .map(|(gi, (rep, members))| {
            let mut cfg = config.compress.clone();
            cfg.seed = cfg.seed.wrapping_add(gi as u64);
            let out = admm_compress(model, train, val, &history[*rep], &cfg)?;
            let n = members.len() as f64;
            let mean_acc = members.iter().map(|&i| accuracies[i]).sum::<f64>() / n;
            let mean_dist = members
                .iter()
                .map(|&i| wl1(&vectors[i].values, &vectors[*rep].values, w))
                .sum::<f64>()
                / n;
            let mut members = members.clone();
            members.sort_unstable();
            Ok(RepoEntry {
                centroid: vectors[*rep].clone(),
                model: CompressedModel {
                    model: out.model,
                    mask: out.mask,
                    table: cfg.table.clone(),
                    snapshot_id: history[*rep].date.clone(),
                },
                mean_acc,
                mean_dist,
                invalid: mean_acc < config.acc_requirement,
                source: Source::Offline,
                members,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let th_w = entries.iter().map(|e| e.mean_dist).fold(0.0, f64::max);
    Ok(Repository {
        schema,
        weights: clusters.weights,
        th_w,
        acc_requirement: config.acc_requirement,
        compress: config.compress.clone(),
        entries,
    })
}

/// What the online manager did with today's calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Decision {
    Reuse { entry: usize },
    CompressNew { entry: usize },
    Fail { entry: usize, report: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineDecision {
    pub decision: Decision,
    /// Weighted distance to the closest entry before any growth.
    pub distance: f64,
}

impl OnlineDecision {
    /// Entry whose model serves today.
    pub fn entry(&self) -> usize {
        match self.decision {
            Decision::Reuse { entry } | Decision::CompressNew { entry } | Decision::Fail { entry, .. } => entry,
        }
    }
}

/// Inputs for compressing a new model online.
#[derive(Debug, Clone, Copy)]
pub struct OnlineContext<'a> {
    pub model: &'a QnnModel,
    pub train: &'a Dataset,
    pub val: Option<&'a Dataset>,
}

impl Repository {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Closest entry (lowest index on ties) and its distance.
    pub fn nearest(&self, today: &CalibrationVector) -> Result<(usize, f64)> {
        if !today.same_schema(&CalibrationVector {
            values: Vec::new(),
            schema: self.schema.clone(),
        }) {
            return Err(Error::SchemaMismatch("today's calibration uses another schema".into()));
        }
        let mut best: Option<(usize, f64)> = None;
        for (i, e) in self.entries.iter().enumerate() {
            let d = wl1(&today.values, &e.centroid.values, &self.weights.w);
            if best.is_none_or(|(_, b)| d < b) {
                best = Some((i, d));
            }
        }
        best.ok_or_else(|| Error::Repository("repository has no entries".into()))
    }

    /// Compresses a model for `today` and appends it as an online entry.
    pub fn add_online(&mut self, today: &CalibrationSnapshot, ctx: &OnlineContext<'_>) -> Result<usize> {
        let centroid = vectorize(today, &self.schema)?;
        let out = admm_compress(ctx.model, ctx.train, ctx.val, today, &self.compress)?;
        let noise = build_noise_model_with_cost(today, self.compress.cost.clone())?;
        let check = match ctx.val {
            Some(v) if !v.is_empty() => v,
            _ => ctx.train,
        };
        let mean_acc = evaluate_accuracy(&out.model, check, Some(&noise))?;
        self.entries.push(RepoEntry {
            centroid,
            model: CompressedModel {
                model: out.model,
                mask: out.mask,
                table: self.compress.table.clone(),
                snapshot_id: today.date.clone(),
            },
            mean_acc,
            mean_dist: 0.0,
            invalid: mean_acc < self.acc_requirement,
            source: Source::Online,
            members: Vec::new(),
        });
        Ok(self.entries.len() - 1)
    }
}

/// Online stage for one day: reuse the closest entry when it is within
/// `th_w` and valid, report failure when it is within `th_w` but invalid,
/// and otherwise compress a new model for today and add it.
pub fn match_online(
    repo: &mut Repository,
    today: &CalibrationSnapshot,
    ctx: &OnlineContext<'_>,
) -> Result<OnlineDecision> {
    let vector = vectorize(today, &repo.schema)?;
    let (j, distance) = repo.nearest(&vector)?;
    let decision = if distance > repo.th_w {
        Decision::CompressNew {
            entry: repo.add_online(today, ctx)?,
        }
    } else if repo.entries[j].invalid {
        let e = &repo.entries[j];
        Decision::Fail {
            entry: j,
            report: format!(
                "calibration {} matches invalid entry {j} (centroid {}, mean accuracy {:.4} < {:.4})",
                today.date, e.model.snapshot_id, e.mean_acc, repo.acc_requirement
            ),
        }
    } else {
        Decision::Reuse { entry: j }
    };
    Ok(OnlineDecision { decision, distance })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RepoJson {
    labels: Vec<Label>,
    weights: Vec<f64>,
    th_w: f64,
    acc_requirement: f64,
    compress: CompressConfig,
    entries: Vec<EntryJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EntryJson {
    centroid: Vec<f64>,
    model_ref: PathBuf,
    mean_acc: f64,
    mean_dist: f64,
    invalid: bool,
    source: Source,
    #[serde(default)]
    members: Vec<usize>,
}

impl Repository {
    /// Writes the repository JSON and one compressed-model file per entry
    /// next to it (`<stem>.entry<i>.json`, referenced relatively).
    pub fn save(&self, path: &Path) -> Result<()> {
        let dir = path.parent().unwrap_or(Path::new(""));
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("repo")
            .to_string();
        let mut entries = Vec::with_capacity(self.entries.len());
        for (i, e) in self.entries.iter().enumerate() {
            let model_ref = PathBuf::from(format!("{stem}.entry{i}.json"));
            e.model.save(&dir.join(&model_ref))?;
            entries.push(EntryJson {
                centroid: e.centroid.values.clone(),
                model_ref,
                mean_acc: e.mean_acc,
                mean_dist: e.mean_dist,
                invalid: e.invalid,
                source: e.source,
                members: e.members.clone(),
            });
        }
        let j = RepoJson {
            labels: self.schema.labels.clone(),
            weights: self.weights.w.clone(),
            th_w: self.th_w,
            acc_requirement: self.acc_requirement,
            compress: self.compress.clone(),
            entries,
        };
        let text = serde_json::to_string_pretty(&j).expect("serializable");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let j: RepoJson = serde_json::from_str(&text).map_err(|e| Error::parse(path, e))?;
        let schema = Arc::new(Schema { labels: j.labels });
        if j.weights.len() != schema.dim() {
            return Err(Error::parse(path, "weights and labels differ in length"));
        }
        let dir = path.parent().unwrap_or(Path::new(""));
        let entries = j
            .entries
            .into_iter()
            .map(|e| {
                if e.centroid.len() != schema.dim() {
                    return Err(Error::parse(path, "centroid and labels differ in length"));
                }
                Ok(RepoEntry {
                    centroid: CalibrationVector {
                        values: e.centroid,
                        schema: schema.clone(),
                    },
                    model: CompressedModel::load(&dir.join(&e.model_ref))?,
                    mean_acc: e.mean_acc,
                    mean_dist: e.mean_dist,
                    invalid: e.invalid,
                    source: e.source,
                    members: e.members,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Repository {
            schema,
            weights: WeightVector { w: j.weights },
            th_w: j.th_w,
            acc_requirement: j.acc_requirement,
            compress: j.compress,
            entries,
        })
    }
}
