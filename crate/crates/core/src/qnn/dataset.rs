use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const IRIS_CSV: &str = include_str!("../../data/iris.csv");

/// Labelled feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub n_classes: usize,
}

impl Dataset {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        let d = Dataset {
            features,
            labels,
            n_classes,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.len() != self.labels.len() {
            return Err(Error::Dataset(format!(
                "{} feature rows but {} labels",
                self.features.len(),
                self.labels.len()
            )));
        }
        if let Some(first) = self.features.first() {
            let dim = first.len();
            if let Some(i) = self.features.iter().position(|f| f.len() != dim) {
                return Err(Error::Dataset(format!("row {i} has a different feature count")));
            }
        }
        if let Some(&l) = self.labels.iter().find(|&&l| l >= self.n_classes) {
            return Err(Error::Dataset(format!("label {l} outside [0, {})", self.n_classes)));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            features: idx.iter().map(|&i| self.features[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            n_classes: self.n_classes,
        }
    }

    /// Feature columns followed by an integer label column.
    pub fn from_csv_str(text: &str, header: bool) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(header)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| Error::Dataset(format!("row {i}: {e}")))?;
            if rec.len() < 2 {
                return Err(Error::Dataset(format!("row {i}: need features and a label")));
            }
            let row = rec
                .iter()
                .take(rec.len() - 1)
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Dataset(format!("row {i}: {e}")))?;
            let label = rec[rec.len() - 1]
                .parse::<usize>()
                .map_err(|e| Error::Dataset(format!("row {i}: label: {e}")))?;
            features.push(row);
            labels.push(label);
        }
        let n_classes = labels.iter().max().map_or(0, |m| m + 1);
        Dataset::new(features, labels, n_classes)
    }

    pub fn load_csv(path: &Path, header: bool) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&text, header)
    }

    /// The 150-sample, 3-class Iris data bundled with the crate.
    pub fn iris() -> Self {
        Self::from_csv_str(IRIS_CSV, true).expect("bundled iris.csv is valid")
    }

    /// Per-class shuffled split into consecutive fractions (the remainder
    /// goes to the last part).
    pub fn stratified_split(&self, fractions: &[f64], seed: u64) -> Vec<Dataset> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut parts: Vec<Vec<usize>> = vec![Vec::new(); fractions.len()];
        for class in 0..self.n_classes {
            let mut idx: Vec<usize> = (0..self.len()).filter(|&i| self.labels[i] == class).collect();
            idx.shuffle(&mut rng);
            let n = idx.len();
            let mut start = 0;
            for (k, f) in fractions.iter().enumerate() {
                let end = if k + 1 == fractions.len() {
                    n
                } else {
                    (start + (f * n as f64).round() as usize).min(n)
                };
                parts[k].extend_from_slice(&idx[start..end]);
                start = end;
            }
        }
        parts
            .into_iter()
            .map(|mut p| {
                p.sort_unstable();
                self.subset(&p)
            })
            .collect()
    }
}

/// Train / validation / test partitions of one dataset.
#[derive(Debug, Clone)]
pub struct Splits {
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
}

impl Splits {
    pub fn new(data: &Dataset, train: f64, val: f64, seed: u64) -> Splits {
        let mut parts = data.stratified_split(&[train, val, 1.0 - train - val], seed).into_iter();
        Splits {
            train: parts.next().expect("three parts"),
            val: parts.next().expect("three parts"),
            test: parts.next().expect("three parts"),
        }
    }
}
