use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use crate::error::{Error, Result};
use crate::qcore::{
    self, route_circuit, CircuitJson, DensityMatrix, Gate, GateKind, NoiseModel, Pair,
    ParamCircuit, StateVector,
};

/// Angle encoding: feature `f` drives a fixed-angle rotation on logical
/// qubit `f mod n`, with the axis cycling RY, RZ, RX per layer
/// `f div n`. Features are min-max scaled to `[0, π]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingSpec {
    pub n_qubits: usize,
    /// `(logical qubit, axis)` per feature.
    pub assignments: Vec<(usize, GateKind)>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

const AXES: [GateKind; 3] = [GateKind::RY, GateKind::RZ, GateKind::RX];

impl EncodingSpec {
    pub fn round_robin(n_features: usize, n_qubits: usize) -> Self {
        EncodingSpec {
            n_qubits,
            assignments: (0..n_features)
                .map(|f| (f % n_qubits, AXES[(f / n_qubits) % AXES.len()]))
                .collect(),
            min: vec![0.0; n_features],
            max: vec![PI; n_features],
        }
    }

    /// Fits the scaling range on `data`.
    pub fn fitted(n_qubits: usize, data: &Dataset) -> Self {
        let mut e = Self::round_robin(data.n_features(), n_qubits);
        for j in 0..data.n_features() {
            let col = data.features.iter().map(|f| f[j]);
            e.min[j] = col.clone().fold(f64::INFINITY, f64::min);
            e.max[j] = col.fold(f64::NEG_INFINITY, f64::max);
        }
        e
    }

    /// No encoding at all; inputs must be empty feature vectors.
    pub fn none(n_qubits: usize) -> Self {
        Self::round_robin(0, n_qubits)
    }

    pub fn n_features(&self) -> usize {
        self.assignments.len()
    }

    pub fn scale(&self, j: usize, x: f64) -> f64 {
        let span = self.max[j] - self.min[j];
        if span <= 0.0 {
            return 0.0;
        }
        ((x - self.min[j]) / span * PI).clamp(0.0, PI)
    }

    /// Encoding gates on physical qubits `layout[logical]`.
    pub fn gates(&self, features: &[f64], layout: &[usize]) -> Result<Vec<Gate>> {
        if features.len() != self.n_features() {
            return Err(Error::Dimension(format!(
                "expected {} features, got {}",
                self.n_features(),
                features.len()
            )));
        }
        Ok(self
            .assignments
            .iter()
            .zip(features)
            .enumerate()
            .map(|(j, (&(q, axis), &x))| Gate::fixed(axis, &[layout[q]], self.scale(j, x)))
            .collect())
    }
}

/// Circuit, trained angles, encoder and readout qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct QnnModel {
    pub circuit: ParamCircuit,
    pub theta: Vec<f64>,
    pub encoding: EncodingSpec,
    /// Logical qubits whose `⟨Z⟩` are the class logits.
    pub readout: Vec<usize>,
}

impl QnnModel {
    pub fn new(
        circuit: ParamCircuit,
        theta: Vec<f64>,
        encoding: EncodingSpec,
        readout: Vec<usize>,
    ) -> Result<Self> {
        let m = QnnModel {
            circuit,
            theta,
            encoding,
            readout,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        self.circuit.validate()?;
        self.circuit.check_params(&self.theta)?;
        let logical = self.circuit.final_layout.len();
        let distinct: BTreeSet<_> = self.readout.iter().collect();
        if distinct.len() != self.readout.len() || self.readout.iter().any(|&q| q >= logical) {
            return Err(Error::Config("readout qubits must be distinct logical qubits".into()));
        }
        if self.readout.is_empty() {
            return Err(Error::Config("readout needs at least one qubit".into()));
        }
        if self.encoding.assignments.iter().any(|&(q, _)| q >= logical) {
            return Err(Error::Config("encoding targets a missing qubit".into()));
        }
        Ok(())
    }

    pub fn n_classes(&self) -> usize {
        self.readout.len()
    }

    /// Physical qubits measured for the logits.
    pub fn readout_physical(&self) -> Vec<usize> {
        self.readout.iter().map(|&l| self.circuit.final_layout[l]).collect()
    }

    /// Encoder gates followed by the ansatz; slots are unchanged.
    pub fn full_circuit(&self, features: &[f64]) -> Result<ParamCircuit> {
        let prefix = self.encoding.gates(features, &self.circuit.initial_layout)?;
        Ok(self.circuit.with_prefix(&prefix))
    }

    pub fn to_json(&self) -> ModelJson {
        ModelJson {
            circuit: self.circuit.to_json(),
            theta: self.theta.clone(),
            readout: self.readout.clone(),
            encoding: self.encoding.clone(),
        }
    }

    pub fn from_json(j: &ModelJson) -> Result<Self> {
        QnnModel::new(
            ParamCircuit::from_json(&j.circuit)?,
            j.theta.clone(),
            j.encoding.clone(),
            j.readout.clone(),
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let j: ModelJson = serde_json::from_str(&text).map_err(|e| Error::parse(path, e))?;
        Self::from_json(&j)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_json()).expect("model is serializable");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Model file: the circuit JSON fields plus `theta`, `readout`, `encoding`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelJson {
    #[serde(flatten)]
    pub circuit: CircuitJson,
    pub theta: Vec<f64>,
    pub readout: Vec<usize>,
    pub encoding: EncodingSpec,
}

/// Variational ansatz: each block is
/// `[n RY, n CRY, n RY, n RX, n CRX, n RX, n RZ, n CRZ, n RZ, n CRZ]`,
/// controlled gates in a ring `q_i → q_{(i+1) mod n}`, one fresh slot per
/// gate. When the ring is not contained in `coupling`, the circuit is
/// routed with the identity layout.
pub fn build_vqc(
    n_qubits: usize,
    n_blocks: usize,
    coupling: &BTreeSet<Pair>,
) -> Result<ParamCircuit> {
    use GateKind::*;
    if n_qubits < 2 {
        return Err(Error::Config("ansatz needs at least two qubits".into()));
    }
    let layers = [RY, CRY, RY, RX, CRX, RX, RZ, CRZ, RZ, CRZ];
    let mut gates = Vec::with_capacity(n_blocks * layers.len() * n_qubits);
    let mut slot = 0;
    for _ in 0..n_blocks {
        for kind in layers {
            for q in 0..n_qubits {
                let qubits = if kind.arity() == 1 {
                    vec![q]
                } else {
                    vec![q, (q + 1) % n_qubits]
                };
                gates.push(Gate::slot(kind, &qubits, slot));
                slot += 1;
            }
        }
    }
    let logical = ParamCircuit::new(n_qubits, gates, coupling.iter().copied().filter(|&(_, b)| b < n_qubits))?;
    let width = coupling.iter().map(|&(_, b)| b + 1).max().unwrap_or(0);
    if width <= n_qubits && logical.is_routed() {
        return Ok(logical);
    }
    route_circuit(&logical, coupling, &(0..n_qubits).collect::<Vec<_>>())
}

/// Class logits: `⟨Z⟩` on the readout qubits, with readout confusion and
/// gate noise when `noise` is given.
pub fn forward(model: &QnnModel, features: &[f64], noise: Option<&NoiseModel>) -> Result<Vec<f64>> {
    forward_with(model, &model.theta, features, noise)
}

pub(crate) fn forward_with(
    model: &QnnModel,
    theta: &[f64],
    features: &[f64],
    noise: Option<&NoiseModel>,
) -> Result<Vec<f64>> {
    let full = model.full_circuit(features)?;
    let readout = model.readout_physical();
    let z = match noise {
        None => {
            let psi = qcore::simulate_noiseless(&full, theta, &StateVector::zero(full.n_qubits))?;
            psi.z_expectations()
        }
        Some(n) => {
            let steps = qcore::compile(&full, theta, Some(n))?;
            let mut rho = DensityMatrix::zero_state(full.n_qubits);
            qcore::run_steps(&mut rho, &steps);
            qcore::measure_z_expectations(&rho, Some(n))
        }
    };
    Ok(readout.iter().map(|&q| z[q]).collect())
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|z| (z - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Softmax cross-entropy.
pub fn loss(logits: &[f64], label: usize) -> f64 {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|z| (z - m).exp()).sum::<f64>().ln();
    lse - logits[label]
}

/// Index of the largest logit, lowest index on ties.
pub fn predict(logits: &[f64]) -> usize {
    let mut best = 0;
    for (i, &z) in logits.iter().enumerate() {
        if z > logits[best] {
            best = i;
        }
    }
    best
}

/// Fraction of samples whose arg-max logit equals the label.
pub fn evaluate_accuracy(model: &QnnModel, data: &Dataset, noise: Option<&NoiseModel>) -> Result<f64> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for (x, &y) in data.features.iter().zip(&data.labels) {
        if predict(&forward(model, x, noise)?) == y {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

/// Mean loss over `data`.
pub fn mean_loss(model: &QnnModel, data: &Dataset, noise: Option<&NoiseModel>) -> Result<f64> {
    mean_loss_with(model, &model.theta, data, noise)
}

pub(crate) fn mean_loss_with(
    model: &QnnModel,
    theta: &[f64],
    data: &Dataset,
    noise: Option<&NoiseModel>,
) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Dataset("empty dataset".into()));
    }
    let mut total = 0.0;
    for (x, &y) in data.features.iter().zip(&data.labels) {
        total += loss(&forward_with(model, theta, x, noise)?, y);
    }
    Ok(total / data.len() as f64)
}
