use std::collections::BTreeMap;

use super::circuit::{pair, Pair};
use super::cost::GateCostModel;
use super::gate::Gate;
use crate::error::{Error, Result};

/// Readout confusion matrix `[[p(0|0), p(0|1)], [p(1|0), p(1|1)]]`;
/// column `j` is the distribution of reported outcomes given true state `j`.
pub type Confusion = [[f64; 2]; 2];

pub const PERFECT_READOUT: Confusion = [[1.0, 0.0], [0.0, 1.0]];

/// Confusion matrix from the flip probabilities `p(1|0)` and `p(0|1)`.
pub fn confusion(p10: f64, p01: f64) -> Confusion {
    [[1.0 - p10, p01], [p10, 1.0 - p01]]
}

/// Depolarizing probabilities per basis-gate occurrence plus readout error.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    pub n_qubits: usize,
    /// Probability for each one-qubit basis gate on qubit `q`.
    pub one_q: Vec<f64>,
    /// Probability for each two-qubit basis gate on a coupled pair.
    pub two_q: BTreeMap<Pair, f64>,
    pub readout: Vec<Confusion>,
    /// How logical gates expand into basis gates.
    pub cost: GateCostModel,
}

/// One depolarizing application. `b == None` for one-qubit channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel {
    pub a: usize,
    pub b: Option<usize>,
    pub p: f64,
}

impl Channel {
    pub fn qubits(&self) -> ([usize; 2], usize) {
        match self.b {
            Some(b) => ([self.a, b], 2),
            None => ([self.a, 0], 1),
        }
    }
}

impl NoiseModel {
    /// Noise-free model over `n_qubits` with the given coupled pairs.
    pub fn zero(n_qubits: usize, coupling: impl IntoIterator<Item = Pair>) -> Self {
        NoiseModel {
            n_qubits,
            one_q: vec![0.0; n_qubits],
            two_q: coupling.into_iter().map(|(a, b)| (pair(a, b), 0.0)).collect(),
            readout: vec![PERFECT_READOUT; n_qubits],
            cost: GateCostModel::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |p: f64| !(0.0..=1.0).contains(&p) || p.is_nan();
        if self.one_q.len() != self.n_qubits || self.readout.len() != self.n_qubits {
            return Err(Error::InvalidNoise("per-qubit tables have wrong length".into()));
        }
        if let Some(p) = self.one_q.iter().find(|&&p| bad(p)) {
            return Err(Error::InvalidNoise(format!("one-qubit probability {p}")));
        }
        if let Some((k, p)) = self.two_q.iter().find(|(_, &p)| bad(p)) {
            return Err(Error::InvalidNoise(format!("two-qubit probability {p} on {k:?}")));
        }
        for (q, m) in self.readout.iter().enumerate() {
            for col in 0..2 {
                if bad(m[0][col]) || bad(m[1][col]) || (m[0][col] + m[1][col] - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidNoise(format!(
                        "readout confusion of qubit {q} is not column-stochastic"
                    )));
                }
            }
        }
        self.cost.validate()
    }

    /// Every probability multiplied by `factor` and clipped to 1.
    pub fn scaled(&self, factor: f64) -> NoiseModel {
        let mut out = self.clone();
        out.one_q.iter_mut().for_each(|p| *p = (*p * factor).min(1.0));
        out.two_q.values_mut().for_each(|p| *p = (*p * factor).min(1.0));
        for m in &mut out.readout {
            *m = confusion((m[1][0] * factor).min(1.0), (m[0][1] * factor).min(1.0));
        }
        out
    }

    pub fn two_q_rate(&self, a: usize, b: usize) -> Result<f64> {
        self.two_q
            .get(&pair(a, b))
            .copied()
            .ok_or_else(|| Error::InvalidNoise(format!("no two-qubit rate for pair ({a},{b})")))
    }

    /// Channels charged to `gate` at `angle`. Repeated basis gates on the
    /// same support are merged: `count` applications of rate `p` compose to
    /// a single channel of rate `1 − (1−p)^count`. One-qubit basis gates of
    /// a two-qubit gate are charged to its second (target) qubit.
    pub fn channels(&self, gate: &Gate, angle: f64) -> Result<Vec<Channel>> {
        let count = self.cost.count(gate.kind, angle);
        let compose = |p: f64, n: u32| 1.0 - (1.0 - p).powi(n as i32);
        let mut out = Vec::with_capacity(2);
        let one_q_site = *gate.qubits.last().expect("gate has qubits");
        if one_q_site >= self.n_qubits {
            return Err(Error::QubitOutOfRange {
                qubit: one_q_site,
                width: self.n_qubits,
            });
        }
        if count.one_q > 0 {
            let p = compose(self.one_q[one_q_site], count.one_q);
            if p > 0.0 {
                out.push(Channel {
                    a: one_q_site,
                    b: None,
                    p,
                });
            }
        }
        if count.two_q > 0 {
            if gate.qubits.len() != 2 {
                return Err(Error::InvalidNoise(format!(
                    "{} charged two-qubit basis gates",
                    gate.kind
                )));
            }
            let rate = self.two_q_rate(gate.qubits[0], gate.qubits[1])?;
            let p = compose(rate, count.two_q);
            if p > 0.0 {
                out.push(Channel {
                    a: gate.qubits[0],
                    b: Some(gate.qubits[1]),
                    p,
                });
            }
        }
        Ok(out)
    }

    /// Coefficients `(a, b)` with `⟨Z_q⟩_read = a·p(0) + b·p(1)`.
    pub fn readout_coefficients(&self, q: usize) -> (f64, f64) {
        readout_coefficients(&self.readout[q])
    }
}

pub fn readout_coefficients(m: &Confusion) -> (f64, f64) {
    (m[0][0] - m[1][0], m[0][1] - m[1][1])
}
