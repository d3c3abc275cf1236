use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{confusion, pair, GateCostModel, NoiseModel, Pair};

/// One day of device calibration data.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSnapshot {
    pub date: String,
    /// Single-qubit gate error per physical qubit.
    pub sq_error: BTreeMap<usize, f64>,
    /// Two-qubit gate error per coupled pair (smaller index first).
    pub tq_error: BTreeMap<Pair, f64>,
    /// Readout flip probabilities `(p(1|0), p(0|1))` per qubit.
    pub ro_error: BTreeMap<usize, (f64, f64)>,
}

impl CalibrationSnapshot {
    /// Snapshot with every rate set to zero.
    pub fn zero(date: &str, n_qubits: usize, coupling: impl IntoIterator<Item = Pair>) -> Self {
        CalibrationSnapshot {
            date: date.to_string(),
            sq_error: (0..n_qubits).map(|q| (q, 0.0)).collect(),
            tq_error: coupling.into_iter().map(|(a, b)| (pair(a, b), 0.0)).collect(),
            ro_error: (0..n_qubits).map(|q| (q, (0.0, 0.0))).collect(),
        }
    }

    pub fn qubits(&self) -> BTreeSet<usize> {
        self.sq_error.keys().copied().collect()
    }

    pub fn coupling(&self) -> BTreeSet<Pair> {
        self.tq_error.keys().copied().collect()
    }

    pub fn n_qubits(&self) -> usize {
        self.sq_error.keys().next_back().map_or(0, |q| q + 1)
    }

    pub fn value(&self, label: Label) -> Option<f64> {
        match label {
            Label::Sq(q) => self.sq_error.get(&q).copied(),
            Label::Tq(a, b) => self.tq_error.get(&pair(a, b)).copied(),
            Label::Ro10(q) => self.ro_error.get(&q).map(|r| r.0),
            Label::Ro01(q) => self.ro_error.get(&q).map(|r| r.1),
        }
    }

    pub fn value_mut(&mut self, label: Label) -> Option<&mut f64> {
        match label {
            Label::Sq(q) => self.sq_error.get_mut(&q),
            Label::Tq(a, b) => self.tq_error.get_mut(&pair(a, b)),
            Label::Ro10(q) => self.ro_error.get_mut(&q).map(|r| &mut r.0),
            Label::Ro01(q) => self.ro_error.get_mut(&q).map(|r| &mut r.1),
        }
    }

    /// Rates in `[0, 1]`, consistent qubit sets, connected coupling graph.
    pub fn validate(&self) -> Result<()> {
        let err = |field: String, msg: String| Error::Calibration {
            day: self.date.clone(),
            field,
            msg,
        };
        let check = |field: String, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(err(field, format!("rate {v} outside [0, 1]")))
            }
        };
        for (q, &v) in &self.sq_error {
            check(format!("sq_error[{q}]"), v)?;
        }
        for (&(a, b), &v) in &self.tq_error {
            check(format!("tq_error[{a}-{b}]"), v)?;
            if a == b {
                return Err(err(format!("tq_error[{a}-{b}]"), "self pair".into()));
            }
            for q in [a, b] {
                if !self.sq_error.contains_key(&q) {
                    return Err(err(
                        format!("tq_error[{a}-{b}]"),
                        format!("qubit {q} has no sq_error"),
                    ));
                }
            }
        }
        for (q, &(p10, p01)) in &self.ro_error {
            check(format!("ro_error[{q}].p10"), p10)?;
            check(format!("ro_error[{q}].p01"), p01)?;
        }
        if self.qubits() != self.ro_error.keys().copied().collect() {
            return Err(err("ro_error".into(), "qubit set differs from sq_error".into()));
        }
        if !is_connected(&self.qubits(), &self.coupling()) {
            return Err(err("tq_error".into(), "coupling graph is disconnected".into()));
        }
        Ok(())
    }

    pub fn schema(&self) -> Arc<Schema> {
        Arc::new(Schema::canonical(&self.qubits(), &self.coupling()))
    }
}

fn is_connected(qubits: &BTreeSet<usize>, coupling: &BTreeSet<Pair>) -> bool {
    let Some(&start) = qubits.iter().next() else {
        return true;
    };
    let mut seen = BTreeSet::from([start]);
    let mut stack = vec![start];
    while let Some(u) = stack.pop() {
        for &(a, b) in coupling {
            let next = if a == u {
                b
            } else if b == u {
                a
            } else {
                continue;
            };
            if seen.insert(next) {
                stack.push(next);
            }
        }
    }
    seen.len() == qubits.len()
}

/// Field of a calibration vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Sq(usize),
    Tq(usize, usize),
    Ro10(usize),
    Ro01(usize),
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Sq(q) => write!(f, "sq_{q}"),
            Label::Tq(a, b) => write!(f, "tq_{a}-{b}"),
            Label::Ro10(q) => write!(f, "ro10_{q}"),
            Label::Ro01(q) => write!(f, "ro01_{q}"),
        }
    }
}

/// Ordered field list shared by every vector compared together.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Schema {
    pub labels: Vec<Label>,
}

impl Schema {
    /// Canonical order: single-qubit errors by qubit, two-qubit errors by
    /// lexicographic pair, then readout `p(1|0)` by qubit, then `p(0|1)`.
    pub fn canonical(qubits: &BTreeSet<usize>, pairs: &BTreeSet<Pair>) -> Schema {
        let mut labels: Vec<Label> = qubits.iter().map(|&q| Label::Sq(q)).collect();
        labels.extend(pairs.iter().map(|&(a, b)| Label::Tq(a, b)));
        labels.extend(qubits.iter().map(|&q| Label::Ro10(q)));
        labels.extend(qubits.iter().map(|&q| Label::Ro01(q)));
        Schema { labels }
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }
}

/// Fixed-order flattening of a snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationVector {
    pub values: Vec<f64>,
    pub schema: Arc<Schema>,
}

impl CalibrationVector {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn same_schema(&self, other: &CalibrationVector) -> bool {
        Arc::ptr_eq(&self.schema, &other.schema) || self.schema == other.schema
    }
}

/// Flattens `snapshot` in `schema` order.
pub fn vectorize(snapshot: &CalibrationSnapshot, schema: &Arc<Schema>) -> Result<CalibrationVector> {
    let values = schema
        .labels
        .iter()
        .map(|&l| {
            snapshot.value(l).ok_or_else(|| {
                Error::MissingCalibration(format!("day {} lacks field {l}", snapshot.date))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CalibrationVector {
        values,
        schema: Arc::clone(schema),
    })
}

/// Noise model with one depolarizing rate per qubit for every one-qubit
/// basis gate, one per coupled pair for two-qubit basis gates, and readout
/// confusion from the flip probabilities.
pub fn build_noise_model(snapshot: &CalibrationSnapshot) -> Result<NoiseModel> {
    build_noise_model_with_cost(snapshot, GateCostModel::default())
}

pub fn build_noise_model_with_cost(
    snapshot: &CalibrationSnapshot,
    cost: GateCostModel,
) -> Result<NoiseModel> {
    snapshot.validate()?;
    let n = snapshot.n_qubits();
    let mut one_q = vec![0.0; n];
    let mut readout = vec![confusion(0.0, 0.0); n];
    for q in 0..n {
        one_q[q] = *snapshot.sq_error.get(&q).ok_or_else(|| {
            Error::MissingCalibration(format!("day {}: qubit {q} missing", snapshot.date))
        })?;
        let (p10, p01) = snapshot.ro_error[&q];
        readout[q] = confusion(p10, p01);
    }
    let model = NoiseModel {
        n_qubits: n,
        one_q,
        two_q: snapshot.tq_error.clone(),
        readout,
        cost,
    };
    model.validate()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn sample(date: &str) -> CalibrationSnapshot {
        CalibrationSnapshot {
            date: date.into(),
            sq_error: [(0, 0.001), (1, 0.002)].into_iter().collect(),
            tq_error: [((0, 1), 0.03)].into_iter().collect(),
            ro_error: [(0, (0.02, 0.04)), (1, (0.01, 0.05))].into_iter().collect(),
        }
    }

    #[test]
    fn dimension_and_order() {
        let s = sample("d");
        let schema = s.schema();
        assert_eq!(schema.dim(), 7);
        let v = vectorize(&s, &schema).unwrap();
        assert_eq!(v.values, vec![0.001, 0.002, 0.03, 0.02, 0.01, 0.04, 0.05]);
        assert_eq!(v, vectorize(&sample("other"), &schema).unwrap());
    }

    #[test]
    fn missing_label() {
        let mut s = sample("d");
        let schema = s.schema();
        s.tq_error.clear();
        assert!(matches!(vectorize(&s, &schema), Err(Error::MissingCalibration(_))));
    }

    #[test]
    fn noise_model_mapping() {
        let zero = CalibrationSnapshot::zero("z", 2, [(0, 1)]);
        let m = build_noise_model(&zero).unwrap();
        assert!(m.one_q.iter().all(|&p| p == 0.0));
        assert!(m.two_q.values().all(|&p| p == 0.0));

        let m = build_noise_model(&sample("d")).unwrap();
        assert_eq!(m.one_q[0], 0.001);
        assert_eq!(m.two_q[&(0, 1)], 0.03);
        assert!((m.readout[1][0][1] - 0.05).abs() < 1e-15);
        assert!((m.readout[0][1][0] - 0.02).abs() < 1e-15);
    }

    #[test]
    fn validation_names_day_and_field() {
        let mut s = sample("2021-08-10");
        s.sq_error.insert(1, 1.3);
        let msg = s.validate().unwrap_err().to_string();
        assert!(msg.contains("2021-08-10") && msg.contains("sq_error[1]"), "{msg}");
    }

    #[test]
    fn disconnected_rejected() {
        let mut s = CalibrationSnapshot::zero("d", 4, [(0, 1), (2, 3)]);
        assert!(s.validate().is_err());
        s.tq_error.insert((1, 2), 0.0);
        assert!(s.validate().is_ok());
    }
}
