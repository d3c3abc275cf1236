use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::gate::{Gate, GateKind, ParamRef};
use crate::error::{Error, Result};

/// Undirected physical-qubit pair, stored with the smaller index first.
pub type Pair = (usize, usize);

pub fn pair(a: usize, b: usize) -> Pair {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Parameterized gate list over physical qubits.
///
/// `initial_layout[l]` is the physical qubit holding logical qubit `l` when
/// the circuit starts and `final_layout[l]` where it ends up after any
/// routing swaps. Both are the identity for circuits built directly.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamCircuit {
    pub n_qubits: usize,
    pub gates: Vec<Gate>,
    pub n_params: usize,
    pub coupling: BTreeSet<Pair>,
    pub initial_layout: Vec<usize>,
    pub final_layout: Vec<usize>,
}

impl ParamCircuit {
    /// Builds and validates a circuit with identity layouts.
    pub fn new(
        n_qubits: usize,
        gates: Vec<Gate>,
        coupling: impl IntoIterator<Item = Pair>,
    ) -> Result<Self> {
        let n_params = gates
            .iter()
            .filter(|g| matches!(g.param, ParamRef::Slot(_)))
            .count();
        let c = ParamCircuit {
            n_qubits,
            gates,
            n_params,
            coupling: coupling.into_iter().map(|(a, b)| pair(a, b)).collect(),
            initial_layout: (0..n_qubits).collect(),
            final_layout: (0..n_qubits).collect(),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn empty(n_qubits: usize) -> Self {
        ParamCircuit {
            n_qubits,
            gates: Vec::new(),
            n_params: 0,
            coupling: BTreeSet::new(),
            initial_layout: (0..n_qubits).collect(),
            final_layout: (0..n_qubits).collect(),
        }
    }

    /// Gate, slot and layout invariants. Coupling conformance is checked
    /// separately by [`ParamCircuit::check_routed`].
    pub fn validate(&self) -> Result<()> {
        let mut seen = vec![false; self.n_params];
        for g in &self.gates {
            g.validate(self.n_qubits)?;
            if let ParamRef::Slot(s) = g.param {
                if s >= self.n_params {
                    return Err(Error::InvalidCircuit(format!(
                        "slot {s} outside 0..{}",
                        self.n_params
                    )));
                }
                if seen[s] {
                    return Err(Error::InvalidCircuit(format!("slot {s} used twice")));
                }
                seen[s] = true;
            }
        }
        if let Some(s) = seen.iter().position(|u| !u) {
            return Err(Error::InvalidCircuit(format!("slot {s} unused")));
        }
        for &(a, b) in &self.coupling {
            if a == b || b >= self.n_qubits {
                return Err(Error::InvalidCircuit(format!("bad coupling pair ({a},{b})")));
            }
        }
        for layout in [&self.initial_layout, &self.final_layout] {
            let set: BTreeSet<_> = layout.iter().collect();
            if set.len() != layout.len() || layout.iter().any(|&p| p >= self.n_qubits) {
                return Err(Error::InvalidCircuit("layout is not injective".into()));
            }
        }
        if self.initial_layout.len() != self.final_layout.len() {
            return Err(Error::InvalidCircuit("layout lengths differ".into()));
        }
        Ok(())
    }

    /// Every two-qubit gate must sit on a coupled pair.
    pub fn check_routed(&self) -> Result<()> {
        for g in self.gates.iter().filter(|g| g.is_two_qubit()) {
            if !self.coupling.contains(&pair(g.qubits[0], g.qubits[1])) {
                return Err(Error::InvalidCircuit(format!(
                    "{} on uncoupled pair ({},{})",
                    g.kind, g.qubits[0], g.qubits[1]
                )));
            }
        }
        Ok(())
    }

    pub fn is_routed(&self) -> bool {
        self.check_routed().is_ok()
    }

    /// Index of the gate that owns each slot.
    pub fn slot_owners(&self) -> Vec<usize> {
        let mut owners = vec![0; self.n_params];
        for (i, g) in self.gates.iter().enumerate() {
            if let ParamRef::Slot(s) = g.param {
                owners[s] = i;
            }
        }
        owners
    }

    /// Returns a copy with `prefix` gates (typically fixed-angle encoders)
    /// placed before the existing ones.
    pub fn with_prefix(&self, prefix: &[Gate]) -> ParamCircuit {
        let mut c = self.clone();
        c.gates = prefix.iter().cloned().chain(self.gates.iter().cloned()).collect();
        c
    }

    pub fn check_params(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.n_params {
            return Err(Error::ParamLength {
                expected: self.n_params,
                got: theta.len(),
            });
        }
        Ok(())
    }

    pub fn to_json(&self) -> CircuitJson {
        CircuitJson {
            n_qubits: self.n_qubits,
            coupling: self.coupling.iter().map(|&(a, b)| [a, b]).collect(),
            gates: self
                .gates
                .iter()
                .map(|g| GateJson {
                    kind: g.kind,
                    qubits: g.qubits.clone(),
                    slot: match g.param {
                        ParamRef::Slot(s) => Some(s),
                        _ => None,
                    },
                    angle: match g.param {
                        ParamRef::Angle(a) => Some(a),
                        _ => None,
                    },
                })
                .collect(),
            initial_layout: Some(self.initial_layout.clone()),
            final_layout: Some(self.final_layout.clone()),
        }
    }

    pub fn from_json(j: &CircuitJson) -> Result<Self> {
        let gates = j
            .gates
            .iter()
            .map(|g| {
                let param = match (g.slot, g.angle) {
                    (Some(s), None) => ParamRef::Slot(s),
                    (None, Some(a)) => ParamRef::Angle(super::gate::normalize_angle(a)),
                    (None, None) => ParamRef::None,
                    (Some(_), Some(_)) => {
                        return Err(Error::InvalidGate("gate has both slot and angle".into()))
                    }
                };
                Ok(Gate {
                    kind: g.kind,
                    qubits: g.qubits.clone(),
                    param,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut c = ParamCircuit::new(
            j.n_qubits,
            gates,
            j.coupling.iter().map(|p| pair(p[0], p[1])),
        )?;
        if let Some(l) = &j.initial_layout {
            c.initial_layout = l.clone();
        }
        if let Some(l) = &j.final_layout {
            c.final_layout = l.clone();
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let j: CircuitJson = serde_json::from_str(&text).map_err(|e| Error::parse(path, e))?;
        Self::from_json(&j)
    }

    pub fn count_kind(&self, kind: GateKind) -> usize {
        self.gates.iter().filter(|g| g.kind == kind).count()
    }
}

/// On-disk circuit layout: angles in radians, qubit 0 is the least
/// significant bit of a basis-state index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitJson {
    pub n_qubits: usize,
    pub coupling: Vec<[usize; 2]>,
    pub gates: Vec<GateJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_layout: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_layout: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateJson {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slot: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slot_invariants() {
        let ok = ParamCircuit::new(
            2,
            vec![
                Gate::slot(GateKind::RY, &[0], 1),
                Gate::slot(GateKind::CRY, &[0, 1], 0),
            ],
            [(0, 1)],
        );
        assert!(ok.is_ok());
        let dup = ParamCircuit::new(
            2,
            vec![
                Gate::slot(GateKind::RY, &[0], 0),
                Gate::slot(GateKind::RY, &[1], 0),
            ],
            [(0, 1)],
        );
        assert!(dup.is_err());
        let gap = ParamCircuit::new(1, vec![Gate::slot(GateKind::RY, &[0], 1)], []);
        assert!(gap.is_err());
    }

    #[test]
    fn routed_check() {
        let c = ParamCircuit::new(3, vec![Gate::cnot(0, 2)], [(0, 1), (1, 2)]).unwrap();
        assert!(!c.is_routed());
        let c = ParamCircuit::new(3, vec![Gate::cnot(2, 1)], [(0, 1), (1, 2)]).unwrap();
        assert!(c.is_routed());
    }

    #[test]
    fn json_roundtrip() {
        let c = ParamCircuit::new(
            2,
            vec![
                Gate::fixed(GateKind::RX, &[1], -0.5),
                Gate::slot(GateKind::CRZ, &[1, 0], 0),
                Gate::swap(0, 1),
            ],
            [(0, 1)],
        )
        .unwrap();
        let text = serde_json::to_string(&c.to_json()).unwrap();
        let back = ParamCircuit::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(c, back);
    }
}
