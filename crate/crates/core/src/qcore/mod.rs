//! Parameterized-circuit IR, exact statevector and density-matrix
//! simulation, depolarizing noise and readout.
//!
//! Basis states are little-endian: qubit 0 is the least significant bit of
//! a basis-state index. Angles are radians.

pub mod circuit;
pub mod cost;
pub mod density;
pub mod gate;
mod kernel;
pub mod noise;
pub mod routing;
pub mod state;

pub use circuit::{pair, CircuitJson, GateJson, Pair, ParamCircuit};
pub use cost::{BasisCount, CostEntry, GateCostModel};
pub use density::DensityMatrix;
pub use gate::{
    circular_distance, gate_matrix, normalize_angle, Gate, GateKind, GateMatrix, ParamRef,
};
pub use noise::{confusion, Channel, Confusion, NoiseModel, PERFECT_READOUT};
pub use routing::route_circuit;
pub use state::{apply_gate_state, StateVector};

use crate::error::{Error, Result};

/// A gate resolved against a parameter vector and a noise model.
#[derive(Debug, Clone)]
pub struct Step {
    pub kind: GateKind,
    pub qubits: [usize; 2],
    pub arity: usize,
    pub slot: Option<usize>,
    pub angle: f64,
    pub channels: Vec<Channel>,
}

impl Step {
    pub fn qubits(&self) -> &[usize] {
        &self.qubits[..self.arity]
    }

    /// Rotations at exactly zero are the identity.
    pub fn is_identity(&self) -> bool {
        self.kind.is_rotation() && self.angle == 0.0
    }

    pub fn matrix_at(&self, angle: f64) -> GateMatrix {
        gate_matrix(self.kind, angle)
    }
}

/// Resolves angles and noise channels for every gate of `circuit`.
pub fn compile(
    circuit: &ParamCircuit,
    theta: &[f64],
    noise: Option<&NoiseModel>,
) -> Result<Vec<Step>> {
    circuit.check_params(theta)?;
    if let Some(n) = noise {
        if n.n_qubits < circuit.n_qubits {
            return Err(Error::InvalidNoise(format!(
                "noise model covers {} qubits, circuit needs {}",
                n.n_qubits, circuit.n_qubits
            )));
        }
    }
    circuit
        .gates
        .iter()
        .map(|g| {
            let angle = g.angle(theta);
            let mut qubits = [0usize; 2];
            qubits[..g.qubits.len()].copy_from_slice(&g.qubits);
            Ok(Step {
                kind: g.kind,
                qubits,
                arity: g.qubits.len(),
                slot: match g.param {
                    ParamRef::Slot(s) => Some(s),
                    _ => None,
                },
                angle,
                channels: match noise {
                    Some(n) => n.channels(g, angle)?,
                    None => Vec::new(),
                },
            })
        })
        .collect()
}

/// Runs `circuit` on a pure state.
pub fn simulate_noiseless(
    circuit: &ParamCircuit,
    theta: &[f64],
    input: &StateVector,
) -> Result<StateVector> {
    circuit.check_params(theta)?;
    if input.n_qubits != circuit.n_qubits {
        return Err(Error::Dimension(format!(
            "input has {} qubits, circuit {}",
            input.n_qubits, circuit.n_qubits
        )));
    }
    let mut psi = input.clone();
    for g in &circuit.gates {
        let angle = g.angle(theta);
        if g.kind.is_rotation() && angle == 0.0 {
            continue;
        }
        psi.apply_matrix(&gate_matrix(g.kind, angle), &g.qubits);
    }
    Ok(psi)
}

pub(crate) fn run_steps(rho: &mut DensityMatrix, steps: &[Step]) {
    for s in steps {
        if !s.is_identity() {
            rho.apply_unitary(&s.matrix_at(s.angle), s.qubits());
        }
        for ch in &s.channels {
            let (q, k) = ch.qubits();
            rho.depolarize(&q[..k], ch.p);
        }
    }
}

/// Runs `circuit` on a density matrix, following each gate's unitary with
/// one depolarizing channel per basis-gate occurrence charged by
/// `cost_model`.
pub fn simulate_noisy(
    circuit: &ParamCircuit,
    theta: &[f64],
    noise: &NoiseModel,
    cost_model: &GateCostModel,
    input: &DensityMatrix,
) -> Result<DensityMatrix> {
    noise.validate()?;
    if input.n_qubits != circuit.n_qubits {
        return Err(Error::Dimension(format!(
            "input has {} qubits, circuit {}",
            input.n_qubits, circuit.n_qubits
        )));
    }
    let charged;
    let noise = if *cost_model == noise.cost {
        noise
    } else {
        charged = NoiseModel {
            cost: cost_model.clone(),
            ..noise.clone()
        };
        &charged
    };
    let steps = compile(circuit, theta, Some(noise))?;
    let mut rho = input.clone();
    run_steps(&mut rho, &steps);
    Ok(rho)
}

/// `⟨Z_q⟩` per qubit after the readout confusion of `noise` (perfect
/// readout when `None`).
pub fn measure_z_expectations(rho: &DensityMatrix, noise: Option<&NoiseModel>) -> Vec<f64> {
    rho.marginal_one()
        .into_iter()
        .enumerate()
        .map(|(q, p1)| {
            let (a, b) = match noise {
                Some(n) if q < n.readout.len() => n.readout_coefficients(q),
                _ => (1.0, -1.0),
            };
            (a * (1.0 - p1) + b * p1).clamp(-1.0, 1.0)
        })
        .collect()
}
