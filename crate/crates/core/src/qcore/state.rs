use num_complex::Complex64 as C64;

use super::gate::{gate_matrix, Gate, GateMatrix};
use super::kernel::{apply_controlled, apply_single, apply_swap};
use crate::error::{Error, Result};

/// Pure state over `n_qubits`, little-endian amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub n_qubits: usize,
    pub amps: Vec<C64>,
}

impl StateVector {
    pub fn zero(n_qubits: usize) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = C64::new(1.0, 0.0);
        StateVector { n_qubits, amps }
    }

    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n_qubits];
        amps[index] = C64::new(1.0, 0.0);
        StateVector { n_qubits, amps }
    }

    /// Normalizes `amps`; fails on a zero vector or a non power-of-two length.
    pub fn from_amps(amps: Vec<C64>) -> Result<Self> {
        let len = amps.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::Dimension(format!("{len} amplitudes is not 2^n")));
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Dimension("zero or non-finite state".into()));
        }
        Ok(StateVector {
            n_qubits: len.trailing_zeros() as usize,
            amps: amps.into_iter().map(|a| a / norm).collect(),
        })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn apply_matrix(&mut self, m: &GateMatrix, qubits: &[usize]) {
        match m {
            GateMatrix::Single(u) => apply_single(&mut self.amps, qubits[0], u),
            GateMatrix::Controlled(u) => {
                apply_controlled(&mut self.amps, qubits[0], qubits[1], u)
            }
            GateMatrix::Swap => apply_swap(&mut self.amps, qubits[0], qubits[1]),
        }
    }

    /// `⟨Z_q⟩` for every qubit, without readout error.
    pub fn z_expectations(&self) -> Vec<f64> {
        (0..self.n_qubits)
            .map(|q| {
                self.amps
                    .iter()
                    .enumerate()
                    .map(|(i, a)| if i >> q & 1 == 0 { a.norm_sqr() } else { -a.norm_sqr() })
                    .sum()
            })
            .collect()
    }

    /// `|⟨self|other⟩|`, i.e. overlap magnitude, 1 for states equal up to
    /// global phase.
    pub fn overlap(&self, other: &StateVector) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum::<C64>()
            .norm()
    }
}

/// Applies `gate` at angle `theta` (ignored for CNOT and SWAP).
pub fn apply_gate_state(state: &StateVector, gate: &Gate, theta: f64) -> Result<StateVector> {
    gate.validate(state.n_qubits)?;
    let mut out = state.clone();
    out.apply_matrix(&gate_matrix(gate.kind, theta), &gate.qubits);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::gate::GateKind;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    #[test]
    fn rx_zero_is_identity() {
        let s = StateVector::from_amps(vec![
            C64::new(0.3, 0.1),
            C64::new(-0.2, 0.5),
            C64::new(0.7, 0.0),
            C64::new(0.0, -0.1),
        ])
        .unwrap();
        for q in 0..2 {
            let out = apply_gate_state(&s, &Gate::slot(GateKind::RX, &[q], 0), 0.0).unwrap();
            assert_eq!(out, s);
        }
    }

    #[test]
    fn ry_pi_flips() {
        let out =
            apply_gate_state(&StateVector::zero(1), &Gate::slot(GateKind::RY, &[0], 0), PI).unwrap();
        assert!(out.overlap(&StateVector::basis(1, 1)) > 1.0 - 1e-12);
    }

    #[test]
    fn controlled_ry_on_excited_control() {
        // q0 = 1, q1 = 0  ->  basis index 0b01
        let input = StateVector::basis(2, 0b01);
        let out =
            apply_gate_state(&input, &Gate::slot(GateKind::CRY, &[0, 1], 0), FRAC_PI_2).unwrap();
        // expected amplitudes on q0q1 strings (00, 01, 10, 11) = (0, 0, cos, sin);
        // q0q1 = "10" is index 0b01 and "11" is 0b11
        let expect = {
            let mut v = vec![C64::new(0.0, 0.0); 4];
            v[0b01] = C64::new(FRAC_PI_4.cos(), 0.0);
            v[0b11] = C64::new(FRAC_PI_4.sin(), 0.0);
            StateVector { n_qubits: 2, amps: v }
        };
        assert!(out.overlap(&expect) > 1.0 - 1e-12);
        for (a, b) in out.amps.iter().zip(&expect.amps) {
            assert!((a.norm() - b.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn control_off_leaves_state() {
        let input = StateVector::basis(2, 0b10);
        let out = apply_gate_state(&input, &Gate::slot(GateKind::CRX, &[0, 1], 0), 1.1).unwrap();
        assert_eq!(out, input);
    }

    #[test]
    fn cnot_and_swap() {
        let out = apply_gate_state(&StateVector::basis(2, 0b01), &Gate::cnot(0, 1), 0.0).unwrap();
        assert_eq!(out, StateVector::basis(2, 0b11));
        let out = apply_gate_state(&StateVector::basis(3, 0b001), &Gate::swap(0, 2), 0.0).unwrap();
        assert_eq!(out, StateVector::basis(3, 0b100));
    }

    #[test]
    fn out_of_range_qubit() {
        let r = apply_gate_state(&StateVector::zero(2), &Gate::slot(GateKind::RX, &[2], 0), 0.1);
        assert!(matches!(r, Err(Error::QubitOutOfRange { qubit: 2, width: 2 })));
    }
}
